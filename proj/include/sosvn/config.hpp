#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "sosvn/classical.hpp"
#include "sosvn/grid.hpp"
#include "sosvn/image.hpp"
#include "sosvn/phantoms.hpp"
#include "sosvn/vn.hpp"
#include "sosvn/vn_train.hpp"
#include "sosvn/wavesim.hpp"

namespace sosvn {

struct SchemeSpec {
  std::string layout = "nearby_pairs";  // nearby_pairs | across_aperture
  int pairs = 6;         // nearby_pairs
  int separation = 8;    // nearby_pairs
  int transmits = 4;     // across_aperture

  TxPairScheme build(const Probe& probe) const;
};

/// Every tunable of one named profile.
struct Profile {
  std::string name = "desk";
  Grid grid;
  Probe probe;
  SchemeSpec scheme;
  WaveSimConfig wave;
  int ray_factor = 2;  // ray simulation upsampling
  TrainingMapConfig maps;
  VNConfig vn;
  TrainConfig train;
  AwtvConfig awtv;
  LbfgsConfig lbfgs;
  Window window;

  RayMatrix ray_matrix() const;
};

/// Built-in defaults of `desk` or `paper`.
Profile builtin_profile(const std::string& name);

/// Built-in defaults overridden by the named profile section of a JSON file
/// (comments allowed). An empty path returns the built-in profile.
Profile load_profile(const std::filesystem::path& file, const std::string& name);

/// Applies a JSON object of overrides; unknown keys are rejected.
void apply_overrides(Profile& p, const std::string& json_text);

}  // namespace sosvn
