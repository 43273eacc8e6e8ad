#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "sosvn/geometry.hpp"
#include "sosvn/measurement.hpp"
#include "sosvn/phantoms.hpp"
#include "sosvn/vn.hpp"

namespace sosvn {

inline constexpr int kFormatVersion = 1;

/// A required file or directory does not exist.
class MissingFileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The manifest was written by an incompatible format version.
class VersionMismatchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Ordered key=value text manifest.
class Manifest {
 public:
  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, double value);
  void set(const std::string& key, std::int64_t value);
  void set(const std::string& key, std::uint64_t value);
  void set(const std::string& key, int value) { set(key, static_cast<std::int64_t>(value)); }

  bool has(const std::string& key) const;
  const std::string& get(const std::string& key) const;
  double get_double(const std::string& key) const;
  std::int64_t get_int(const std::string& key) const;
  std::uint64_t get_uint(const std::string& key) const;

  std::string text() const;
  static Manifest parse(const std::string& text);

  void write(const std::filesystem::path& file) const;
  static Manifest read(const std::filesystem::path& file);

  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

/// Shortest text that parses back to the same double.
std::string format_double(double v);

/// Flat little-endian array files. The manifest records `array.<name>` as
/// "<dtype> <count>" and reading checks the byte count.
class ArrayDir {
 public:
  explicit ArrayDir(std::filesystem::path dir) : dir_(std::move(dir)) {}

  void write_f64(Manifest& m, const std::string& name, const std::vector<double>& v) const;
  void write_f32(Manifest& m, const std::string& name, const std::vector<float>& v) const;
  void write_u8(Manifest& m, const std::string& name, const std::vector<std::uint8_t>& v) const;
  void write_u64(Manifest& m, const std::string& name, const std::vector<std::uint64_t>& v) const;

  std::vector<double> read_f64(const Manifest& m, const std::string& name) const;
  std::vector<float> read_f32(const Manifest& m, const std::string& name) const;
  std::vector<std::uint8_t> read_u8(const Manifest& m, const std::string& name) const;
  std::vector<std::uint64_t> read_u64(const Manifest& m, const std::string& name) const;

 private:
  std::filesystem::path dir_;
};

/// Opens `dir/manifest.txt`, checking presence, kind and format version.
Manifest open_manifest(const std::filesystem::path& dir, const std::string& kind);

void put_grid(Manifest& m, const Grid& g);
Grid get_grid(const Manifest& m);
void put_setup(Manifest& m, const Probe& probe, const TxPairScheme& scheme);
void get_setup(const Manifest& m, Probe& probe, TxPairScheme& scheme);

/// Measurements plus ground truth of one simulation source.
struct Dataset {
  Grid grid;
  Probe probe;
  TxPairScheme scheme;
  SourceTag source = SourceTag::ray;
  std::uint64_t seed = 0;
  std::vector<MeasurementSet> measurements;
  std::vector<SoSMap> truths;  // one per measurement set, or empty
  std::vector<std::pair<std::string, std::string>> extra;  // free-form manifest entries
};

void write_dataset(const std::filesystem::path& dir, const Dataset& ds);
Dataset read_dataset(const std::filesystem::path& dir);

/// SoS maps without measurements (phantoms, reconstructions).
struct MapSet {
  Grid grid;
  std::vector<SoSMap> maps;
  std::vector<std::pair<std::string, std::string>> extra;
  std::vector<double> k_star, s_star;   // per map when the maps are reconstructions
  std::vector<std::uint8_t> diverged;
  std::vector<double> seconds;
};

void write_maps(const std::filesystem::path& dir, const MapSet& ms);
MapSet read_maps(const std::filesystem::path& dir);

/// Ray matrix as (u32 row, u32 col, f64 length) little-endian triplets.
void write_ray_matrix(const std::filesystem::path& dir, const RayMatrix& L);
std::vector<Triplet> read_ray_matrix_triplets(const std::filesystem::path& dir);

/// Checkpoint: network parameters and optional optimizer/tracker state.
struct Checkpoint {
  VNParams params;
  std::uint64_t step = 0;
  Probe probe;
  TxPairScheme scheme;
  Grid grid;
  bool has_optimizer = false;
  VNParams adam_m, adam_v;
  std::uint64_t adam_t = 0;
  std::vector<std::vector<double>> range_averages;
  std::uint64_t range_batches = 0;
};

void write_checkpoint(const std::filesystem::path& dir, const Checkpoint& ck);
Checkpoint read_checkpoint(const std::filesystem::path& dir);

}  // namespace sosvn
