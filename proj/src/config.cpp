#include "sosvn/config.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "sosvn/container.hpp"

namespace sosvn {

using nlohmann::json;

TxPairScheme SchemeSpec::build(const Probe& probe) const {
  if (layout == "nearby_pairs") return TxPairScheme::nearby_pairs(probe, pairs, separation);
  if (layout == "across_aperture") return TxPairScheme::across_aperture(probe, transmits);
  throw std::invalid_argument("unknown scheme layout: " + layout);
}

RayMatrix Profile::ray_matrix() const { return RayMatrix(grid, probe, scheme.build(probe)); }

Profile builtin_profile(const std::string& name) {
  Profile p;
  p.name = name;
  p.probe = Probe::centered_on(p.grid);
  // Calibrated so eta = 0.1 gives 20 dB against the mean squared residual
  // scale of ray training data (sosvn sim calibrate-noise).
  p.train.augment.sigma0 = 1.2e-16;
  if (name == "desk") {
    p.wave = WaveSimConfig::desk();
    p.vn.layers = 5;
    p.vn.filters = 8;
    p.train.steps = 2000;
    p.train.adam.learning_rate = 1e-2;
    p.train.mix = MixSpec::mixed();
  } else if (name == "paper") {
    p.wave = WaveSimConfig::paper();
    p.vn.layers = 20;
    p.vn.filters = 32;
    p.train.steps = 120000;
    p.train.mix = MixSpec::mixed();
  } else {
    throw std::invalid_argument("unknown profile: " + name + " (expected desk or paper)");
  }
  return p;
}

namespace {

// Reads optional keys of one JSON object and rejects the ones nobody asked for.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw std::invalid_argument(path_ + " must be an object");
  }
  template <class T>
  void opt(const std::string& key, T& field) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      field = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw std::invalid_argument(path_ + "." + key + ": " + e.what());
    }
  }
  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }
  const json& at(const std::string& key) const { return j_.at(key); }
  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) throw std::invalid_argument("unknown config key " + path_ + "." + k);
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

DerivativeKernel parse_kernel(const std::string& s) {
  if (s == "forward") return DerivativeKernel::forward;
  if (s == "sobel") return DerivativeKernel::sobel;
  if (s == "roberts") return DerivativeKernel::roberts;
  throw std::invalid_argument("unknown derivative kernel: " + s);
}

void apply_json(Profile& p, const json& j) {
  Section top(j, "profile");
  if (top.has("grid")) {
    Section s(top.at("grid"), "grid");
    s.opt("n_z", p.grid.n_z);
    s.opt("n_x", p.grid.n_x);
    s.opt("dz", p.grid.dz);
    s.opt("dx", p.grid.dx);
    s.finish();
    p.probe = Probe::centered_on(p.grid);
  }
  if (top.has("probe")) {
    Section s(top.at("probe"), "probe");
    s.opt("n_elements", p.probe.n_elements);
    s.opt("pitch", p.probe.pitch);
    s.opt("f_c", p.probe.f_c);
    s.opt("center_x", p.probe.center_x);
    s.finish();
  }
  if (top.has("scheme")) {
    Section s(top.at("scheme"), "scheme");
    s.opt("layout", p.scheme.layout);
    s.opt("pairs", p.scheme.pairs);
    s.opt("separation", p.scheme.separation);
    s.opt("transmits", p.scheme.transmits);
    s.finish();
  }
  if (top.has("wave")) {
    Section s(top.at("wave"), "wave");
    auto& w = p.wave;
    s.opt("f_c", w.f_c);
    s.opt("refine", w.refine);
    s.opt("sponge", w.sponge);
    s.opt("sponge_strength", w.sponge_strength);
    s.opt("cfl", w.cfl);
    s.opt("record_stride", w.record_stride);
    s.opt("density", w.density);
    s.opt("scatter_amplitude", w.scatter_amplitude);
    s.opt("assumed_sos", w.assumed_sos);
    s.opt("axial_oversampling", w.axial_oversampling);
    s.opt("window_wavelengths", w.window_wavelengths);
    s.opt("search", w.search);
    s.opt("ncc_threshold", w.ncc_threshold);
    s.finish();
  }
  if (top.has("ray")) {
    Section s(top.at("ray"), "ray");
    s.opt("factor", p.ray_factor);
    s.opt("sigma0", p.train.augment.sigma0);
    s.opt("u_min", p.train.augment.u_min);
    s.opt("u_max", p.train.augment.u_max);
    s.opt("eta_max", p.train.augment.eta_max);
    s.finish();
  }
  if (top.has("maps")) {
    Section s(top.at("maps"), "maps");
    auto& m = p.maps;
    s.opt("inclusion_probability", m.inclusion_probability);
    s.opt("smooth_probability", m.smooth_probability);
    s.opt("background_min", m.background_min);
    s.opt("background_max", m.background_max);
    s.opt("background_variation", m.background_variation);
    s.opt("contrast_min", m.contrast_min);
    s.opt("contrast_max", m.contrast_max);
    s.opt("axis_min", m.axis_min);
    s.opt("axis_max", m.axis_max);
    s.opt("margin", m.margin);
    s.opt("harmonics", m.harmonics);
    s.opt("deformation_max", m.deformation_max);
    s.opt("blur_sigma", m.blur_sigma);
    s.finish();
  }
  if (top.has("network")) {
    Section s(top.at("network"), "network");
    auto& v = p.vn;
    s.opt("layers", v.layers);
    s.opt("filters", v.filters);
    s.opt("kernel_size", v.kernel_size);
    s.opt("knots", v.knots);
    s.opt("chi_knots", v.chi_knots);
    s.opt("psi_slope", v.psi_slope);
    s.opt("phi_slope", v.phi_slope);
    s.opt("chi_data", v.chi_data);
    s.opt("chi_reg", v.chi_reg);
    s.opt("gamma_raw", v.gamma_raw);
    s.opt("data_step", v.data_step);
    s.finish();
  }
  if (top.has("training")) {
    Section s(top.at("training"), "training");
    auto& t = p.train;
    s.opt("steps", t.steps);
    s.opt("seed", t.seed);
    s.opt("learning_rate", t.adam.learning_rate);
    s.opt("beta1", t.adam.beta1);
    s.opt("beta2", t.adam.beta2);
    s.opt("epsilon", t.adam.epsilon);
    s.opt("tau", t.loss.tau);
    s.opt("last_layer_only", t.loss.last_layer_only);
    s.opt("lambda_phi", t.loss.lambda_phi);
    s.opt("lambda_psi", t.loss.lambda_psi);
    s.opt("smoothing_eps", t.loss.eps);
    s.opt("range_interval", t.range_interval);
    s.opt("checkpoint_every", t.checkpoint_every);
    if (s.has("mix")) {
      Section m(s.at("mix"), "training.mix");
      MixSpec mix;
      for (const char* tag : {"ray", "full_pipeline", "wave_delay"}) {
        int count = 0;
        m.opt(tag, count);
        if (count > 0) mix.entries.push_back({parse_source_tag(tag), count});
      }
      m.finish();
      mix.validate();
      t.mix = mix;
    }
    s.finish();
  }
  if (top.has("classical")) {
    Section s(top.at("classical"), "classical");
    s.opt("lambda", p.awtv.lambda);
    s.opt("epsilon", p.awtv.epsilon);
    s.opt("angles_deg", p.awtv.angles_deg);
    s.opt("weights", p.awtv.weights);
    std::string kernel;
    s.opt("kernel", kernel);
    if (!kernel.empty()) p.awtv.kernel = parse_kernel(kernel);
    s.opt("memory", p.lbfgs.memory);
    s.opt("max_iterations", p.lbfgs.max_iterations);
    s.opt("gradient_tolerance", p.lbfgs.gradient_tolerance);
    s.finish();
  }
  if (top.has("window")) {
    Section s(top.at("window"), "window");
    s.opt("lo", p.window.lo);
    s.opt("hi", p.window.hi);
    s.finish();
  }
  top.finish();

  p.grid.validate();
  p.probe.validate();
  p.scheme.build(p.probe).validate(p.probe);
  p.wave.validate();
  p.vn.validate();
  p.train.loss.validate();
  p.train.mix.validate();
  p.awtv.validate();
  p.lbfgs.validate();
  if (p.ray_factor < 1) throw std::invalid_argument("ray.factor must be >= 1");
  if (!(p.window.hi > p.window.lo)) throw std::invalid_argument("window.lo must be below window.hi");
}

json parse_jsonc(const std::string& text) {
  try {
    return json::parse(text, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config parse error: ") + e.what());
  }
}

}  // namespace

void apply_overrides(Profile& p, const std::string& json_text) { apply_json(p, parse_jsonc(json_text)); }

Profile load_profile(const std::filesystem::path& file, const std::string& name) {
  Profile p = builtin_profile(name);
  if (file.empty()) return p;
  std::ifstream in(file);
  if (!in) throw MissingFileError("cannot open config " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  const json j = parse_jsonc(ss.str());
  if (!j.is_object() || !j.contains("profiles")) throw std::invalid_argument("config has no \"profiles\" object");
  const json& profiles = j.at("profiles");
  if (!profiles.contains(name)) throw std::invalid_argument("config has no profile named " + name);
  apply_json(p, profiles.at(name));
  return p;
}

}  // namespace sosvn
