// Command-line front end: simulation, training, reconstruction, evaluation.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sosvn/classical.hpp"
#include "sosvn/config.hpp"
#include "sosvn/container.hpp"
#include "sosvn/datagen.hpp"
#include "sosvn/image.hpp"
#include "sosvn/metrics.hpp"
#include "sosvn/raysim.hpp"
#include "sosvn/vn.hpp"
#include "sosvn/vn_train.hpp"

namespace fs = std::filesystem;
using namespace sosvn;

namespace {

enum Exit { kOk = 0, kUsage = 2, kMissingFile = 3, kVersion = 4, kRuntime = 5 };

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::string config;
  std::uint64_t seed = 1;
  std::string profile = "desk";
  std::string out;
};

std::string one_line(std::string s) {
  for (char& c : s)
    if (c == '\n' || c == '\r') c = ' ';
  return s;
}

int fail(const char* code, int status, const std::string& msg) {
  std::cerr << "error: code=" << code << " msg=" << one_line(msg) << "\n";
  return status;
}

fs::path require_out(const Globals& g) {
  if (g.out.empty()) throw UsageError("--out is required");
  return g.out;
}

Profile profile_of(const Globals& g) { return load_profile(g.config, g.profile); }

std::vector<SoSMap> maps_for(const Globals& g, const Profile& p, const std::string& maps_dir, std::size_t n) {
  if (!maps_dir.empty()) {
    auto set = read_maps(maps_dir);
    if (!(set.grid == p.grid)) throw std::runtime_error("map grid does not match the profile grid");
    if (n > 0 && n < set.maps.size()) set.maps.resize(n);
    return set.maps;
  }
  if (n == 0) throw UsageError("--n must be >= 1");
  return generate_maps(n, g.seed, p);
}

void report(std::size_t done, std::size_t total) { std::fprintf(stderr, "  sample %zu/%zu\n", done, total); }

std::string variant_note(const std::string& v) {
  if (v.empty()) return "profile";
  return v;
}

Checkpoint make_checkpoint(const VNParams& params, const RayMatrix& L, std::uint64_t step, const Adam* adam,
                           const RangeTracker* tracker) {
  Checkpoint ck;
  ck.params = params;
  ck.step = step;
  ck.grid = L.grid();
  ck.probe = L.probe();
  ck.scheme = L.scheme();
  if (adam && tracker) {
    ck.has_optimizer = true;
    ck.adam_m = adam->first_moment();
    ck.adam_v = adam->second_moment();
    ck.adam_t = adam->steps();
    ck.range_averages = tracker->averages();
    ck.range_batches = tracker->batches();
  }
  return ck;
}

void check_same_setup(const Dataset& ds, const Checkpoint& ck) {
  if (!(ds.grid == ck.grid) || ds.scheme.tx_elements != ck.scheme.tx_elements || ds.scheme.pairs != ck.scheme.pairs)
    throw std::runtime_error("dataset geometry differs from the checkpoint geometry");
}

std::vector<double> read_values(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw MissingFileError("cannot open " + file.string());
  std::vector<double> v;
  std::string tok;
  while (in >> tok) {
    for (char& c : tok)
      if (c == ',') c = ' ';
    std::istringstream ss(tok);
    double x;
    while (ss >> x) v.push_back(x);
  }
  return v;
}

// A map set, or the ground-truth maps of a dataset.
MapSet maps_or_truths(const fs::path& dir) {
  const fs::path manifest = dir / "manifest.txt";
  if (fs::exists(manifest) && Manifest::read(manifest).get("kind") == "dataset") {
    Dataset ds = read_dataset(dir);
    if (ds.truths.empty()) throw std::runtime_error("dataset " + dir.string() + " has no ground truth");
    MapSet out;
    out.grid = ds.grid;
    out.maps = std::move(ds.truths);
    return out;
  }
  return read_maps(dir);
}

void print_box(const BoxStats& b) {
  std::printf("median=%.6g q25=%.6g q75=%.6g lower_whisker=%.6g upper_whisker=%.6g outliers=%zu\n", b.median, b.q25,
              b.q75, b.lower_whisker, b.upper_whisker, b.outliers.size());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Speed-of-sound reconstruction from differential time of flight"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "JSON configuration file (comments allowed)");
  app.add_option("--seed", g.seed, "Base seed");
  app.add_option("--profile", g.profile, "Profile name")->check(CLI::IsMember({"desk", "paper"}));
  app.add_option("--out", g.out, "Output directory");

  std::function<void()> action;

  // phantom gen
  auto* phantom = app.add_subcommand("phantom", "Speed-of-sound maps");
  phantom->require_subcommand(1);
  auto* pgen = phantom->add_subcommand("gen", "Training-distribution maps or the primitive test suite");
  std::size_t n_maps = 16;
  bool suite = false;
  pgen->add_option("--n", n_maps, "Number of maps");
  pgen->add_flag("--suite", suite, "Write the 32 test primitives instead");
  pgen->callback([&] {
    action = [&] {
      const Profile p = profile_of(g);
      MapSet set;
      set.grid = p.grid;
      if (suite) {
        for (const auto& spec : default_test_suite()) set.maps.push_back(sample_test_primitive(spec, p.grid));
      } else {
        set.maps = generate_maps(n_maps, g.seed, p);
      }
      set.extra.emplace_back("seed", std::to_string(g.seed));
      write_maps(require_out(g), set);
      std::printf("wrote %zu maps to %s\n", set.maps.size(), g.out.c_str());
    };
  });

  // sim
  auto* sim = app.add_subcommand("sim", "Measurement simulation");
  sim->require_subcommand(1);
  std::size_t n_samples = 16;
  std::string maps_dir, mask_kind = "uniform";
  double rate = 0.0, eta = 0.0;
  int factor = 0;

  auto* sray = sim->add_subcommand("ray", "Straight-ray measurements");
  sray->add_option("--n", n_samples, "Number of samples");
  sray->add_option("--maps", maps_dir, "Simulate these maps instead of drawing new ones");
  sray->add_option("--factor", factor, "Upsampling factor (default from profile)");
  sray->add_option("--rate", rate, "Undersampling rate applied after simulation")->check(CLI::Range(0.0, 1.0));
  sray->add_option("--mask", mask_kind, "Mask type")->check(CLI::IsMember({"uniform", "patchy"}));
  sray->add_option("--eta", eta, "Noise level")->check(CLI::Range(0.0, 1.0));
  sray->callback([&] {
    action = [&] {
      Profile p = profile_of(g);
      if (factor > 0) p.ray_factor = factor;
      const RayMatrix L = p.ray_matrix();
      const auto maps = maps_for(g, p, maps_dir, n_samples);
      Dataset ds = simulate_ray_dataset(maps, p, L, g.seed);
      for (std::size_t i = 0; i < ds.measurements.size(); ++i) {
        auto& ms = ds.measurements[i];
        if (rate > 0.0) {
          const std::uint64_t s = g.seed + 1000003 * (i + 1);
          apply_mask(ms, mask_kind == "patchy" ? gen_mask_patchy(p.grid, L.n_pairs(), rate, s)
                                               : gen_mask_uniform(ms.size(), rate, s));
        }
        if (eta > 0.0) add_noise(ms, eta, g.seed + 2000003 * (i + 1), p.train.augment.sigma0);
      }
      write_dataset(require_out(g), ds);
      std::printf("wrote %zu ray samples to %s\n", ds.measurements.size(), g.out.c_str());
    };
  });

  auto* swave = sim->add_subcommand("wave-delays", "Relative transmit delays from FDTD arrivals");
  swave->add_option("--n", n_samples, "Number of samples");
  swave->add_option("--maps", maps_dir, "Simulate these maps instead of drawing new ones");
  swave->callback([&] {
    action = [&] {
      const Profile p = profile_of(g);
      const auto maps = maps_for(g, p, maps_dir, n_samples);
      const Dataset ds = simulate_wave_delay_dataset(maps, p, g.seed, report);
      write_dataset(require_out(g), ds);
      std::printf("wrote %zu wave-delay samples to %s\n", ds.measurements.size(), g.out.c_str());
    };
  });

  auto* sfull = sim->add_subcommand("full-pipeline", "FDTD channel data, beamforming and displacement tracking");
  sfull->add_option("--n", n_samples, "Number of samples");
  sfull->add_option("--maps", maps_dir, "Simulate these maps instead of drawing new ones");
  sfull->callback([&] {
    action = [&] {
      const Profile p = profile_of(g);
      const auto maps = maps_for(g, p, maps_dir, n_samples);
      const Dataset ds = simulate_full_pipeline_dataset(maps, p, g.seed, report);
      write_dataset(require_out(g), ds);
      std::printf("wrote %zu full-pipeline samples to %s\n", ds.measurements.size(), g.out.c_str());
    };
  });

  auto* scal = sim->add_subcommand("calibrate-noise", "Noise scale sigma0 from clean ray data");
  scal->add_option("--n", n_samples, "Number of samples");
  scal->callback([&] {
    action = [&] {
      const Profile p = profile_of(g);
      const RayMatrix L = p.ray_matrix();
      const Dataset ds = simulate_ray_dataset(generate_maps(n_samples, g.seed, p), p, L, g.seed);
      std::printf("sigma0=%s\n", format_double(calibrate_sigma0(ds, L)).c_str());
    };
  });

  auto* smat = sim->add_subcommand("ray-matrix", "Export the ray matrix as triplets");
  smat->callback([&] {
    action = [&] {
      const RayMatrix L = profile_of(g).ray_matrix();
      write_ray_matrix(require_out(g), L);
      std::printf("wrote %zu x %zu matrix, %zu nonzeros\n", L.rows(), L.cols(), L.nonzeros());
    };
  });

  // train
  auto* tr = app.add_subcommand("train", "Train the variational network");
  std::vector<std::string> data_dirs;
  std::string variant, resume;
  int steps = -1;
  tr->add_option("--data", data_dirs, "Training datasets (any sources)")->required();
  tr->add_option("--variant", variant, "Training preset")
      ->check(CLI::IsMember({"raw", "exp-no-smooth", "exp-smooth", "exp-smooth-mixed"}));
  tr->add_option("--steps", steps, "Optimizer steps (default from profile)");
  tr->add_option("--resume", resume, "Continue from a checkpoint");
  tr->callback([&] {
    action = [&] {
      const Profile p = profile_of(g);
      TrainConfig cfg = p.train;
      cfg.seed = g.seed;
      if (steps >= 0) cfg.steps = steps;
      apply_variant(cfg, variant);
      const fs::path out = require_out(g);
      fs::create_directories(out);

      std::map<SourceTag, TrainingSource> by_tag;
      std::optional<Dataset> first;
      for (const auto& dir : data_dirs) {
        Dataset ds = read_dataset(dir);
        if (first && (!(ds.grid == first->grid) || ds.scheme.pairs != first->scheme.pairs ||
                      ds.scheme.tx_elements != first->scheme.tx_elements))
          throw std::runtime_error("training datasets disagree on geometry");
        if (!first) first = ds;
        auto src = to_training_source(std::move(ds));
        auto& dst = by_tag[src.tag];
        dst.tag = src.tag;
        dst.measurements.insert(dst.measurements.end(), src.measurements.begin(), src.measurements.end());
        dst.truths.insert(dst.truths.end(), src.truths.begin(), src.truths.end());
      }
      std::vector<TrainingSource> sources;
      for (auto& [tag, src] : by_tag) sources.push_back(std::move(src));
      const RayMatrix L(first->grid, first->probe, first->scheme);

      std::ofstream csv(out / "loss.csv");
      csv << "step,data,smooth,total";
      for (const auto& e : cfg.mix.entries) csv << ",n_" << to_string(e.tag);
      csv << "\n";
      const auto t0 = std::chrono::steady_clock::now();
      auto on_step = [&](const StepRecord& r, const VNParams& params, const Adam& adam, const RangeTracker& tracker) {
        csv << r.step << "," << format_double(r.loss.data) << "," << format_double(r.loss.smooth) << ","
            << format_double(r.loss.total());
        for (int c : r.drawn) csv << "," << c;
        csv << "\n";
        if (cfg.checkpoint_every > 0 && r.step % cfg.checkpoint_every == 0) {
          char name[32];
          std::snprintf(name, sizeof name, "step_%07d", r.step);
          write_checkpoint(out / "checkpoints" / name, make_checkpoint(params, L, adam.steps(), &adam, &tracker));
        }
        if (r.step % 50 == 0 || r.step == cfg.steps) {
          const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
          std::fprintf(stderr, "  step %d loss %.6g (%.0f s)\n", r.step, r.loss.total(), s);
        }
      };
      TrainResult res;
      if (!resume.empty()) {
        Checkpoint ck = read_checkpoint(resume);
        check_same_setup(*first, ck);
        res = train_from(std::move(ck.params), cfg, L, sources, on_step);
      } else {
        res = train(p.vn, cfg, L, sources, on_step);
      }
      write_checkpoint(out / "checkpoint", make_checkpoint(res.params, L, res.optimizer.steps(), &res.optimizer,
                                                           &res.tracker));
      std::printf("trained %d steps (variant %s); checkpoint in %s\n", cfg.steps, variant_note(variant).c_str(),
                  (out / "checkpoint").c_str());
    };
  });

  // reconstruct
  auto* rec = app.add_subcommand("reconstruct", "Reconstruct speed-of-sound maps");
  std::string method, data_dir, ckpt_dir;
  rec->add_option("--method", method, "vn | lbfgs")->required()->check(CLI::IsMember({"vn", "lbfgs"}));
  rec->add_option("--data", data_dir, "Dataset to reconstruct")->required();
  rec->add_option("--checkpoint", ckpt_dir, "Network checkpoint (vn)");
  rec->callback([&] {
    action = [&] {
      const Profile p = profile_of(g);
      const Dataset ds = read_dataset(data_dir);
      const RayMatrix L(ds.grid, ds.probe, ds.scheme);
      MapSet out;
      out.grid = ds.grid;
      out.extra.emplace_back("method", method);
      out.extra.emplace_back("source", to_string(ds.source));
      const std::size_t n = ds.measurements.size();
      out.maps.resize(n);
      out.k_star.resize(n);
      out.s_star.resize(n);
      out.diverged.resize(n);
      out.seconds.resize(n);
      if (method == "vn") {
        if (ckpt_dir.empty()) throw UsageError("--checkpoint is required for --method vn");
        const Checkpoint ck = read_checkpoint(ckpt_dir);
        check_same_setup(ds, ck);
        for (std::size_t i = 0; i < n; ++i) {
          const auto t0 = std::chrono::steady_clock::now();
          const VNOutput o = vn_forward(ck.params, L, ds.measurements[i]);
          out.seconds[i] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
          out.maps[i] = o.map;
          out.k_star[i] = o.standardization.k_star;
          out.s_star[i] = o.standardization.s_star;
          out.diverged[i] = o.diverged;
        }
      } else {
        for (std::size_t i = 0; i < n; ++i) {
          const ClassicalResult r = reconstruct_classical(ds.measurements[i], L, p.awtv, p.lbfgs);
          out.maps[i] = r.map;
          out.k_star[i] = r.standardization.k_star;
          out.s_star[i] = r.standardization.s_star;
          out.diverged[i] = r.diverged;
          out.seconds[i] = r.seconds;
        }
      }
      write_maps(require_out(g), out);
      std::printf("reconstructed %zu samples with %s into %s\n", n, method.c_str(), g.out.c_str());
    };
  });

  // eval
  auto* ev = app.add_subcommand("eval", "Metrics");
  ev->require_subcommand(1);
  std::string truth_dir, est_dir, values_file;
  auto load_pair = [&](std::vector<SoSMap>& truth, std::vector<SoSMap>& est) {
    truth = maps_or_truths(truth_dir).maps;
    est = read_maps(est_dir).maps;
    if (truth.size() != est.size()) throw std::runtime_error("truth and estimate sample counts differ");
  };

  auto* ermse = ev->add_subcommand("rmse", "Per-sample RMSE in m/s");
  ermse->add_option("--truth", truth_dir, "Dataset or map set with ground truth")->required();
  ermse->add_option("--estimate", est_dir, "Reconstructed maps")->required();
  ermse->callback([&] {
    action = [&] {
      std::vector<SoSMap> truth, est;
      load_pair(truth, est);
      std::vector<double> values;
      for (std::size_t i = 0; i < truth.size(); ++i) {
        values.push_back(rmse(truth[i].values, est[i].values));
        std::printf("sample=%zu rmse=%.6g\n", i, values.back());
      }
      print_box(boxplot_stats(values));
      if (!g.out.empty()) {
        fs::create_directories(g.out);
        std::ofstream f(fs::path(g.out) / "rmse.csv");
        f << "sample,rmse\n";
        for (std::size_t i = 0; i < values.size(); ++i) f << i << "," << format_double(values[i]) << "\n";
      }
    };
  });

  auto* ecnr = ev->add_subcommand("cnr", "Contrast-to-noise ratio on the ground-truth inclusion");
  ecnr->add_option("--truth", truth_dir, "Dataset or map set with ground truth")->required();
  ecnr->add_option("--estimate", est_dir, "Reconstructed maps")->required();
  ecnr->callback([&] {
    action = [&] {
      std::vector<SoSMap> truth, est;
      load_pair(truth, est);
      for (std::size_t i = 0; i < truth.size(); ++i) {
        if (!truth[i].has_inclusion()) {
          std::printf("sample=%zu cnr=none\n", i);
          continue;
        }
        const auto bg = default_background(truth[i].inclusion, truth[i].grid);
        const CnrResult c = cnr(est[i].values, truth[i].inclusion, bg);
        std::printf("sample=%zu cnr=%s\n", i, c.infinite ? "inf" : format_double(c.value).c_str());
      }
    };
  });

  auto* ebox = ev->add_subcommand("box", "Boxplot statistics of a list of values");
  ebox->add_option("--values", values_file, "Whitespace or comma separated numbers")->required();
  ebox->callback([&] {
    action = [&] {
      const auto v = read_values(values_file);
      if (v.empty()) throw UsageError("no values in " + values_file);
      const BoxStats b = boxplot_stats(v);
      print_box(b);
      for (double o : b.outliers) std::printf("outlier=%.6g\n", o);
    };
  });

  // export-image
  auto* ex = app.add_subcommand("export-image", "Write maps as 8-bit PGM images");
  std::vector<std::string> image_maps;
  int index = -1;
  std::vector<double> window;
  ex->add_option("--maps", image_maps, "Map sets or datasets (ground truth); several give side-by-side montages")->required();
  ex->add_option("--index", index, "Only this sample");
  ex->add_option("--window", window, "lo hi in m/s (default from profile)")->expected(2);
  ex->callback([&] {
    action = [&] {
      const Profile p = profile_of(g);
      Window w = p.window;
      if (window.size() == 2) w = {window[0], window[1]};
      if (!(w.hi > w.lo)) throw UsageError("window minimum must be below its maximum");
      std::vector<MapSet> sets;
      for (const auto& d : image_maps) sets.push_back(maps_or_truths(d));
      const std::size_t n = sets.front().maps.size();
      for (const auto& s : sets)
        if (s.maps.size() != n) throw std::runtime_error("map sets differ in sample count");
      const fs::path out = require_out(g);
      fs::create_directories(out);
      Manifest m;
      m.set("format_version", kFormatVersion);
      m.set("kind", "images");
      m.set("window_lo", w.lo);
      m.set("window_hi", w.hi);
      std::size_t written = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (index >= 0 && i != static_cast<std::size_t>(index)) continue;
        std::vector<GrayImage> panels;
        for (const auto& s : sets) panels.push_back(render_map(s.maps[i].values, s.grid, w));
        char name[32];
        std::snprintf(name, sizeof name, "map_%04zu.pgm", i);
        write_pgm(out / name, panels.size() == 1 ? panels.front() : montage(panels));
        ++written;
      }
      m.set("images", static_cast<std::uint64_t>(written));
      m.write(out / "manifest.txt");
      std::printf("wrote %zu images to %s\n", written, out.c_str());
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", kUsage, e.what());
  }

  try {
    if (action) action();
    return kOk;
  } catch (const UsageError& e) {
    return fail("usage", kUsage, e.what());
  } catch (const MissingFileError& e) {
    return fail("missing_file", kMissingFile, e.what());
  } catch (const VersionMismatchError& e) {
    return fail("version_mismatch", kVersion, e.what());
  } catch (const std::exception& e) {
    return fail("runtime", kRuntime, e.what());
  }
}
