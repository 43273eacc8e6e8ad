#include "sosvn/vn_train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "sosvn/raysim.hpp"

namespace sosvn {

namespace {

std::vector<std::vector<double>*> arrays_of(VNParams& p) {
  std::vector<std::vector<double>*> out;
  for (auto& layer : p.layers) layer.for_each_array([&](const char*, std::vector<double>& v) { out.push_back(&v); });
  return out;
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  // splitmix64 finalizer over a combined word
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double second_difference_penalty(std::span<const double> y, double lambda, double eps, std::span<double> grad) {
  if (lambda == 0.0) return 0.0;
  double total = 0.0;
  for (std::size_t k = 1; k + 1 < y.size(); ++k) {
    const double d = y[k - 1] - 2.0 * y[k] + y[k + 1];
    const double s = std::sqrt(d * d + eps);
    total += s;
    if (!grad.empty()) {
      const double g = lambda * d / s;
      grad[k - 1] += g;
      grad[k] -= 2.0 * g;
      grad[k + 1] += g;
    }
  }
  return lambda * total;
}

}  // namespace

void LossConfig::validate() const {
  if (!std::isfinite(tau) || tau < 0.0) throw std::invalid_argument("tau must be finite and >= 0");
  if (!std::isfinite(lambda_phi) || lambda_phi < 0.0) throw std::invalid_argument("lambda_phi must be finite and >= 0");
  if (!std::isfinite(lambda_psi) || lambda_psi < 0.0) throw std::invalid_argument("lambda_psi must be finite and >= 0");
  if (!(eps > 0.0) || !std::isfinite(eps)) throw std::invalid_argument("eps must be positive");
}

double LossConfig::layer_weight(int layer, int n_layers) const {
  if (last_layer_only) return layer == n_layers ? 1.0 : 0.0;
  return std::exp(-tau * (n_layers - layer));
}

double loss_exp(std::span<const std::vector<double>> iterates, std::span<const double> target, const LossConfig& cfg) {
  const int n = static_cast<int>(iterates.size());
  double total = 0.0;
  for (int i = 1; i <= n; ++i) {
    const auto& x = iterates[i - 1];
    if (x.size() != target.size()) throw std::invalid_argument("iterate and target sizes differ");
    const double w = cfg.layer_weight(i, n);
    if (w == 0.0) continue;
    double err = 0.0;
    for (std::size_t p = 0; p < x.size(); ++p) {
      const double e = x[p] - target[p];
      err += std::sqrt(e * e + kAbsSmoothing);
    }
    total += w * err;
  }
  return total;
}

double loss_smooth(const VNParams& params, const LossConfig& cfg, VNParams* grad) {
  const std::size_t K = params.config.knots;
  double total = 0.0;
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    const auto& layer = params.layers[i];
    std::span<double> gpsi, gphi;
    if (grad) {
      gpsi = grad->layers[i].psi;
      gphi = grad->layers[i].phi;
    }
    total += second_difference_penalty(layer.psi, cfg.lambda_psi, cfg.eps, gpsi);
    for (int j = 0; j < params.config.filters; ++j) {
      std::span<const double> y(layer.phi.data() + j * K, K);
      std::span<double> g = grad ? gphi.subspan(j * K, K) : std::span<double>{};
      total += second_difference_penalty(y, cfg.lambda_phi, cfg.eps, g);
    }
  }
  return total;
}

BatchLoss vn_backward(const VNParams& params, const RayMatrix& L, const VNTape& tape,
                      std::span<const VNSample* const> samples, const LossConfig& cfg, VNParams& grad) {
  cfg.validate();
  const std::size_t B = tape.batch;
  if (samples.size() != B) throw std::invalid_argument("sample count does not match the tape");
  const int I = static_cast<int>(params.layers.size());
  const std::size_t n_px = L.cols(), n_r = L.rows();
  const int k = params.config.kernel_size, F = params.config.filters;
  const int n_z = params.shape.n_z, n_x = params.shape.n_x;
  const std::size_t nk = static_cast<std::size_t>(k) * k;
  const std::size_t n_valid = static_cast<std::size_t>(n_z - k + 1) * (n_x - k + 1);
  const std::size_t K = params.config.knots;

  grad = params.zeros_like();
  BatchLoss loss;

  std::vector<double> xbar(n_px * B, 0.0), mbar(n_px * B, 0.0);
  std::vector<double> dgbar(n_px * B), rgbar(n_px * B), vbar(n_r * B), rbar(n_r * B), tmp(n_px * B);
  std::vector<double> e(n_valid * B), cbar(n_valid * B), z(n_valid * B), kbar(nk);

  for (int i = I; i >= 1; --i) {
    // loss on x_i
    const double w = cfg.layer_weight(i, I);
    const auto& xi = tape.x[i];
    for (std::size_t s = 0; s < B; ++s) {
      const auto& target = samples[s]->target;
      if (target.size() != n_px) throw std::invalid_argument("sample has no target of matching size");
    }
    if (w != 0.0) {
      for (std::size_t p = 0; p < n_px; ++p)
        for (std::size_t s = 0; s < B; ++s) {
          const double err = xi[p * B + s] - samples[s]->target[p];
          const double a = std::sqrt(err * err + kAbsSmoothing);
          loss.data += w * a / static_cast<double>(B);
          xbar[p * B + s] += w * err / a / static_cast<double>(B);
        }
    }

    const VNLayerParams& layer = params.layers[i - 1];
    VNLayerParams& g = grad.layers[i - 1];
    const auto& xin = tape.x[i - 1];
    const auto& min = tape.mom[i - 1];
    const auto& dg = tape.data_grad[i - 1];
    const auto& rg = tape.reg_grad[i - 1];
    const double gamma = layer.gamma();

    // x_i = x_{i-1} - m_i
    for (std::size_t q = 0; q < mbar.size(); ++q) mbar[q] -= xbar[q];
    // m_i = gamma m_{i-1} + chi_d dg + chi_r rg
    double gbar = 0.0;
    for (std::size_t q = 0; q < mbar.size(); ++q) gbar += mbar[q] * min[q];
    g.gamma_raw[0] += gbar * gamma * (1.0 - gamma);

    for (std::size_t s = 0; s < B; ++s) {
      const double u = tape.u[s];
      const double cd = pwl::eval(layer.chi_data, 0.0, 1.0, u);
      const double cr = pwl::eval(layer.chi_reg, 0.0, 1.0, u);
      double sd = 0.0, sr = 0.0;
      for (std::size_t p = 0; p < n_px; ++p) {
        const std::size_t q = p * B + s;
        sd += mbar[q] * dg[q];
        sr += mbar[q] * rg[q];
        dgbar[q] = cd * mbar[q];
        rgbar[q] = cr * mbar[q];
      }
      pwl::accumulate_knot_grad(g.chi_data, 0.0, 1.0, u, sd);
      pwl::accumulate_knot_grad(g.chi_reg, 0.0, 1.0, u, sr);
    }

    // data term: dg = L^T (M P psi(P r)), r = L x_{i-1} - d
    L.multiply(dgbar, vbar, B);
    const auto& resid = tape.resid[i - 1];
    const double rp = layer.psi_range;
    for (std::size_t r = 0; r < n_r; ++r) {
      const double P = std::exp(layer.log_precond[r]);
      double pbar = 0.0;
      for (std::size_t s = 0; s < B; ++s) {
        const std::size_t q = r * B + s;
        if (tape.mask[q] == 0.0) {
          rbar[q] = 0.0;
          continue;
        }
        const double res = resid[q];
        const double Q = P * res;
        double slope = 0.0;
        const double psi = pwl::eval(layer.psi, -rp, rp, Q, slope);
        pbar += vbar[q] * (psi + P * slope * res);
        pwl::accumulate_knot_grad(g.psi, -rp, rp, Q, vbar[q] * P);
        rbar[q] = vbar[q] * P * P * slope;
      }
      g.log_precond[r] += pbar * P;
    }
    L.multiply_transpose(rbar, tmp, B);
    for (std::size_t q = 0; q < xbar.size(); ++q) xbar[q] += tmp[q];

    // regularizer: rg = sum_j K_j^T (W_j phi_j(K_j x))
    const auto& filt = tape.filt[i - 1];
    const auto& kstd = tape.kernels_std[i - 1];
    for (int j = 0; j < F; ++j) {
      std::span<const double> kj(kstd.data() + j * nk, nk);
      std::span<const double> phi(layer.phi.data() + j * K, K);
      std::span<double> gphi(g.phi.data() + j * K, K);
      const double r = layer.phi_range[j];
      const double* c = filt.data() + j * n_valid * B;
      correlate_valid(kj, k, rgbar, n_z, n_x, B, e);
      for (std::size_t a = 0; a < n_valid; ++a) {
        const double wr = layer.weight_root[j * n_valid + a];
        const double W = wr * wr;
        double wbar = 0.0;
        for (std::size_t s = 0; s < B; ++s) {
          const std::size_t q = a * B + s;
          double slope = 0.0;
          const double f = pwl::eval(phi, -r, r, c[q], slope);
          wbar += e[q] * f;
          pwl::accumulate_knot_grad(gphi, -r, r, c[q], W * e[q]);
          cbar[q] = W * e[q] * slope;
          z[q] = W * f;
        }
        g.weight_root[j * n_valid + a] += 2.0 * wr * wbar;
      }
      correlate_valid_adjoint(kj, k, cbar, n_z, n_x, B, xbar);

      std::fill(kbar.begin(), kbar.end(), 0.0);
      correlate_kernel_grad(rgbar, z, k, n_z, n_x, B, kbar);
      correlate_kernel_grad(xin, cbar, k, n_z, n_x, B, kbar);

      // back through standardization
      std::span<const double> raw(layer.kernels.data() + j * nk, nk);
      const double nkd = static_cast<double>(nk);
      const double mu = std::accumulate(raw.begin(), raw.end(), 0.0) / nkd;
      double var = 0.0;
      for (double v : raw) var += (v - mu) * (v - mu);
      const double sigma = std::sqrt(var / nkd);
      double sum_bar = 0.0, dot = 0.0;
      for (std::size_t t = 0; t < nk; ++t) {
        sum_bar += kbar[t];
        dot += kbar[t] * (raw[t] - mu) / sigma;
      }
      for (std::size_t t = 0; t < nk; ++t) {
        const double shat = (raw[t] - mu) / sigma;
        g.kernels[j * nk + t] += (kbar[t] - sum_bar / nkd - shat * dot / nkd) / sigma;
      }
      g.kernel_mean[j] += sum_bar;
    }

    for (std::size_t q = 0; q < mbar.size(); ++q) mbar[q] *= gamma;
  }

  loss.smooth = loss_smooth(params, cfg, &grad);
  return loss;
}

BatchLoss vn_loss_and_grad(const VNParams& params, const RayMatrix& L, std::span<const VNSample* const> samples,
                           const LossConfig& cfg, VNParams& grad) {
  const VNTape tape = vn_forward_batch(params, L, samples);
  return vn_backward(params, L, tape, samples, cfg, grad);
}

Adam::Adam(const VNParams& like, AdamConfig cfg) : cfg_(cfg), m_(like.zeros_like()), v_(like.zeros_like()) {}

void Adam::step(VNParams& params, const VNParams& grad) {
  ++t_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  auto p = arrays_of(params);
  auto g = arrays_of(const_cast<VNParams&>(grad));
  auto m = arrays_of(m_);
  auto v = arrays_of(v_);
  if (p.size() != g.size() || p.size() != m.size()) throw std::invalid_argument("optimizer state does not match the parameters");
  for (std::size_t a = 0; a < p.size(); ++a) {
    auto& pa = *p[a];
    const auto& ga = *g[a];
    auto& ma = *m[a];
    auto& va = *v[a];
    for (std::size_t q = 0; q < pa.size(); ++q) {
      ma[q] = cfg_.beta1 * ma[q] + (1.0 - cfg_.beta1) * ga[q];
      va[q] = cfg_.beta2 * va[q] + (1.0 - cfg_.beta2) * ga[q] * ga[q];
      pa[q] -= cfg_.learning_rate * (ma[q] / c1) / (std::sqrt(va[q] / c2) + cfg_.epsilon);
    }
  }
}

void Adam::restore(VNParams m, VNParams v, std::uint64_t t) {
  m_ = std::move(m);
  v_ = std::move(v);
  t_ = t;
}

RangeTracker::RangeTracker(const VNParams& params, int interval) : interval_(interval) {
  if (interval < 1) throw std::invalid_argument("range interval must be >= 1");
  for (const auto& layer : params.layers) {
    std::vector<double> a{layer.psi_range};
    a.insert(a.end(), layer.phi_range.begin(), layer.phi_range.end());
    avg_.push_back(std::move(a));
  }
}

void RangeTracker::observe(VNParams& params, const std::vector<std::vector<double>>& levels) {
  if (levels.size() != avg_.size()) throw std::invalid_argument("level layout does not match the tracker");
  for (std::size_t i = 0; i < avg_.size(); ++i)
    for (std::size_t q = 0; q < avg_[i].size(); ++q) avg_[i][q] = track_level(avg_[i][q], levels[i][q]);
  ++n_;
  if (n_ % static_cast<std::uint64_t>(interval_) != 0) return;
  for (std::size_t i = 0; i < avg_.size(); ++i) {
    auto& layer = params.layers[i];
    layer.psi_range = update_range(avg_[i][0], layer.psi_range);
    for (std::size_t j = 0; j < layer.phi_range.size(); ++j)
      layer.phi_range[j] = update_range(avg_[i][j + 1], layer.phi_range[j]);
  }
}

void RangeTracker::restore(std::vector<std::vector<double>> averages, std::uint64_t batches) {
  avg_ = std::move(averages);
  n_ = batches;
}

int MixSpec::batch_size() const {
  int n = 0;
  for (const auto& e : entries) n += e.count;
  return n;
}

void MixSpec::validate() const {
  if (entries.empty()) throw std::invalid_argument("mix has no sources");
  for (const auto& e : entries)
    if (e.count < 0) throw std::invalid_argument("mix counts must be >= 0");
  if (batch_size() < 1) throw std::invalid_argument("batch size must be >= 1");
}

MixSpec MixSpec::ray_only(int batch) { return {{{SourceTag::ray, batch}}}; }

MixSpec MixSpec::mixed() {
  return {{{SourceTag::ray, 11}, {SourceTag::full_pipeline, 4}, {SourceTag::wave_delay, 1}}};
}

MeasurementSet augment_ray_sample(const MeasurementSet& clean, const Grid& grid, std::size_t n_pairs,
                                  const RayAugmentation& augment, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> rate(augment.u_min, augment.u_max);
  std::uniform_real_distribution<double> level(0.0, augment.eta_max);
  std::bernoulli_distribution coin(0.5);
  const double u = rate(rng);
  const bool patchy = coin(rng);
  const double eta = level(rng);
  const std::uint64_t mask_seed = rng();
  const std::uint64_t noise_seed = rng();

  MeasurementSet ms = clean;
  const auto mask = patchy ? gen_mask_patchy(grid, n_pairs, u, mask_seed) : gen_mask_uniform(ms.size(), u, mask_seed);
  apply_mask(ms, mask);
  if (eta > 0.0 && augment.sigma0 > 0.0) add_noise(ms, eta, noise_seed, augment.sigma0);
  return ms;
}

BatchSampler::BatchSampler(std::span<const TrainingSource> sources, const MixSpec& mix, const RayAugmentation& augment,
                           const RayMatrix& L, std::uint64_t seed, OffsetMode mode)
    : sources_(sources), mix_(mix), augment_(augment), L_(&L), mode_(mode), seed_(seed) {
  mix_.validate();
  for (std::size_t e = 0; e < mix_.entries.size(); ++e) {
    const auto& src = source(mix_.entries[e].tag);
    if (mix_.entries[e].count > 0 && src.measurements.empty())
      throw std::invalid_argument(std::string("no training samples for source ") + to_string(src.tag));
    if (src.measurements.size() != src.truths.size()) throw std::invalid_argument("every training sample needs a truth map");
    order_.emplace_back();
    cursor_.push_back(0);
    epoch_.push_back(0);
  }
}

const TrainingSource& BatchSampler::source(SourceTag tag) const {
  for (const auto& s : sources_)
    if (s.tag == tag) return s;
  throw std::invalid_argument(std::string("mix names a missing source: ") + to_string(tag));
}

std::size_t BatchSampler::draw_index(std::size_t entry) {
  auto& order = order_[entry];
  const std::size_t n = source(mix_.entries[entry].tag).measurements.size();
  if (order.empty() || cursor_[entry] == order.size()) {
    order.resize(n);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(mix_seed(mix_seed(seed_, entry), epoch_[entry]++));
    std::shuffle(order.begin(), order.end(), rng);
    cursor_[entry] = 0;
  }
  return order[cursor_[entry]++];
}

std::vector<VNSample> BatchSampler::next(std::vector<int>* drawn) {
  std::vector<VNSample> batch;
  if (drawn) drawn->assign(mix_.entries.size(), 0);
  for (std::size_t e = 0; e < mix_.entries.size(); ++e) {
    const auto& src = source(mix_.entries[e].tag);
    for (int c = 0; c < mix_.entries[e].count; ++c) {
      const std::size_t idx = draw_index(e);
      const std::uint64_t draw_seed = mix_seed(seed_ ^ 0x5a5a5a5aULL, draws_++);
      if (src.tag == SourceTag::ray) {
        const auto ms = augment_ray_sample(src.measurements[idx], L_->grid(), L_->n_pairs(), augment_, draw_seed);
        batch.push_back(make_sample(ms, *L_, &src.truths[idx], mode_));
      } else {
        batch.push_back(make_sample(src.measurements[idx], *L_, &src.truths[idx], mode_));
      }
      if (drawn) ++(*drawn)[e];
    }
  }
  return batch;
}

namespace {

std::vector<const VNSample*> pointers(const std::vector<VNSample>& batch) {
  std::vector<const VNSample*> out;
  for (const auto& s : batch) out.push_back(&s);
  return out;
}

void check_finite(const VNParams& grad, int step) {
  for (std::size_t i = 0; i < grad.layers.size(); ++i) {
    grad.layers[i].for_each_array([&](const char* name, const std::vector<double>& v) {
      for (std::size_t q = 0; q < v.size(); ++q)
        if (!std::isfinite(v[q])) {
          std::ostringstream msg;
          msg << "non-finite gradient at step " << step << ": layer " << i + 1 << " " << name << "[" << q << "]";
          throw std::runtime_error(msg.str());
        }
    });
  }
}

}  // namespace

TrainResult train(const VNConfig& net, const TrainConfig& cfg, const RayMatrix& L,
                  std::span<const TrainingSource> sources, const StepCallback& on_step) {
  VNParams params = init_params(net, L, cfg.seed);
  BatchSampler warmup(sources, cfg.mix, cfg.augment, L, mix_seed(cfg.seed, 0xca1b), cfg.offset_mode);
  const auto batch = warmup.next();
  const auto ptrs = pointers(batch);
  calibrate_ranges(params, L, ptrs);
  return train_from(std::move(params), cfg, L, sources, on_step);
}

TrainResult train_from(VNParams params, const TrainConfig& cfg, const RayMatrix& L,
                       std::span<const TrainingSource> sources, const StepCallback& on_step) {
  cfg.loss.validate();
  params.check_compatible(L);
  TrainResult res;
  res.optimizer = Adam(params, cfg.adam);
  res.tracker = RangeTracker(params, cfg.range_interval);
  BatchSampler sampler(sources, cfg.mix, cfg.augment, L, cfg.seed, cfg.offset_mode);
  VNParams grad;
  for (int step = 1; step <= cfg.steps; ++step) {
    StepRecord rec;
    rec.step = step;
    const auto batch = sampler.next(&rec.drawn);
    const auto ptrs = pointers(batch);
    const VNTape tape = vn_forward_batch(params, L, ptrs);
    const auto levels = preactivation_levels(params, tape);
    rec.loss = vn_backward(params, L, tape, ptrs, cfg.loss, grad);
    check_finite(grad, step);
    res.optimizer.step(params, grad);
    res.tracker.observe(params, levels);
    if (on_step) on_step(rec, params, res.optimizer, res.tracker);
    res.history.push_back(std::move(rec));
  }
  res.params = std::move(params);
  return res;
}

void apply_variant(TrainConfig& cfg, const std::string& variant) {
  if (variant.empty()) return;
  const int batch = cfg.mix.batch_size();
  if (variant == "raw") {
    cfg.loss.last_layer_only = true;
    cfg.loss.lambda_phi = 0.0;
    cfg.mix = MixSpec::ray_only(batch);
  } else if (variant == "exp-no-smooth") {
    cfg.loss.last_layer_only = false;
    cfg.loss.lambda_phi = 0.0;
    cfg.mix = MixSpec::ray_only(batch);
  } else if (variant == "exp-smooth") {
    cfg.loss.last_layer_only = false;
    cfg.mix = MixSpec::ray_only(batch);
  } else if (variant == "exp-smooth-mixed") {
    cfg.loss.last_layer_only = false;
    cfg.mix = MixSpec::mixed();
  } else {
    throw std::invalid_argument("unknown variant " + variant + " (raw, exp-no-smooth, exp-smooth, exp-smooth-mixed)");
  }
}

}  // namespace sosvn
