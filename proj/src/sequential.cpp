#include "dsvgp/sequential.hpp"

#include "dsvgp/errors.hpp"
#include "dsvgp/linalg.hpp"
#include "dsvgp/representation.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

namespace dsvgp {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct LogParams {
  bool has_constant = false;
  bool has_noise = false;
  Eigen::Index num_lengthscales = 1;
};

LogParams layout(const Hyperparams& h, const Likelihood& lik, bool learn_noise) {
  return LogParams{h.constant_variance > 0.0, lik.is_gaussian() && learn_noise,
                   h.lengthscales.size()};
}

Vector pack(const Hyperparams& h, const LogParams& lp) {
  Vector v(1 + lp.num_lengthscales + (lp.has_constant ? 1 : 0) + (lp.has_noise ? 1 : 0));
  Eigen::Index i = 0;
  v[i++] = std::log(h.variance);
  for (Eigen::Index k = 0; k < lp.num_lengthscales; ++k) v[i++] = std::log(h.lengthscales[k]);
  if (lp.has_constant) v[i++] = std::log(h.constant_variance);
  if (lp.has_noise) v[i++] = std::log(h.noise_variance);
  return v;
}

Hyperparams unpack(const Vector& v, const Hyperparams& base, const LogParams& lp) {
  Hyperparams h = base;
  Eigen::Index i = 0;
  h.variance = std::exp(v[i++]);
  for (Eigen::Index k = 0; k < lp.num_lengthscales; ++k) h.lengthscales[k] = std::exp(v[i++]);
  if (lp.has_constant) h.constant_variance = std::exp(v[i++]);
  if (lp.has_noise) h.noise_variance = std::exp(v[i++]);
  return h;
}

double safe_objective(const DualState& state, const Likelihood& lik, const Dataset& batch,
                      const Dataset& memory, Eigen::Index n_old, const Hyperparams& hyper) {
  try {
    const double f = hyper_objective(state, lik, batch, memory, n_old, hyper);
    return std::isfinite(f) ? f : kNegInf;
  } catch (const Error&) {
    return kNegInf;
  }
}

DualState run_ngd(const DualState& state, const Likelihood& lik, const SequentialConfig& config,
                  const Dataset& batch, const Dataset& memory, const AdjustedPrior& prior) {
  const Dataset data_sum = config.replay_in_update ? concat(batch, memory) : batch;
  DualState s = state;
  for (int step = 0; step < config.ngd_steps; ++step) {
    s = ngd_step(s, lik, data_sum, prior, config.rho);
  }
  return s;
}

PointSet select_from(const KernelSpec& kernel, const PointSet& x, Eigen::Index m) {
  return select_rows(x, pivoted_cholesky_select(kernel, x, m).indices);
}

}  // namespace

void SequentialConfig::validate() const {
  if (!(rho > 0.0 && rho <= 1.0)) throw InvalidArgument("rho must lie in (0, 1]");
  if (ngd_steps < 1) throw InvalidArgument("ngd_steps must be positive");
  if (num_inducing < 1) throw InvalidArgument("num_inducing must be positive");
  if (memory_size < 0) throw InvalidArgument("memory_size must be nonnegative");
  if (!(hyper_lr > 0.0)) throw InvalidArgument("hyper_lr must be positive");
  if (hyper_steps < 0) throw InvalidArgument("hyper_steps must be nonnegative");
  if (n_old_counter < 0) throw InvalidArgument("n_old_counter must be nonnegative");
}

Likelihood sync_noise(const Likelihood& lik, const Hyperparams& hyper) {
  Likelihood out = lik;
  if (out.is_gaussian()) out.noise_variance = hyper.noise_variance;
  return out;
}

AdjustedPrior remove_memory(const DualState& state, const Likelihood& lik, const Dataset& memory,
                            bool enabled) {
  AdjustedPrior prior = AdjustedPrior::from_state(state);
  if (!enabled || memory.empty()) return prior;
  const SiteSums sums = site_sums(state, memory.x, compute_sites(state, lik, memory));
  prior.alpha = state.alpha - sums.alpha;
  const ClippedPsd clipped = clip_psd(state.b - sums.b);
  prior.b = clipped.matrix;
  const double scale = std::max(1.0, std::abs(state.b.trace()));
  if (clipped.clipped && clipped.most_negative < -1e-8 * scale) {
    std::ostringstream msg;
    msg << "memory removal left B with eigenvalue " << clipped.most_negative
        << "; clipped to zero";
    log_warning(msg.str());
  }
  return prior;
}

DualState process_batch(const DualState& state, const Likelihood& lik,
                        const SequentialConfig& config, const Dataset& batch,
                        const Dataset& memory) {
  const AdjustedPrior prior = remove_memory(state, lik, memory, config.remove_memory_from_prior);
  return run_ngd(state, lik, config, batch, memory, prior);
}

double seq_objective(const DualState& state, const Likelihood& lik, const Dataset& batch,
                     const Dataset& memory, const AdjustedPrior& prior) {
  return expected_log_lik_sum(state, lik, batch) + expected_log_lik_sum(state, lik, memory) -
         kl_to_prior(state, prior);
}

double seq_objective_vcl(const DualState& state, const DualState& old_state,
                         const Likelihood& lik, const Dataset& batch, const Dataset& memory) {
  if (old_state.num_inducing() != state.num_inducing()) {
    throw DimensionMismatch("old and new states use different inducing sets");
  }
  double value = expected_log_lik_sum(state, lik, batch) -
                 kl_to_prior(state, AdjustedPrior::from_state(old_state));
  if (memory.empty()) return value;
  value += expected_log_lik_sum(state, lik, memory);

  const std::vector<SiteValues> sites = compute_sites(old_state, lik, memory);
  const Marginals old_marg = predict(old_state, memory.x);
  const Marginals marg = predict(state, memory.x);
  const Matrix kzx = gram(state.kernel, state.z, memory.x);
  const Vector nystrom = (kzx.array() * state.kzz.solve(kzx).array()).colwise().sum().transpose();
  const Vector residual = gram_diagonal(state.kernel, memory.x) - nystrom;
  double expected_log_site = 0.0;
  for (Eigen::Index i = 0; i < memory.size(); ++i) {
    const SiteValues& s = sites[static_cast<std::size_t>(i)];
    const double y_hat = old_marg.mean[i] + s.alpha_hat / s.beta_hat;
    const double d = y_hat - marg.mean[i];
    expected_log_site += -0.5 * s.beta_hat * (d * d + (marg.var[i] - residual[i]));
  }
  return value - expected_log_site;
}

double log_partition(const DualState& state) {
  const PseudoData pd = pseudo_data(state);
  const GramFactor c = stable_cholesky(symmetrize(state.k + pd.sigma_tilde));
  return -0.5 * c.log_determinant() - 0.5 * pd.y_tilde.dot(c.solve(pd.y_tilde));
}

double hyper_objective(const DualState& state, const Likelihood& lik, const Dataset& batch,
                       const Dataset& memory, Eigen::Index n_old, const Hyperparams& hyper) {
  KernelSpec spec = state.kernel;
  spec.hyper = hyper;
  const DualState s = with_kernel(state, spec);
  const Likelihood l = sync_noise(lik, hyper);
  double value = expected_log_lik_sum(s, l, batch);
  if (!memory.empty()) {
    const double scale = static_cast<double>(n_old) / static_cast<double>(memory.size());
    value += scale * expected_log_lik_sum(s, l, memory);
  }
  return value - kl_to_prior(s, AdjustedPrior::zero(s.num_inducing()));
}

Vector hyper_gradient(const DualState& state, const Likelihood& lik, const Dataset& batch,
                      const Dataset& memory, Eigen::Index n_old, const Hyperparams& hyper,
                      bool learn_noise, double step) {
  const LogParams lp = layout(hyper, lik, learn_noise);
  const Vector x0 = pack(hyper, lp);
  Vector g(x0.size());
  for (Eigen::Index i = 0; i < x0.size(); ++i) {
    Vector up = x0;
    Vector down = x0;
    up[i] += step;
    down[i] -= step;
    const double fu = safe_objective(state, lik, batch, memory, n_old, unpack(up, hyper, lp));
    const double fd = safe_objective(state, lik, batch, memory, n_old, unpack(down, hyper, lp));
    g[i] = (fu - fd) / (2.0 * step);
  }
  return g;
}

HyperResult optimize_hypers(const DualState& state, const Likelihood& lik, const Dataset& batch,
                            const Dataset& memory, Eigen::Index n_old,
                            const SequentialConfig& config) {
  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;
  constexpr int kMaxHalvings = 30;

  HyperResult out;
  out.hyper = state.kernel.hyper;
  out.hyper.noise_variance = lik.is_gaussian() ? lik.noise_variance : out.hyper.noise_variance;
  out.start_objective = safe_objective(state, lik, batch, memory, n_old, out.hyper);
  out.final_objective = out.start_objective;
  if (config.hyper_steps == 0 || !std::isfinite(out.start_objective)) return out;

  const LogParams lp = layout(out.hyper, lik, config.learn_noise);
  Vector x = pack(out.hyper, lp);
  Vector m1 = Vector::Zero(x.size());
  Vector m2 = Vector::Zero(x.size());
  double f = out.start_objective;

  for (int t = 1; t <= config.hyper_steps; ++t) {
    const Vector g = hyper_gradient(state, lik, batch, memory, n_old, unpack(x, out.hyper, lp),
                                    config.learn_noise);
    if (!g.allFinite()) break;
    m1 = kBeta1 * m1 + (1.0 - kBeta1) * g;
    m2 = kBeta2 * m2 + (1.0 - kBeta2) * g.cwiseProduct(g);
    const Vector m1_hat = m1 / (1.0 - std::pow(kBeta1, t));
    const Vector m2_hat = m2 / (1.0 - std::pow(kBeta2, t));
    const Vector step =
        config.hyper_lr * m1_hat.array() / (m2_hat.array().sqrt() + kEps);

    double scale = 1.0;
    for (int attempt = 0; attempt <= kMaxHalvings; ++attempt, scale *= 0.5) {
      const Vector proposal = x + scale * step;
      const double fp =
          safe_objective(state, lik, batch, memory, n_old, unpack(proposal, out.hyper, lp));
      if (fp >= f) {
        x = proposal;
        f = fp;
        ++out.accepted_steps;
        break;
      }
    }
  }
  out.hyper = unpack(x, out.hyper, lp);
  out.final_objective = f;
  return out;
}

std::uint64_t batch_seed(std::uint64_t seed, int batch_index) {
  // splitmix64 finalizer over the combined value.
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(batch_index) + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

StreamResult run_stream(const std::vector<StreamBatch>& stream, const SequentialConfig& config,
                        const KernelSpec& kernel, const Likelihood& lik,
                        const std::function<void(const BatchReport&)>& on_batch) {
  config.validate();
  if (stream.empty()) throw InvalidArgument("stream has no batches");
  KernelSpec spec = kernel;
  Likelihood l = sync_noise(lik, spec.hyper);
  const Eigen::Index dim = stream.front().data.dim();
  MemorySet memory = MemorySet::with_capacity(config.memory_size, dim);
  Eigen::Index n_old = config.n_old_counter;
  std::optional<DualState> state;
  const MemoryUpdateOptions mem_opts{config.memory_policy, config.pool_includes_memory};

  for (const StreamBatch& batch : stream) {
    if (batch.data.empty()) throw InvalidArgument("stream batch is empty");
    if (batch.data.dim() != dim) throw DimensionMismatch("stream batches differ in dimension");

    if (!state) {
      state = init_state(spec, select_from(spec, batch.data.x, config.num_inducing));
    } else {
      state = refresh_representation(*state, batch.data.x, config.num_inducing);
    }
    const Dataset mem = memory.data();
    const AdjustedPrior prior = remove_memory(*state, l, mem, config.remove_memory_from_prior);
    state = run_ngd(*state, l, config, batch.data, mem, prior);

    if (config.hyper_steps > 0) {
      const HyperResult hr = optimize_hypers(*state, l, batch.data, mem, n_old, config);
      spec.hyper = hr.hyper;
      l = sync_noise(l, spec.hyper);
      state = with_kernel(*state, spec);
    }
    const double objective = seq_objective(*state, l, batch.data, mem, prior);

    memory = update_memory(memory, *state, l, batch.data, batch_seed(config.seed, batch.index),
                           mem_opts);
    n_old += batch.data.size();
    if (on_batch) {
      on_batch(BatchReport{batch.index, n_old, objective, &*state, &memory, &l});
    }
  }
  return StreamResult{*state, memory, l, n_old};
}

StreamResult fit_offline(const Dataset& data, const SequentialConfig& config,
                         const KernelSpec& kernel, const Likelihood& lik, int rounds,
                         const std::function<void(int, const DualState&, const Likelihood&)>&
                             on_round) {
  config.validate();
  if (data.empty()) throw InvalidArgument("offline fit needs data");
  if (rounds < 1) throw InvalidArgument("offline fit needs at least one round");
  KernelSpec spec = kernel;
  Likelihood l = sync_noise(lik, spec.hyper);
  DualState state = init_state(spec, select_from(spec, data.x, config.num_inducing));
  const Dataset none;
  for (int r = 0; r < rounds; ++r) {
    // Hyperparameters move between rounds, so the inducing set is reselected.
    if (r > 0) state = refresh_representation(state, data.x, config.num_inducing);
    const AdjustedPrior prior = AdjustedPrior::zero(state.num_inducing());
    for (int step = 0; step < config.ngd_steps; ++step) {
      state = ngd_step(state, l, data, prior, config.rho);
    }
    if (config.hyper_steps > 0) {
      const HyperResult hr = optimize_hypers(state, l, data, none, 0, config);
      spec.hyper = hr.hyper;
      l = sync_noise(l, spec.hyper);
      state = with_kernel(state, spec);
    }
    if (on_round) on_round(r, state, l);
  }
  return StreamResult{state, MemorySet::with_capacity(0, data.dim()), l, data.size()};
}

}  // namespace dsvgp
