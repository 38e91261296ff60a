#include "dsvgp/dual_core.hpp"

#include "dsvgp/errors.hpp"
#include "dsvgp/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace dsvgp {

namespace {

void check_prior(const DualState& state, const AdjustedPrior& prior) {
  const Eigen::Index m = state.num_inducing();
  if (prior.alpha.size() != m || prior.b.rows() != m || prior.b.cols() != m ||
      prior.anchor.size() != m) {
    throw DimensionMismatch("prior duals do not match the number of inducing inputs");
  }
  if (!is_psd(prior.b)) throw NonPsd("prior B is not positive semidefinite");
}

Vector prior_linear_term(const DualState& state, const AdjustedPrior& prior) {
  if (prior.is_zero()) return Vector::Zero(state.num_inducing());
  return prior.alpha + prior.b * state.kzz.solve(prior.anchor);
}

Matrix kernel_block(const DualState& state, const PointSet& x) {
  if (x.rows() > 0 && x.cols() != state.z.cols()) {
    throw DimensionMismatch("input dimension " + std::to_string(x.cols()) +
                            " differs from inducing dimension " + std::to_string(state.z.cols()));
  }
  return gram(state.kernel, state.z, x);
}

}  // namespace

Dataset Dataset::subset(const std::vector<Eigen::Index>& rows) const {
  Dataset out;
  out.x.resize(static_cast<Eigen::Index>(rows.size()), x.cols());
  out.y.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = rows[i];
    if (r < 0 || r >= size()) throw InvalidArgument("subset row out of range");
    out.x.row(static_cast<Eigen::Index>(i)) = x.row(r);
    out.y[static_cast<Eigen::Index>(i)] = y[r];
  }
  return out;
}

Dataset concat(const Dataset& a, const Dataset& b) {
  if (a.empty()) return b;
  if (b.empty()) return a;
  if (a.dim() != b.dim()) throw DimensionMismatch("cannot concatenate datasets of different dimension");
  Dataset out;
  out.x.resize(a.size() + b.size(), a.dim());
  out.x << a.x, b.x;
  out.y.resize(a.size() + b.size());
  out.y << a.y, b.y;
  return out;
}

DualState DualState::make(const KernelSpec& kernel, const PointSet& z, const Vector& alpha,
                          const Matrix& b) {
  const Eigen::Index m = z.rows();
  if (m < 1) throw InvalidArgument("at least one inducing input required");
  if (alpha.size() != m || b.rows() != m || b.cols() != m) {
    throw DimensionMismatch("dual parameters do not match the number of inducing inputs");
  }
  kernel.hyper.validate();
  const double scale = std::max(1.0, b.cwiseAbs().maxCoeff());
  if ((b - b.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale) {
    throw NonPsd("B is not symmetric");
  }
  DualState s;
  s.kernel = kernel;
  s.z = z;
  s.alpha = alpha;
  s.b = symmetrize(b);
  if (!is_psd(s.b)) throw NonPsd("B is not positive semidefinite");
  s.kzz = stable_cholesky(gram(kernel, z, z));
  s.k = s.kzz.regularized();
  s.k_plus_b = stable_cholesky(s.k + s.b);
  return s;
}

DualState init_state(const KernelSpec& kernel, const PointSet& z) {
  return DualState::make(kernel, z, Vector::Zero(z.rows()), Matrix::Zero(z.rows(), z.rows()));
}

DualState with_kernel(const DualState& state, const KernelSpec& kernel) {
  // The duals were validated when state was built; only the caches change.
  kernel.hyper.validate();
  DualState s = state;
  s.kernel = kernel;
  s.kzz = stable_cholesky(gram(kernel, state.z, state.z));
  s.k = s.kzz.regularized();
  s.k_plus_b = stable_cholesky(s.k + s.b);
  return s;
}

Moments recover_moments(const DualState& state) {
  Moments out;
  out.mean = state.alpha;
  out.cov = symmetrize(state.k * state.k_plus_b.solve(state.k));
  return out;
}

Marginals predict(const DualState& state, const PointSet& x_star) {
  const Matrix kzx = kernel_block(state, x_star);
  const Vector h_k = state.kzz.half_solve(kzx).colwise().squaredNorm().transpose();
  const Vector h_kb = state.k_plus_b.half_solve(kzx).colwise().squaredNorm().transpose();
  Marginals out;
  out.mean = kzx.transpose() * state.kzz.solve(state.alpha);
  out.var = (gram_diagonal(state.kernel, x_star) - h_k + h_kb).cwiseMax(0.0);
  return out;
}

Marginals predict_from_moments(const DualState& state, const Moments& moments,
                               const PointSet& x_star) {
  const Matrix kzx = kernel_block(state, x_star);
  const Matrix a = state.kzz.solve(kzx);
  Marginals out;
  out.mean = a.transpose() * moments.mean;
  const Vector nystrom = (kzx.array() * a.array()).colwise().sum().transpose();
  const Vector spread = (a.array() * (moments.cov * a).array()).colwise().sum().transpose();
  out.var = (gram_diagonal(state.kernel, x_star) - nystrom + spread).cwiseMax(0.0);
  return out;
}

std::vector<SiteValues> compute_sites(const DualState& state, const Likelihood& lik,
                                      const Dataset& data) {
  std::vector<SiteValues> sites;
  if (data.empty()) return sites;
  const Marginals marg = predict(state, data.x);
  sites.reserve(static_cast<std::size_t>(data.size()));
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    sites.push_back(site_expectations(lik, data.y[i], marg.mean[i], marg.var[i]));
  }
  return sites;
}

SiteSums site_sums(const DualState& state, const PointSet& x,
                   const std::vector<SiteValues>& sites) {
  const Eigen::Index m = state.num_inducing();
  SiteSums out{Vector::Zero(m), Matrix::Zero(m, m)};
  if (static_cast<Eigen::Index>(sites.size()) != x.rows()) {
    throw DimensionMismatch("site count differs from input count");
  }
  if (sites.empty()) return out;
  const Matrix kzx = kernel_block(state, x);
  Vector alpha_hat(x.rows());
  Vector beta_hat(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    alpha_hat[i] = sites[static_cast<std::size_t>(i)].alpha_hat;
    beta_hat[i] = sites[static_cast<std::size_t>(i)].beta_hat;
  }
  out.alpha = kzx * alpha_hat;
  out.b = symmetrize(kzx * beta_hat.asDiagonal() * kzx.transpose());
  return out;
}

AdjustedPrior AdjustedPrior::zero(Eigen::Index m) {
  return AdjustedPrior{Vector::Zero(m), Matrix::Zero(m, m), Vector::Zero(m)};
}

AdjustedPrior AdjustedPrior::from_state(const DualState& state) {
  return AdjustedPrior{state.alpha, state.b, state.alpha};
}

bool AdjustedPrior::is_zero() const {
  return (alpha.size() == 0 || alpha.isZero(0.0)) && (b.size() == 0 || b.isZero(0.0));
}

PriorMoments prior_moments(const DualState& state, const AdjustedPrior& prior) {
  check_prior(state, prior);
  const GramFactor kbp = stable_cholesky(state.k + prior.b);
  PriorMoments out;
  out.mean = state.k * kbp.solve(prior_linear_term(state, prior));
  out.cov = symmetrize(state.k * kbp.solve(state.k));
  return out;
}

DualState ngd_step(const DualState& state, const Likelihood& lik, const Dataset& data_sum,
                   const AdjustedPrior& prior, double rho) {
  if (!(rho > 0.0 && rho <= 1.0)) throw InvalidArgument("step size must lie in (0, 1]");
  check_prior(state, prior);
  const std::vector<SiteValues> sites = compute_sites(state, lik, data_sum);
  const SiteSums sums = site_sums(state, data_sum.x, sites);

  const Vector k_inv_alpha = state.kzz.solve(state.alpha);
  const Vector t_cur = state.alpha + state.b * k_inv_alpha;
  const Vector t_target = prior_linear_term(state, prior) + sums.alpha + sums.b * k_inv_alpha;

  const Matrix b_new = symmetrize((1.0 - rho) * state.b + rho * (prior.b + sums.b));
  const Vector t_new = (1.0 - rho) * t_cur + rho * t_target;
  const GramFactor kb = stable_cholesky(state.k + b_new);
  const Vector alpha_new = state.k * kb.solve(t_new);
  return DualState::make(state.kernel, state.z, alpha_new, b_new);
}

ConvergenceResult iterate_to_convergence(const DualState& state, const Likelihood& lik,
                                         const Dataset& data_sum, const AdjustedPrior& prior,
                                         double rho, double tol, int max_iter) {
  ConvergenceResult out{state, 0, false};
  while (out.iterations < max_iter) {
    DualState next = ngd_step(out.state, lik, data_sum, prior, rho);
    ++out.iterations;
    const double da = (next.alpha - out.state.alpha).cwiseAbs().maxCoeff();
    const double db = (next.b - out.state.b).cwiseAbs().maxCoeff();
    out.state = std::move(next);
    if (da < tol && db < tol) {
      out.converged = true;
      break;
    }
  }
  return out;
}

double kl_to_prior(const DualState& state, const AdjustedPrior& prior) {
  check_prior(state, prior);
  const Eigen::Index m = state.num_inducing();
  const Matrix kbp_mat = state.k + prior.b;
  const GramFactor kbp = stable_cholesky(kbp_mat);
  const Vector m_prior = state.k * kbp.solve(prior_linear_term(state, prior));
  const Vector w = state.kzz.solve(Vector(m_prior - state.alpha));
  const double trace = state.k_plus_b.solve(kbp_mat).trace();
  const double quad = w.dot(kbp_mat * w);
  const double logdet = state.k_plus_b.log_determinant() - kbp.log_determinant();
  return 0.5 * (trace - static_cast<double>(m) + quad + logdet);
}

double expected_log_lik_sum(const DualState& state, const Likelihood& lik, const Dataset& data) {
  if (data.empty()) return 0.0;
  const Marginals marg = predict(state, data.x);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    acc += expected_log_lik(lik, data.y[i], marg.mean[i], marg.var[i]);
  }
  return acc;
}

double elbo(const DualState& state, const Likelihood& lik, const Dataset& data,
            const AdjustedPrior& prior) {
  return expected_log_lik_sum(state, lik, data) - kl_to_prior(state, prior);
}

double elbo(const DualState& state, const Likelihood& lik, const Dataset& data) {
  return elbo(state, lik, data, AdjustedPrior::zero(state.num_inducing()));
}

PseudoData pseudo_data(const DualState& state) {
  const PseudoInverse pinv = pseudo_inverse(state.b);
  PseudoData out;
  out.rank = pinv.rank;
  out.degenerate = pinv.rank < state.num_inducing();
  out.sigma_tilde = symmetrize(state.k * pinv.inverse * state.k);
  out.y_tilde = state.k * (pinv.inverse * state.alpha) + state.alpha;
  return out;
}

double site_reconstruction_check(const DualState& state, const std::vector<SiteValues>& sites,
                                 const PointSet& x, const AdjustedPrior& prior) {
  check_prior(state, prior);
  const SiteSums sums = site_sums(state, x, sites);
  const Vector k_inv_alpha = state.kzz.solve(state.alpha);
  const Vector t_cur = state.alpha + state.b * k_inv_alpha;
  const Vector t_rebuilt = prior_linear_term(state, prior) + sums.alpha + sums.b * k_inv_alpha;
  const Matrix b_rebuilt = prior.b + sums.b;
  return std::max((state.b - b_rebuilt).cwiseAbs().maxCoeff(),
                  (t_cur - t_rebuilt).cwiseAbs().maxCoeff());
}

double site_reconstruction_check(const DualState& state, const std::vector<SiteValues>& sites,
                                 const PointSet& x) {
  return site_reconstruction_check(state, sites, x, AdjustedPrior::zero(state.num_inducing()));
}

}  // namespace dsvgp
