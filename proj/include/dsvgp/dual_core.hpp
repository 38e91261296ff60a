#pragma once

#include "dsvgp/kernels.hpp"
#include "dsvgp/likelihoods.hpp"

#include <vector>

namespace dsvgp {

/// Inputs (rows) with one observation each.
struct Dataset {
  PointSet x;
  Vector y;

  Eigen::Index size() const { return x.rows(); }
  bool empty() const { return x.rows() == 0; }
  Eigen::Index dim() const { return x.cols(); }
  Dataset subset(const std::vector<Eigen::Index>& rows) const;
};

/// Row-wise concatenation; either side may be empty.
Dataset concat(const Dataset& a, const Dataset& b);

/// Amortized dual pair (alpha_u, B_u) over inducing inputs Z, with cached
/// factors. Treat as a value: build through make/init and never mutate the
/// cached members directly.
struct DualState {
  KernelSpec kernel;
  PointSet z;
  Vector alpha;
  Matrix b;

  GramFactor kzz;       // K_zz as assembled, jitter recorded
  Matrix k;             // K_zz + jitter I, the matrix all solves use
  GramFactor k_plus_b;  // k + b

  static DualState make(const KernelSpec& kernel, const PointSet& z, const Vector& alpha,
                        const Matrix& b);

  Eigen::Index num_inducing() const { return z.rows(); }
};

DualState init_state(const KernelSpec& kernel, const PointSet& z);

/// Same duals, caches rebuilt under a different kernel.
DualState with_kernel(const DualState& state, const KernelSpec& kernel);

struct Moments {
  Vector mean;
  Matrix cov;
};

Moments recover_moments(const DualState& state);

struct Marginals {
  Vector mean;
  Vector var;
};

/// Latent marginals via the dual route: k^T K^{-1} alpha and
/// kappa - k^T K^{-1} k + k^T (K + B)^{-1} k.
Marginals predict(const DualState& state, const PointSet& x_star);

/// Same quantity computed from the recovered moments (m, V).
Marginals predict_from_moments(const DualState& state, const Moments& moments,
                               const PointSet& x_star);

std::vector<SiteValues> compute_sites(const DualState& state, const Likelihood& lik,
                                      const Dataset& data);

/// Sum_i k_zi alpha_hat_i and Sum_i k_zi beta_hat_i k_zi^T.
struct SiteSums {
  Vector alpha;
  Matrix b;
};

SiteSums site_sums(const DualState& state, const PointSet& x,
                   const std::vector<SiteValues>& sites);

/// Prior the variational posterior is regularized towards, in dual form.
/// Its natural parameters are precision K^{-1}(K + b)K^{-1} and linear term
/// K^{-1}(alpha + b K^{-1} anchor); anchor is the mean the duals were
/// linearized at. The zero prior is p(u) = N(0, K_zz).
struct AdjustedPrior {
  Vector alpha;
  Matrix b;
  Vector anchor;

  static AdjustedPrior zero(Eigen::Index m);
  /// The posterior of state, unchanged, used as a prior.
  static AdjustedPrior from_state(const DualState& state);

  bool is_zero() const;
};

struct PriorMoments {
  Vector mean;
  Matrix cov;
};

PriorMoments prior_moments(const DualState& state, const AdjustedPrior& prior);

/// One natural-gradient (Bayesian learning rule) step. Sites are evaluated
/// at the pre-step posterior over data_sum.
DualState ngd_step(const DualState& state, const Likelihood& lik, const Dataset& data_sum,
                   const AdjustedPrior& prior, double rho);

struct ConvergenceResult {
  DualState state;
  int iterations = 0;
  bool converged = false;
};

/// Repeats ngd_step until max |delta alpha| and max |delta B| fall below tol.
ConvergenceResult iterate_to_convergence(const DualState& state, const Likelihood& lik,
                                         const Dataset& data_sum, const AdjustedPrior& prior,
                                         double rho, double tol = 1e-8, int max_iter = 1000);

/// KL(q(u) || prior) with q from the state's duals.
double kl_to_prior(const DualState& state, const AdjustedPrior& prior);

/// Sum of expected log-likelihoods under the state's marginals.
double expected_log_lik_sum(const DualState& state, const Likelihood& lik, const Dataset& data);

double elbo(const DualState& state, const Likelihood& lik, const Dataset& data,
            const AdjustedPrior& prior);
double elbo(const DualState& state, const Likelihood& lik, const Dataset& data);

struct PseudoData {
  Vector y_tilde;
  Matrix sigma_tilde;
  bool degenerate = false;
  Eigen::Index rank = 0;
};

PseudoData pseudo_data(const DualState& state);

/// Max absolute deviation between the state's natural parameters and those
/// rebuilt from prior plus site sums, compared in dual coordinates.
double site_reconstruction_check(const DualState& state, const std::vector<SiteValues>& sites,
                                 const PointSet& x,
                                 const AdjustedPrior& prior);
double site_reconstruction_check(const DualState& state, const std::vector<SiteValues>& sites,
                                 const PointSet& x);

}  // namespace dsvgp
