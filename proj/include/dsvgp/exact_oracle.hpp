#pragma once

#include "dsvgp/kernels.hpp"

namespace dsvgp {

/// Exact GP regression posterior held in dual form: mean k^T alpha and
/// variance kappa - k^T (K + diag(beta)^{-1})^{-1} k.
struct ExactPosterior {
  PointSet train_inputs;
  Vector dual_alpha;
  Vector dual_beta;
  KernelSpec kernel;
  double noise_variance = 0.0;
  GramFactor factor;  // of K_xx + diag(beta)^{-1}
};

struct MeanVar {
  Vector mean;
  Vector var;
};

ExactPosterior fit_exact(const KernelSpec& kernel, double noise_variance, const PointSet& x,
                         const Vector& y);

MeanVar predict_exact(const ExactPosterior& post, const PointSet& x_star);

/// log N(y | 0, K_xx + noise I).
double log_marginal_likelihood(const ExactPosterior& post, const Vector& y);

}  // namespace dsvgp
