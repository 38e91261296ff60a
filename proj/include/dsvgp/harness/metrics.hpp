#pragma once

#include "dsvgp/dual_core.hpp"
#include "dsvgp/errors.hpp"

namespace dsvgp {

/// Gaussian: mean and variance of y (noise included). Bernoulli: probability
/// of the +1 class in prob.
struct Predictions {
  LikelihoodFamily family = LikelihoodFamily::Gaussian;
  Vector mean;
  Vector var;
  Vector prob;

  Eigen::Index size() const;
};

Predictions make_predictions(const DualState& state, const Likelihood& lik, const PointSet& x);

struct Metrics {
  double nlpd = 0.0;
  double rmse = 0.0;        // Gaussian only
  double error_rate = 0.0;  // Bernoulli only
  double accuracy = 0.0;    // Bernoulli only

  /// RMSE for regression, error rate for classification.
  double rmse_or_error(LikelihoodFamily family) const;
};

/// Labels are real targets for Gaussian and +1/-1 for Bernoulli.
Metrics compute_metrics(const Predictions& pred, const Vector& labels);

}  // namespace dsvgp
