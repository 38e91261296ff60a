#include "dsvgp/harness/metrics.hpp"

#include "dsvgp/errors.hpp"

#include <cmath>
#include <numbers>

namespace dsvgp {

Eigen::Index Predictions::size() const {
  return family == LikelihoodFamily::Gaussian ? mean.size() : prob.size();
}

Predictions make_predictions(const DualState& state, const Likelihood& lik, const PointSet& x) {
  const Marginals marg = predict(state, x);
  Predictions out;
  out.family = lik.family;
  if (lik.is_gaussian()) {
    out.mean = marg.mean;
    out.var = marg.var.array() + lik.noise_variance;
  } else {
    out.prob.resize(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      out.prob[i] = predictive_density(lik, 1.0, marg.mean[i], marg.var[i]);
    }
  }
  return out;
}

double Metrics::rmse_or_error(LikelihoodFamily family) const {
  return family == LikelihoodFamily::Gaussian ? rmse : error_rate;
}

Metrics compute_metrics(const Predictions& pred, const Vector& labels) {
  const Eigen::Index n = labels.size();
  if (pred.size() != n) throw DimensionMismatch("predictions and labels differ in length");
  if (n == 0) throw InvalidArgument("metrics need at least one label");
  Metrics out;
  double nll = 0.0;
  if (pred.family == LikelihoodFamily::Gaussian) {
    double sq = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double r = labels[i] - pred.mean[i];
      nll += 0.5 * std::log(2.0 * std::numbers::pi * pred.var[i]) + r * r / (2.0 * pred.var[i]);
      sq += r * r;
    }
    out.rmse = std::sqrt(sq / static_cast<double>(n));
  } else {
    Eigen::Index correct = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double y = to_signed_label(labels[i]);
      const double p = pred.prob[i];
      nll -= std::log(y > 0 ? p : 1.0 - p);
      if ((p >= 0.5) == (y > 0)) ++correct;
    }
    out.accuracy = static_cast<double>(correct) / static_cast<double>(n);
    out.error_rate = 1.0 - out.accuracy;
  }
  out.nlpd = nll / static_cast<double>(n);
  return out;
}

}  // namespace dsvgp
