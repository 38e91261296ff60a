#pragma once

#include "dsvgp/quadrature.hpp"

#include <memory>
#include <string_view>

namespace dsvgp {

enum class LikelihoodFamily { Gaussian, BernoulliLogit };

std::string_view to_string(LikelihoodFamily family);
LikelihoodFamily likelihood_family_from_string(std::string_view name);

inline constexpr int kDefaultQuadratureOrder = 64;
inline constexpr double kBetaFloor = 1e-8;

/// Observation model p(y | f). Bernoulli labels are +1/-1; with soft_labels
/// any y in [-1, 1] is accepted and read as the expected label, which is how
/// fantasized classification outcomes are conditioned on.
struct Likelihood {
  LikelihoodFamily family = LikelihoodFamily::Gaussian;
  double noise_variance = 0.1;
  int quadrature_order = kDefaultQuadratureOrder;
  bool soft_labels = false;

  static Likelihood gaussian(double noise_variance);
  static Likelihood bernoulli(int quadrature_order = kDefaultQuadratureOrder);

  bool is_gaussian() const { return family == LikelihoodFamily::Gaussian; }
  void validate() const;
  const GaussHermiteRule& rule() const;
};

/// Expected first derivative and negated second derivative of log p(y|f)
/// under f ~ N(mean, var).
struct SiteValues {
  double alpha_hat = 0.0;
  double beta_hat = kBetaFloor;
};

SiteValues site_expectations(const Likelihood& lik, double y, double mean, double var);

/// E_{N(f|mean,var)}[log p(y | f)].
double expected_log_lik(const Likelihood& lik, double y, double mean, double var);

/// p(y | data) = E_{N(f|mean,var)}[p(y | f)].
double predictive_density(const Likelihood& lik, double y, double mean, double var);
double log_predictive_density(const Likelihood& lik, double y, double mean, double var);

/// Maps {0,1} or {-1,+1} data labels to {-1,+1}; throws on anything else.
double to_signed_label(double raw);

}  // namespace dsvgp
