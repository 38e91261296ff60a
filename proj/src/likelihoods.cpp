#include "dsvgp/likelihoods.hpp"

#include "dsvgp/errors.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace dsvgp {

namespace {

double sigmoid(double f) {
  if (f >= 0.0) return 1.0 / (1.0 + std::exp(-f));
  const double e = std::exp(f);
  return e / (1.0 + e);
}

// log sigmoid(f), stable in both tails.
double log_sigmoid(double f) {
  if (f >= 0.0) return -std::log1p(std::exp(-f));
  return f - std::log1p(std::exp(f));
}

void check_inputs(const Likelihood& lik, double y, double var) {
  if (!(var >= 0.0)) throw InvalidArgument("marginal variance must be nonnegative");
  if (!std::isfinite(y)) throw InvalidArgument("observation must be finite");
  if (lik.family == LikelihoodFamily::BernoulliLogit) {
    if (lik.soft_labels) {
      if (y < -1.0 || y > 1.0) throw InvalidArgument("soft Bernoulli label outside [-1, 1]");
    } else if (y != 1.0 && y != -1.0) {
      throw InvalidArgument("Bernoulli label must be -1 or +1, got " + std::to_string(y));
    }
  }
}

// Probability of the +1 class implied by a (possibly soft) label.
double positive_weight(double y) { return 0.5 * (1.0 + y); }

}  // namespace

std::string_view to_string(LikelihoodFamily family) {
  switch (family) {
    case LikelihoodFamily::Gaussian:
      return "gaussian";
    case LikelihoodFamily::BernoulliLogit:
      return "bernoulli";
  }
  return "unknown";
}

LikelihoodFamily likelihood_family_from_string(std::string_view name) {
  if (name == "gaussian") return LikelihoodFamily::Gaussian;
  if (name == "bernoulli" || name == "bernoulli_logit") return LikelihoodFamily::BernoulliLogit;
  throw InvalidArgument("unknown likelihood '" + std::string(name) + "'");
}

Likelihood Likelihood::gaussian(double noise_variance) {
  Likelihood lik;
  lik.family = LikelihoodFamily::Gaussian;
  lik.noise_variance = noise_variance;
  lik.validate();
  return lik;
}

Likelihood Likelihood::bernoulli(int quadrature_order) {
  Likelihood lik;
  lik.family = LikelihoodFamily::BernoulliLogit;
  lik.quadrature_order = quadrature_order;
  lik.validate();
  return lik;
}

void Likelihood::validate() const {
  if (family == LikelihoodFamily::Gaussian && !(noise_variance > 0.0)) {
    throw InvalidArgument("Gaussian noise variance must be positive");
  }
  if (quadrature_order < 2) throw InvalidArgument("quadrature order must be at least 2");
}

const GaussHermiteRule& Likelihood::rule() const { return *gauss_hermite(quadrature_order); }

SiteValues site_expectations(const Likelihood& lik, double y, double mean, double var) {
  check_inputs(lik, y, var);
  SiteValues out;
  switch (lik.family) {
    case LikelihoodFamily::Gaussian:
      out.alpha_hat = (y - mean) / lik.noise_variance;
      out.beta_hat = 1.0 / lik.noise_variance;
      break;
    case LikelihoodFamily::BernoulliLogit: {
      const double w = positive_weight(y);
      const GaussHermiteRule& rule = lik.rule();
      // d/df log p = w - sigmoid(f); -d2/df2 log p = sigmoid(f) sigmoid(-f).
      out.alpha_hat = rule.expect(mean, var, [w](double f) { return w - sigmoid(f); });
      out.beta_hat = rule.expect(mean, var, [](double f) {
        const double s = sigmoid(f);
        return s * (1.0 - s);
      });
      break;
    }
  }
  if (!(out.beta_hat >= kBetaFloor)) out.beta_hat = kBetaFloor;
  return out;
}

double expected_log_lik(const Likelihood& lik, double y, double mean, double var) {
  check_inputs(lik, y, var);
  switch (lik.family) {
    case LikelihoodFamily::Gaussian: {
      const double r = y - mean;
      return -0.5 * std::log(2.0 * std::numbers::pi * lik.noise_variance) -
             (r * r + var) / (2.0 * lik.noise_variance);
    }
    case LikelihoodFamily::BernoulliLogit: {
      const double w = positive_weight(y);
      return lik.rule().expect(mean, var, [w](double f) {
        return w * log_sigmoid(f) + (1.0 - w) * log_sigmoid(-f);
      });
    }
  }
  return 0.0;
}

double log_predictive_density(const Likelihood& lik, double y, double mean, double var) {
  check_inputs(lik, y, var);
  switch (lik.family) {
    case LikelihoodFamily::Gaussian: {
      const double total = var + lik.noise_variance;
      const double r = y - mean;
      return -0.5 * std::log(2.0 * std::numbers::pi * total) - r * r / (2.0 * total);
    }
    case LikelihoodFamily::BernoulliLogit: {
      const double w = positive_weight(y);
      const double p = lik.rule().expect(mean, var, [](double f) { return sigmoid(f); });
      return std::log(w * p + (1.0 - w) * (1.0 - p));
    }
  }
  return 0.0;
}

double predictive_density(const Likelihood& lik, double y, double mean, double var) {
  return std::exp(log_predictive_density(lik, y, mean, var));
}

double to_signed_label(double raw) {
  if (raw == 1.0) return 1.0;
  if (raw == 0.0 || raw == -1.0) return -1.0;
  throw InvalidArgument("binary label must be 0/1 or -1/+1, got " + std::to_string(raw));
}

}  // namespace dsvgp
