#include "dsvgp/acquisition.hpp"

#include "dsvgp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

namespace dsvgp {

namespace {

double uniform01(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

double std_normal(std::mt19937_64& gen) {
  // Box–Muller on two 53-bit uniforms; avoids distribution-specific output.
  const double u1 = (static_cast<double>(gen() >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = uniform01(gen);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

PointSet as_row(const Eigen::Ref<const Vector>& x) {
  PointSet p(1, x.size());
  p.row(0) = x.transpose();
  return p;
}

const SurrogateModel& model_at(const std::vector<SurrogateModel>& models, std::size_t i) {
  if (i >= models.size()) throw InvalidArgument("acquisition refers to a missing model");
  return models[i];
}

double acquisition_at(const Acquisition& acq, const std::vector<SurrogateModel>& models,
                      const Eigen::Ref<const Vector>& x) {
  return evaluate_acquisition(acq, models, as_row(x))[0];
}

}  // namespace

double expected_improvement(double mean, double var, double best) {
  if (!(var >= 0.0)) throw InvalidArgument("variance must be nonnegative");
  const double s = std::sqrt(var);
  if (s == 0.0) return std::max(mean - best, 0.0);
  const double z = (mean - best) / s;
  const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  return std::max(0.0, s * (z * cdf + pdf));
}

double probability_of_validity(const DualState& classifier, const Likelihood& lik,
                               const Eigen::Ref<const Vector>& x) {
  const Marginals marg = predict(classifier, as_row(x));
  return predictive_density(lik, 1.0, marg.mean[0], marg.var[0]);
}

void Bounds::validate() const {
  if (lower.size() == 0 || lower.size() != upper.size()) {
    throw InvalidArgument("bounds need matching nonempty lower and upper vectors");
  }
  for (Eigen::Index i = 0; i < lower.size(); ++i) {
    if (!std::isfinite(lower[i]) || !std::isfinite(upper[i]) || !(lower[i] < upper[i])) {
      throw InvalidArgument("bounds must be finite with lower < upper");
    }
  }
}

Acquisition Acquisition::ei(std::size_t model, double best, Bounds bounds) {
  Acquisition a;
  a.kind = AcquisitionKind::ExpectedImprovement;
  a.model = model;
  a.best_observed = best;
  a.bounds = std::move(bounds);
  return a;
}

Acquisition Acquisition::pov(std::size_t model, Bounds bounds) {
  Acquisition a;
  a.kind = AcquisitionKind::ProbabilityOfValidity;
  a.model = model;
  a.bounds = std::move(bounds);
  return a;
}

Acquisition Acquisition::product(std::vector<Acquisition> factors, Bounds bounds) {
  Acquisition a;
  a.kind = AcquisitionKind::Product;
  a.factors = std::move(factors);
  a.bounds = std::move(bounds);
  return a;
}

Vector evaluate_acquisition(const Acquisition& acq, const std::vector<SurrogateModel>& models,
                            const PointSet& x) {
  switch (acq.kind) {
    case AcquisitionKind::ExpectedImprovement: {
      const Marginals marg = predict(model_at(models, acq.model).state, x);
      Vector out(x.rows());
      for (Eigen::Index i = 0; i < x.rows(); ++i) {
        out[i] = expected_improvement(marg.mean[i], marg.var[i], acq.best_observed);
      }
      return out;
    }
    case AcquisitionKind::ProbabilityOfValidity: {
      const SurrogateModel& mdl = model_at(models, acq.model);
      const Marginals marg = predict(mdl.state, x);
      Vector out(x.rows());
      for (Eigen::Index i = 0; i < x.rows(); ++i) {
        out[i] = predictive_density(mdl.lik, 1.0, marg.mean[i], marg.var[i]);
      }
      return out;
    }
    case AcquisitionKind::Product: {
      Vector out = Vector::Ones(x.rows());
      for (const Acquisition& f : acq.factors) {
        out = out.cwiseProduct(evaluate_acquisition(f, models, x));
      }
      return out;
    }
  }
  return Vector::Zero(x.rows());
}

SurrogateModel condition_on(const SurrogateModel& model, const Eigen::Ref<const Vector>& x,
                            double y) {
  SurrogateModel out = model;
  Dataset point{as_row(x), Vector::Constant(1, y)};
  const AdjustedPrior prior = AdjustedPrior::from_state(model.state);
  if (model.lik.is_gaussian()) {
    out.state = ngd_step(model.state, model.lik, point, prior, 1.0);
    return out;
  }
  out.lik.soft_labels = true;
  for (int s = 0; s < model.steps; ++s) {
    out.state = ngd_step(out.state, out.lik, point, prior, model.rho);
  }
  return out;
}

FantasyBatch fantasize_batch(const std::vector<SurrogateModel>& models, const Acquisition& acq,
                             int k, const FantasyOptions& options) {
  if (k < 0) throw InvalidArgument("batch size must be nonnegative");
  if (models.empty()) throw InvalidArgument("fantasy batches need at least one model");
  if (options.search_budget < 1) throw InvalidArgument("search budget must be positive");
  acq.bounds.validate();
  const Eigen::Index d = acq.bounds.dim();
  const Vector width = acq.bounds.upper - acq.bounds.lower;

  FantasyBatch out;
  out.points.resize(k, d);
  out.fantasized_values.resize(k, static_cast<Eigen::Index>(models.size()));
  out.variance_before.resize(k);
  out.variance_after.resize(k);
  out.acquisition_values.resize(k);

  std::vector<SurrogateModel> current = models;
  std::mt19937_64 gen(options.seed);

  for (int j = 0; j < k; ++j) {
    PointSet cand(options.search_budget, d);
    for (Eigen::Index i = 0; i < cand.rows(); ++i) {
      for (Eigen::Index c = 0; c < d; ++c) {
        cand(i, c) = acq.bounds.lower[c] + width[c] * uniform01(gen);
      }
    }
    const Vector scores = evaluate_acquisition(acq, current, cand);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(cand.rows()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return scores[a] > scores[b]; });

    Vector best_x = cand.row(order.front()).transpose();
    double best_v = scores[order.front()];
    const int starts = std::min<int>(std::max(options.refine_starts, 1), static_cast<int>(order.size()));
    for (int s = 0; s < starts; ++s) {
      Vector x = cand.row(order[static_cast<std::size_t>(s)]).transpose();
      double v = scores[order[static_cast<std::size_t>(s)]];
      Vector step = 0.05 * width;
      for (int r = 0; r < options.refine_steps; ++r) {
        bool improved = false;
        for (Eigen::Index c = 0; c < d; ++c) {
          for (double sign : {1.0, -1.0}) {
            Vector trial = x;
            trial[c] = std::clamp(x[c] + sign * step[c], acq.bounds.lower[c], acq.bounds.upper[c]);
            const double tv = acquisition_at(acq, current, trial);
            if (tv > v) {
              x = trial;
              v = tv;
              improved = true;
              break;
            }
          }
        }
        if (!improved) step *= 0.5;
      }
      if (v > best_v) {
        best_v = v;
        best_x = x;
      }
    }

    out.points.row(j) = best_x.transpose();
    out.acquisition_values[j] = best_v;
    out.variance_before[j] = predict(current.front().state, as_row(best_x)).var[0];
    for (std::size_t mi = 0; mi < current.size(); ++mi) {
      const Marginals marg = predict(current[mi].state, as_row(best_x));
      double y = 0.0;
      if (current[mi].lik.is_gaussian()) {
        y = marg.mean[0];
        if (options.fantasy_sample) {
          y += std::sqrt(marg.var[0] + current[mi].lik.noise_variance) * std_normal(gen);
        }
      } else {
        const double p = predictive_density(current[mi].lik, 1.0, marg.mean[0], marg.var[0]);
        y = options.fantasy_sample ? (uniform01(gen) < p ? 1.0 : -1.0) : 2.0 * p - 1.0;
      }
      out.fantasized_values(j, static_cast<Eigen::Index>(mi)) = y;
      current[mi] = condition_on(current[mi], best_x, y);
    }
    out.variance_after[j] = predict(current.front().state, as_row(best_x)).var[0];
  }
  return out;
}

}  // namespace dsvgp
