#pragma once

#include "dsvgp/dual_core.hpp"

#include <cstdint>
#include <vector>

namespace dsvgp {

double expected_improvement(double mean, double var, double best);

/// E[sigmoid(f)] under the classifier's latent marginal at x.
double probability_of_validity(const DualState& classifier, const Likelihood& lik,
                               const Eigen::Ref<const Vector>& x);

/// A model the acquisition reads from and fantasies are conditioned into.
/// rho and steps apply to non-Gaussian likelihoods; Gaussian models are
/// conditioned exactly with a single rho = 1 step.
struct SurrogateModel {
  DualState state;
  Likelihood lik;
  double rho = 0.5;
  int steps = 4;
};

enum class AcquisitionKind { ExpectedImprovement, ProbabilityOfValidity, Product };

struct Bounds {
  Vector lower;
  Vector upper;

  Eigen::Index dim() const { return lower.size(); }
  void validate() const;
};

struct Acquisition {
  AcquisitionKind kind = AcquisitionKind::ExpectedImprovement;
  /// Model the term reads; unused for Product.
  std::size_t model = 0;
  /// Incumbent for ExpectedImprovement (maximization).
  double best_observed = 0.0;
  std::vector<Acquisition> factors;
  Bounds bounds;

  static Acquisition ei(std::size_t model, double best, Bounds bounds);
  static Acquisition pov(std::size_t model, Bounds bounds);
  static Acquisition product(std::vector<Acquisition> factors, Bounds bounds);
};

Vector evaluate_acquisition(const Acquisition& acq, const std::vector<SurrogateModel>& models,
                            const PointSet& x);

struct FantasyOptions {
  int search_budget = 2048;
  int refine_steps = 20;
  int refine_starts = 4;
  bool fantasy_sample = false;
  std::uint64_t seed = 0;
};

struct FantasyBatch {
  PointSet points;
  /// Row per point, column per model.
  Matrix fantasized_values;
  /// Latent variance at each point under model 0 just before and just after
  /// its fantasy was conditioned in.
  Vector variance_before;
  Vector variance_after;
  Vector acquisition_values;
};

/// Greedy batch assembly: maximize the acquisition, fantasize y at the
/// maximizer from each model, condition copies of the models on it, repeat.
/// The models passed in are never modified.
FantasyBatch fantasize_batch(const std::vector<SurrogateModel>& models, const Acquisition& acq,
                             int k, const FantasyOptions& options = {});

/// Conditions a model on one (x, y) pair with dual updates.
SurrogateModel condition_on(const SurrogateModel& model, const Eigen::Ref<const Vector>& x,
                            double y);

}  // namespace dsvgp
