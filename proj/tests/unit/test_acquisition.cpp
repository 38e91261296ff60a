#include "doctest.h"
#include "helpers.hpp"

#include "dsvgp/acquisition.hpp"
#include "dsvgp/errors.hpp"

#include <cmath>

using namespace dsvgp;

namespace {

Bounds box(double lo, double hi) {
  return Bounds{Vector::Constant(1, lo), Vector::Constant(1, hi)};
}

SurrogateModel gaussian_model(const PointSet& x, const Vector& y, double noise = 0.01) {
  const KernelSpec k = testing::kernel(KernelFamily::SquaredExponential, 1.0, 0.5);
  const Likelihood lik = Likelihood::gaussian(noise);
  const Dataset d{x, y};
  const DualState s =
      iterate_to_convergence(init_state(k, x), lik, d, AdjustedPrior::zero(x.rows()), 1.0).state;
  return SurrogateModel{s, lik, 1.0, 1};
}

double sigmoid(double f) { return 1.0 / (1.0 + std::exp(-f)); }

}  // namespace

TEST_CASE("expected improvement closed form") {
  CHECK(expected_improvement(0.0, 1.0, 0.0) == doctest::Approx(0.3989422804).epsilon(1e-9));
  CHECK(expected_improvement(-1.0, 0.0, 0.0) == 0.0);
  CHECK(expected_improvement(2.0, 0.0, 0.5) == doctest::Approx(1.5));
  const double mc = testing::monte_carlo(1.0, 0.25, [](double f) { return std::max(f, 0.0); }, 10000000, 1);
  CHECK(std::abs(expected_improvement(1.0, 0.25, 0.0) - mc) < 5e-4);
}

TEST_CASE("expected improvement is nonnegative and grows with variance at the incumbent") {
  double prev = 0.0;
  for (double v = 0.0; v < 4.0; v += 0.25) {
    const double e = expected_improvement(0.3, v, 0.3);
    CHECK(e >= prev);
    prev = e;
  }
  for (std::uint64_t s = 0; s < 50; ++s) {
    const Vector r = testing::normal_vector(3, s);
    CHECK(expected_improvement(r[0], r[1] * r[1], r[2]) >= 0.0);
  }
}

TEST_CASE("expected improvement agrees with Monte Carlo") {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Vector r = testing::normal_vector(3, 100 + s);
    const double mean = r[0], var = 0.1 + r[1] * r[1], best = r[2];
    const double mc = testing::monte_carlo(mean, var, [&](double f) { return std::max(f - best, 0.0); }, 2000000, s);
    CHECK(std::abs(expected_improvement(mean, var, best) - mc) < 5e-3 * std::max(1.0, std::sqrt(var)));
  }
}

TEST_CASE("validity under the prior is near one half") {
  const KernelSpec k = testing::kernel();
  const DualState s = init_state(k, testing::uniform_points(3, 1, 1));
  const double p = probability_of_validity(s, Likelihood::bernoulli(), Vector::Constant(1, 0.3));
  CHECK(p > 0.45);
  CHECK(p < 0.55);
}

TEST_CASE("validity after many positive labels") {
  const KernelSpec k = testing::kernel(KernelFamily::SquaredExponential, 4.0, 1.0);
  const PointSet x = testing::uniform_points(30, 1, 2, 0.0, 1.0);
  const Dataset d{x, Vector::Ones(30)};
  const Likelihood lik = Likelihood::bernoulli();
  const DualState s = iterate_to_convergence(init_state(k, testing::uniform_points(5, 1, 3, 0.0, 1.0)), lik, d,
                                             AdjustedPrior::zero(5), 0.5)
                          .state;
  const Vector at = Vector::Constant(1, 0.5);
  const double p = probability_of_validity(s, lik, at);
  CHECK(p > 0.9);
  const Marginals m = predict(s, at.transpose());
  const double mc = testing::monte_carlo(m.mean[0], m.var[0], sigmoid, 4000000, 7);
  CHECK(std::abs(p - mc) < 5e-4);
}

TEST_CASE("an empty batch is empty") {
  const SurrogateModel m = gaussian_model(testing::uniform_points(4, 1, 1), testing::normal_vector(4, 2));
  const FantasyBatch b = fantasize_batch({m}, Acquisition::ei(0, 0.0, box(-2, 2)), 0);
  CHECK(b.points.rows() == 0);
  CHECK(b.fantasized_values.rows() == 0);
}

TEST_CASE("fantasy conditioning with the mean keeps the mean and shrinks the variance") {
  const SurrogateModel m = gaussian_model(testing::uniform_points(5, 1, 1), testing::normal_vector(5, 2), 0.1);
  for (double x0 : {-1.7, 0.2, 1.9}) {
    const Vector x = Vector::Constant(1, x0);
    const Marginals before = predict(m.state, x.transpose());
    const SurrogateModel c = condition_on(m, x, before.mean[0]);
    const Marginals after = predict(c.state, x.transpose());
    CHECK(std::abs(after.mean[0] - before.mean[0]) < 1e-6);
    CHECK(after.var[0] < before.var[0]);
  }
}

TEST_CASE("batch assembly leaves the real models untouched") {
  const SurrogateModel g = gaussian_model(testing::uniform_points(6, 1, 3), testing::normal_vector(6, 4));
  const PointSet xc = testing::uniform_points(8, 1, 5);
  const Likelihood lik = Likelihood::bernoulli();
  const DualState cs = iterate_to_convergence(init_state(testing::kernel(), xc), lik,
                                              Dataset{xc, testing::sign_labels(xc)}, AdjustedPrior::zero(8), 0.5)
                           .state;
  const std::vector<SurrogateModel> models{g, SurrogateModel{cs, lik, 0.5, 4}};
  const std::vector<SurrogateModel> copy = models;
  const Bounds bx = box(-2, 2);
  const Acquisition acq = Acquisition::product({Acquisition::ei(0, 0.5, bx), Acquisition::pov(1, bx)}, bx);
  FantasyOptions opts;
  opts.search_budget = 256;
  opts.seed = 3;
  const FantasyBatch b = fantasize_batch(models, acq, 3, opts);
  CHECK(b.points.rows() == 3);
  CHECK(b.fantasized_values.cols() == 2);
  for (std::size_t i = 0; i < models.size(); ++i) {
    CHECK(models[i].state.alpha == copy[i].state.alpha);
    CHECK(models[i].state.b == copy[i].state.b);
    CHECK(models[i].state.z == copy[i].state.z);
  }
  for (Eigen::Index i = 0; i < 3; ++i) CHECK(b.variance_after[i] < b.variance_before[i]);
  const FantasyBatch again = fantasize_batch(models, acq, 3, opts);
  CHECK(again.points == b.points);
}

TEST_CASE("a second pick on a two-bump landscape moves to the other bump") {
  PointSet x(5, 1);
  x << -2.0, -1.0, 0.0, 1.0, 2.0;
  Vector y(5);
  y << 0.0, 1.0, 0.0, 1.0, 0.0;
  const SurrogateModel m = gaussian_model(x, y);
  const Bounds bx = box(-2.5, 2.5);
  FantasyOptions opts;
  opts.seed = 1;
  const FantasyBatch b = fantasize_batch({m}, Acquisition::ei(0, 1.0, bx), 2, opts);
  REQUIRE(b.points.rows() == 2);
  CHECK(std::abs(b.points(0, 0) - b.points(1, 0)) > 0.5);
}

TEST_CASE("bounds are validated") {
  CHECK_THROWS_AS(box(1.0, 0.0).validate(), InvalidArgument);
  CHECK_NOTHROW(box(0.0, 1.0).validate());
}
