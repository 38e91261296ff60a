#include "doctest.h"
#include "helpers.hpp"

#include "dsvgp/dual_core.hpp"
#include "dsvgp/errors.hpp"
#include "dsvgp/exact_oracle.hpp"
#include "dsvgp/linalg.hpp"

#include <cmath>
#include <numbers>

using namespace dsvgp;
using testing::max_abs;

namespace {

struct Conjugate1 {
  KernelSpec k = testing::kernel();
  PointSet x = PointSet::Zero(1, 1);
  Dataset data{PointSet::Zero(1, 1), Vector::Ones(1)};
  Likelihood lik = Likelihood::gaussian(1.0);
};

DualState random_state(std::uint64_t seed, Eigen::Index m = 5, Eigen::Index d = 2) {
  const KernelSpec k = testing::kernel(KernelFamily::Matern52, 1.2, 0.9, d);
  return DualState::make(k, testing::uniform_points(m, d, seed), testing::normal_vector(m, seed + 1),
                         testing::random_psd(m, seed + 2));
}

}  // namespace

TEST_CASE("initial state is the prior") {
  const KernelSpec k = testing::kernel(KernelFamily::Matern52, 1.7, 0.6);
  const DualState s = init_state(k, testing::uniform_points(4, 1, 1));
  const Marginals p = predict(s, testing::uniform_points(10, 1, 2));
  CHECK(p.mean.cwiseAbs().maxCoeff() == 0.0);
  CHECK(max_abs(p.var - Vector::Constant(10, 1.7)) < 1e-10);
  const Moments mo = recover_moments(s);
  CHECK(mo.mean.isZero(0.0));
  CHECK(max_abs(mo.cov - s.k) < 1e-10);
}

TEST_CASE("near-duplicate inducing inputs are absorbed by jitter") {
  PointSet z(2, 1);
  z << 0.3, 0.3 + 1e-9;
  const DualState s = init_state(testing::kernel(), z);
  CHECK(s.kzz.jitter_used > 0.0);
}

TEST_CASE("moment recovery by hand and against a dense inverse") {
  {
    const DualState s =
        DualState::make(testing::kernel(), PointSet::Zero(1, 1), Vector::Constant(1, 0.5), Matrix::Ones(1, 1));
    const Moments mo = recover_moments(s);
    CHECK(mo.mean[0] == 0.5);
    CHECK(mo.cov(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
  }
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const DualState s = random_state(seed);
    const Matrix kinv = s.k.inverse();
    const Matrix dense = (kinv * s.b * kinv + kinv).inverse();
    const Moments mo = recover_moments(s);
    CHECK(max_abs(mo.cov - dense) < 1e-8 * std::max(1.0, max_abs(dense)));
    CHECK((mo.mean.array() == s.alpha.array()).all());
    CHECK(is_psd(mo.cov));
  }
}

TEST_CASE("dual and moment prediction routes agree") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const DualState s = random_state(seed, 6, 2);
    const PointSet xs = testing::uniform_points(15, 2, seed + 50);
    const Marginals a = predict(s, xs);
    const Marginals b = predict_from_moments(s, recover_moments(s), xs);
    CHECK(max_abs(a.mean - b.mean) < 1e-8);
    CHECK(max_abs(a.var - b.var) < 1e-8);
    CHECK(a.var.maxCoeff() <= s.kernel.prior_variance() + 1e-10);
    CHECK(a.var.minCoeff() > 0.0);
  }
}

TEST_CASE("sites of the zero state") {
  Conjugate1 c;
  const DualState s = init_state(c.k, c.x);
  const auto sites = compute_sites(s, c.lik, c.data);
  REQUIRE(sites.size() == 1);
  CHECK(sites[0].alpha_hat == 1.0);
  CHECK(sites[0].beta_hat == 1.0);
}

TEST_CASE("single-point conjugate fixed point") {
  Conjugate1 c;
  DualState s = init_state(c.k, c.x);
  const AdjustedPrior zero = AdjustedPrior::zero(1);
  s = ngd_step(s, c.lik, c.data, zero, 1.0);
  CHECK(s.alpha[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(s.b(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  const DualState again = ngd_step(s, c.lik, c.data, zero, 1.0);
  CHECK(std::abs(again.alpha[0] - s.alpha[0]) < 1e-10);
  CHECK(std::abs(again.b(0, 0) - s.b(0, 0)) < 1e-10);

  const Marginals p = predict(s, c.x);
  CHECK(p.mean[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(p.var[0] == doctest::Approx(0.5).epsilon(1e-12));

  const double log_n = -0.5 * std::log(2 * std::numbers::pi * 2.0) - 0.25;
  CHECK(elbo(s, c.lik, c.data) == doctest::Approx(log_n).epsilon(1e-10));
  CHECK(elbo(s, c.lik, c.data) == doctest::Approx(-1.515512).epsilon(1e-6));

  const PseudoData pd = pseudo_data(s);
  CHECK(pd.y_tilde[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(pd.sigma_tilde(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_FALSE(pd.degenerate);

  CHECK(site_reconstruction_check(s, compute_sites(s, c.lik, c.data), c.x) < 1e-8);
}

TEST_CASE("a vanishing step leaves the state unchanged") {
  const DualState s = random_state(3);
  Dataset data{testing::uniform_points(7, 2, 4), testing::normal_vector(7, 5)};
  const DualState t = ngd_step(s, Likelihood::gaussian(0.2), data, AdjustedPrior::zero(5), 1e-12);
  CHECK(max_abs(t.alpha - s.alpha) < 1e-9);
  CHECK(max_abs(t.b - s.b) < 1e-9);
}

TEST_CASE("conjugate exactness with Z = X") {
  const KernelSpec k = testing::kernel(KernelFamily::SquaredExponential, 1.0, 0.5);
  const PointSet x = testing::uniform_points(8, 1, 31);
  const Vector y = testing::normal_vector(8, 32);
  const Likelihood lik = Likelihood::gaussian(0.1);
  const ConvergenceResult r =
      iterate_to_convergence(init_state(k, x), lik, Dataset{x, y}, AdjustedPrior::zero(8), 1.0);
  CHECK(r.converged);
  const PointSet xs = testing::uniform_points(20, 1, 33, -2.5, 2.5);
  const Marginals p = predict(r.state, xs);
  const MeanVar e = predict_exact(fit_exact(k, 0.1, x, y), xs);
  for (Eigen::Index i = 0; i < 20; ++i) {
    CHECK(testing::rel_diff(p.mean[i], e.mean[i]) < 1e-6);
    CHECK(testing::rel_diff(p.var[i], e.var[i]) < 1e-6);
  }
  const double lml = log_marginal_likelihood(fit_exact(k, 0.1, x, y), y);
  CHECK(elbo(r.state, lik, Dataset{x, y}) == doctest::Approx(lml).epsilon(1e-6));
}

TEST_CASE("the ELBO never exceeds the log marginal likelihood") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const KernelSpec k = testing::kernel(KernelFamily::Matern52, 1.0, 0.7);
    const PointSet x = testing::uniform_points(12, 1, seed);
    const Vector y = testing::normal_vector(12, seed + 7);
    const Likelihood lik = Likelihood::gaussian(0.3);
    const double lml = log_marginal_likelihood(fit_exact(k, 0.3, x, y), y);
    const PointSet z = testing::uniform_points(5, 1, seed + 9);
    DualState s = init_state(k, z);
    for (int it = 0; it < 6; ++it) {
      CHECK(elbo(s, lik, Dataset{x, y}) <= lml + 1e-10);
      s = ngd_step(s, lik, Dataset{x, y}, AdjustedPrior::zero(5), 0.5);
    }
    const DualState r(DualState::make(k, z, testing::normal_vector(5, seed + 3), testing::random_psd(5, seed + 4)));
    CHECK(elbo(r, lik, Dataset{x, y}) <= lml + 1e-10);
  }
}

TEST_CASE("ELBO of the prior with no data is zero") {
  const DualState s = init_state(testing::kernel(), testing::uniform_points(4, 1, 1));
  CHECK(std::abs(elbo(s, Likelihood::gaussian(1.0), Dataset{})) < 1e-12);
}

TEST_CASE("KL to a prior matches the dense Gaussian formula") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const DualState s = random_state(seed + 40);
    const AdjustedPrior prior{testing::normal_vector(5, seed), testing::random_psd(5, seed + 1),
                              testing::normal_vector(5, seed + 2)};
    const PriorMoments pm = prior_moments(s, prior);
    // Prior naturals straight from the definition.
    const Matrix kinv = s.k.inverse();
    const Matrix lam = kinv * (s.k + prior.b) * kinv;
    const Vector lin = kinv * (prior.alpha + prior.b * kinv * prior.anchor);
    CHECK(max_abs(pm.cov - lam.inverse()) < 1e-8 * std::max(1.0, max_abs(pm.cov)));
    CHECK(max_abs(pm.mean - lam.inverse() * lin) < 1e-8 * std::max(1.0, max_abs(pm.mean)));
    const Moments q = recover_moments(s);
    CHECK(kl_to_prior(s, prior) == doctest::Approx(kl_gaussian(q.mean, q.cov, pm.mean, pm.cov)).epsilon(1e-8));
  }
}

TEST_CASE("pseudo-data of a zero state is degenerate") {
  const PseudoData pd = pseudo_data(init_state(testing::kernel(), testing::uniform_points(3, 1, 2)));
  CHECK(pd.degenerate);
  CHECK(pd.rank == 0);
  CHECK(max_abs(pd.sigma_tilde) == 0.0);
}

TEST_CASE("pseudo-data natural parameters") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const DualState s = random_state(seed + 60);
    const PseudoData pd = pseudo_data(s);
    CHECK_FALSE(pd.degenerate);
    const Matrix kinv = s.k.inverse();
    const Matrix prec = pd.sigma_tilde.inverse();
    const Matrix expected = kinv * s.b * kinv;
    CHECK(max_abs(prec - expected) < 1e-8 * std::max(1.0, max_abs(expected)));
    // Prior naturals plus pseudo-likelihood naturals give the posterior.
    const Matrix post_prec = kinv * (s.k + s.b) * kinv;
    CHECK(max_abs(prec * pd.y_tilde - post_prec * s.alpha) < 1e-7 * std::max(1.0, max_abs(post_prec * s.alpha)));
  }
}

TEST_CASE("site reconstruction is zero for an empty state") {
  const DualState s = init_state(testing::kernel(), testing::uniform_points(3, 1, 2));
  CHECK(site_reconstruction_check(s, {}, PointSet(0, 1)) == 0.0);
}

TEST_CASE("bernoulli fixed point satisfies the site equations") {
  const KernelSpec k = testing::kernel(KernelFamily::SquaredExponential, 1.0, 0.8, 2);
  const PointSet x = testing::uniform_points(30, 2, 70);
  const Dataset data{x, testing::sign_labels(x)};
  const PointSet z = testing::uniform_points(10, 2, 71);
  const Likelihood lik = Likelihood::bernoulli();
  DualState s = init_state(k, z);
  for (int i = 0; i < 200; ++i) s = ngd_step(s, lik, data, AdjustedPrior::zero(10), 0.5);
  CHECK(site_reconstruction_check(s, compute_sites(s, lik, data), x) < 1e-4);
}

TEST_CASE("ngd keeps B positive semidefinite") {
  const PointSet x = testing::uniform_points(20, 2, 80);
  const Dataset data{x, testing::sign_labels(x)};
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    DualState s = random_state(seed + 90);
    const AdjustedPrior prior{testing::normal_vector(5, seed), testing::random_psd(5, seed + 1, 2),
                              testing::normal_vector(5, seed + 2)};
    const double rho = 0.05 + 0.095 * static_cast<double>(seed);
    for (int it = 0; it < 5; ++it) {
      s = ngd_step(s, Likelihood::bernoulli(), data, prior, rho);
      CHECK(min_eigenvalue(s.b) >= -1e-8 * std::max(1.0, s.b.trace()));
    }
  }
}

TEST_CASE("invalid ngd arguments") {
  const DualState s = random_state(1);
  const Dataset data{testing::uniform_points(3, 2, 2), testing::normal_vector(3, 3)};
  CHECK_THROWS_AS(ngd_step(s, Likelihood::gaussian(1.0), data, AdjustedPrior::zero(5), 0.0), InvalidArgument);
  CHECK_THROWS_AS(ngd_step(s, Likelihood::gaussian(1.0), data, AdjustedPrior::zero(5), 1.5), InvalidArgument);
  AdjustedPrior bad = AdjustedPrior::zero(5);
  bad.b(0, 0) = -1.0;
  CHECK_THROWS_AS(ngd_step(s, Likelihood::gaussian(1.0), data, bad, 0.5), NonPsd);
  CHECK_THROWS_AS(ngd_step(s, Likelihood::gaussian(1.0), data, AdjustedPrior::zero(4), 0.5), DimensionMismatch);
}
