#pragma once

#include "dsvgp/dual_core.hpp"
#include "dsvgp/harness/synthetic.hpp"

#include <cmath>
#include <cstdint>

namespace testing {

using dsvgp::Matrix;
using dsvgp::PointSet;
using dsvgp::Vector;

inline dsvgp::KernelSpec kernel(dsvgp::KernelFamily family = dsvgp::KernelFamily::SquaredExponential,
                                double variance = 1.0, double lengthscale = 1.0,
                                Eigen::Index dim = 1) {
  dsvgp::KernelSpec k;
  k.family = family;
  k.hyper.variance = variance;
  k.hyper.lengthscales = Vector::Constant(dim, lengthscale);
  return k;
}

inline PointSet uniform_points(Eigen::Index n, Eigen::Index d, std::uint64_t seed, double lo = -2.0,
                               double hi = 2.0) {
  dsvgp::Rng rng(seed);
  PointSet x(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index c = 0; c < d; ++c) x(i, c) = rng.uniform(lo, hi);
  return x;
}

inline Vector normal_vector(Eigen::Index n, std::uint64_t seed) {
  dsvgp::Rng rng(seed);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.normal();
  return v;
}

inline Matrix random_psd(Eigen::Index m, std::uint64_t seed, Eigen::Index rank = -1) {
  const Eigen::Index r = rank < 0 ? m : rank;
  dsvgp::Rng rng(seed);
  Matrix a(m, r);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < r; ++j) a(i, j) = rng.normal();
  return a * a.transpose();
}

inline double max_abs(const Matrix& a) { return a.size() ? a.cwiseAbs().maxCoeff() : 0.0; }

inline double rel_diff(double a, double b) {
  return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

/// Classification labels from the sign of a smooth function.
inline Vector sign_labels(const PointSet& x) {
  Vector y(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) y[i] = std::sin(2.0 * x(i, 0)) + 0.3 > 0 ? 1.0 : -1.0;
  return y;
}

/// Monte Carlo E[g(f)] for f ~ N(mean, var).
template <typename Fn>
double monte_carlo(double mean, double var, Fn&& g, long samples, std::uint64_t seed) {
  dsvgp::Rng rng(seed);
  const double sd = std::sqrt(var);
  double acc = 0.0;
  for (long s = 0; s < samples; ++s) acc += g(mean + sd * rng.normal());
  return acc / static_cast<double>(samples);
}

}  // namespace testing
