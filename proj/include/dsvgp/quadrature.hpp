#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <memory>

namespace dsvgp {

/// Gauss–Hermite rule rescaled for expectations under a standard normal:
/// E[g(Z)] ~= sum_i weights[i] * g(nodes[i]).
struct GaussHermiteRule {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;

  int order() const { return static_cast<int>(nodes.size()); }

  template <typename Fn>
  double expect(double mean, double var, Fn&& g) const {
    const double sd = std::sqrt(var);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < nodes.size(); ++i) acc += weights[i] * g(mean + sd * nodes[i]);
    return acc;
  }
};

/// Golub–Welsch construction; rules are cached per order.
std::shared_ptr<const GaussHermiteRule> gauss_hermite(int order);

}  // namespace dsvgp
