#include "dsvgp/quadrature.hpp"

#include "dsvgp/errors.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <map>
#include <mutex>

namespace dsvgp {

namespace {

GaussHermiteRule build_rule(int order) {
  // Probabilists' Hermite recurrence: Jacobi matrix with off-diagonal sqrt(k).
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(order, order);
  for (int k = 1; k < order; ++k) {
    jacobi(k, k - 1) = std::sqrt(static_cast<double>(k));
    jacobi(k - 1, k) = jacobi(k, k - 1);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
  GaussHermiteRule rule;
  rule.nodes = es.eigenvalues();
  rule.weights = es.eigenvectors().row(0).transpose().array().square();
  // Symmetrize against eigen-solver round-off so odd moments vanish exactly.
  for (int i = 0; i < order / 2; ++i) {
    const int j = order - 1 - i;
    const double x = 0.5 * (rule.nodes[j] - rule.nodes[i]);
    const double w = 0.5 * (rule.weights[i] + rule.weights[j]);
    rule.nodes[i] = -x;
    rule.nodes[j] = x;
    rule.weights[i] = w;
    rule.weights[j] = w;
  }
  if (order % 2 == 1) rule.nodes[order / 2] = 0.0;
  rule.weights /= rule.weights.sum();
  return rule;
}

}  // namespace

std::shared_ptr<const GaussHermiteRule> gauss_hermite(int order) {
  if (order < 2) throw InvalidArgument("quadrature order must be at least 2");
  static std::mutex mutex;
  static std::map<int, std::shared_ptr<const GaussHermiteRule>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(order);
  if (it != cache.end()) return it->second;
  auto rule = std::make_shared<const GaussHermiteRule>(build_rule(order));
  cache.emplace(order, rule);
  return rule;
}

}  // namespace dsvgp
