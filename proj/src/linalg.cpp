#include "dsvgp/linalg.hpp"

#include "dsvgp/errors.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <iostream>
#include <mutex>

namespace dsvgp {

namespace {

std::mutex& sink_mutex() {
  static std::mutex m;
  return m;
}

std::function<void(std::string_view)>& sink() {
  static std::function<void(std::string_view)> s = [](std::string_view msg) {
    std::cerr << "warning: " << msg << '\n';
  };
  return s;
}

}  // namespace

double min_eigenvalue(const Matrix& m) {
  if (m.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

bool is_psd(const Matrix& m, double rel_tol) {
  if (m.rows() == 0) return true;
  const double scale = std::max(std::abs(m.trace()), 1.0);
  return min_eigenvalue(m) >= -rel_tol * scale;
}

ClippedPsd clip_psd(const Matrix& m) {
  ClippedPsd out;
  if (m.rows() == 0) {
    out.matrix = m;
    return out;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m));
  Vector evals = es.eigenvalues();
  out.most_negative = std::min(0.0, evals.minCoeff());
  if (evals.minCoeff() >= 0.0) {
    out.matrix = symmetrize(m);
    return out;
  }
  out.clipped = true;
  evals = evals.cwiseMax(0.0);
  out.matrix = symmetrize(es.eigenvectors() * evals.asDiagonal() * es.eigenvectors().transpose());
  return out;
}

PseudoInverse pseudo_inverse(const Matrix& m, double rel_tol) {
  PseudoInverse out;
  const Eigen::Index n = m.rows();
  out.inverse = Matrix::Zero(n, n);
  if (n == 0) return out;
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m));
  const Vector& evals = es.eigenvalues();
  const double top = evals.cwiseAbs().maxCoeff();
  if (top <= 0.0) return out;
  Vector inv = Vector::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (evals[i] > rel_tol * top) {
      inv[i] = 1.0 / evals[i];
      out.log_pseudo_determinant += std::log(evals[i]);
      ++out.rank;
    }
  }
  out.inverse = symmetrize(es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose());
  return out;
}

double kl_gaussian(const Vector& m1, const Matrix& v1, const Vector& m2, const Matrix& v2) {
  const Eigen::Index k = m1.size();
  if (v1.rows() != k || v2.rows() != k || m2.size() != k) {
    throw DimensionMismatch("kl_gaussian: inconsistent shapes");
  }
  if (k == 0) return 0.0;
  const GramFactor f1 = stable_cholesky(symmetrize(v1));
  const GramFactor f2 = stable_cholesky(symmetrize(v2));
  const Matrix l2_inv_l1 = f2.half_solve(f1.chol);
  const Vector l2_inv_diff = f2.half_solve(m2 - m1);
  return 0.5 * (l2_inv_l1.squaredNorm() + l2_inv_diff.squaredNorm() - static_cast<double>(k) +
                f2.log_determinant() - f1.log_determinant());
}

void set_warning_sink(std::function<void(std::string_view)> s) {
  std::lock_guard<std::mutex> lock(sink_mutex());
  sink() = std::move(s);
}

void log_warning(std::string_view message) {
  std::lock_guard<std::mutex> lock(sink_mutex());
  if (sink()) sink()(message);
}

}  // namespace dsvgp
