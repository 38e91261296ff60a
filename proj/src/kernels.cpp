#include "dsvgp/kernels.hpp"

#include "dsvgp/errors.hpp"

#include <cmath>

namespace dsvgp {

namespace {

// Pivots below this fraction of the largest diagonal entry count as a failed
// factorization even when LLT itself reports success.
constexpr double kRelativePivotFloor = 1e-13;

double scaled_distance(const KernelSpec& spec, const Eigen::Ref<const Vector>& x,
                       const Eigen::Ref<const Vector>& x_prime) {
  const Vector& ls = spec.hyper.lengthscales;
  if (x.size() != x_prime.size()) {
    throw DimensionMismatch("kernel inputs have different dimensions");
  }
  if (ls.size() != 1 && ls.size() != x.size()) {
    throw DimensionMismatch("lengthscale count " + std::to_string(ls.size()) +
                            " does not match input dimension " + std::to_string(x.size()));
  }
  double r2 = 0.0;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const double l = ls.size() == 1 ? ls[0] : ls[k];
    const double d = (x[k] - x_prime[k]) / l;
    r2 += d * d;
  }
  return r2;
}

double stationary_profile(KernelFamily family, double r2) {
  switch (family) {
    case KernelFamily::SquaredExponential:
      return std::exp(-0.5 * r2);
    case KernelFamily::Matern52: {
      const double s = std::sqrt(5.0 * r2);
      return (1.0 + s + 5.0 * r2 / 3.0) * std::exp(-s);
    }
  }
  return 0.0;
}

}  // namespace

std::string_view to_string(KernelFamily family) {
  switch (family) {
    case KernelFamily::Matern52:
      return "matern52";
    case KernelFamily::SquaredExponential:
      return "squared_exponential";
  }
  return "unknown";
}

KernelFamily kernel_family_from_string(std::string_view name) {
  if (name == "matern52" || name == "matern") return KernelFamily::Matern52;
  if (name == "squared_exponential" || name == "se" || name == "rbf") {
    return KernelFamily::SquaredExponential;
  }
  throw InvalidArgument("unknown kernel family '" + std::string(name) + "'");
}

void Hyperparams::validate() const {
  if (!(variance > 0.0) || !std::isfinite(variance)) {
    throw InvalidArgument("kernel variance must be positive");
  }
  if (lengthscales.size() == 0) throw InvalidArgument("at least one lengthscale required");
  for (Eigen::Index i = 0; i < lengthscales.size(); ++i) {
    if (!(lengthscales[i] > 0.0) || !std::isfinite(lengthscales[i])) {
      throw InvalidArgument("lengthscales must be positive");
    }
  }
  if (!(constant_variance >= 0.0) || !std::isfinite(constant_variance)) {
    throw InvalidArgument("constant variance must be nonnegative");
  }
  if (!(noise_variance > 0.0) || !std::isfinite(noise_variance)) {
    throw InvalidArgument("noise variance must be positive");
  }
}

double eval_kernel(const KernelSpec& spec, const Eigen::Ref<const Vector>& x,
                   const Eigen::Ref<const Vector>& x_prime) {
  const double r2 = scaled_distance(spec, x, x_prime);
  return spec.hyper.variance * stationary_profile(spec.family, r2) +
         spec.hyper.constant_variance;
}

Matrix gram(const KernelSpec& spec, const PointSet& a, const PointSet& b) {
  if (a.cols() != b.cols()) throw DimensionMismatch("gram: point sets differ in dimension");
  const Vector& ls = spec.hyper.lengthscales;
  if (ls.size() != 1 && ls.size() != a.cols()) {
    throw DimensionMismatch("lengthscale count " + std::to_string(ls.size()) +
                            " does not match input dimension " + std::to_string(a.cols()));
  }
  // Scale once and lay points out as columns so the inner loop is contiguous.
  const Vector inv = ls.size() == 1 ? Vector::Constant(a.cols(), 1.0 / ls[0])
                                    : Vector(ls.cwiseInverse());
  const Matrix sa = (a * inv.asDiagonal()).transpose();
  const Matrix sb = (b * inv.asDiagonal()).transpose();
  Matrix out(a.rows(), b.rows());
  for (Eigen::Index j = 0; j < b.rows(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      const double r2 = (sa.col(i) - sb.col(j)).squaredNorm();
      out(i, j) = spec.hyper.variance * stationary_profile(spec.family, r2) +
                  spec.hyper.constant_variance;
    }
  }
  return out;
}

Vector gram_diagonal(const KernelSpec& spec, const PointSet& a) {
  return Vector::Constant(a.rows(), spec.prior_variance());
}

Matrix GramFactor::regularized() const {
  Matrix out = matrix;
  out.diagonal().array() += jitter_used;
  return out;
}

Vector GramFactor::solve(const Vector& rhs) const {
  Vector tmp = chol.triangularView<Eigen::Lower>().solve(rhs);
  return chol.transpose().triangularView<Eigen::Upper>().solve(tmp);
}

Matrix GramFactor::solve(const Matrix& rhs) const {
  Matrix tmp = chol.triangularView<Eigen::Lower>().solve(rhs);
  return chol.transpose().triangularView<Eigen::Upper>().solve(tmp);
}

Matrix GramFactor::half_solve(const Eigen::Ref<const Matrix>& rhs) const {
  return chol.triangularView<Eigen::Lower>().solve(rhs);
}

double GramFactor::log_determinant() const {
  return 2.0 * chol.diagonal().array().log().sum();
}

const std::array<double, 6>& jitter_ladder() {
  static const std::array<double, 6> ladder{0.0, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2};
  return ladder;
}

GramFactor stable_cholesky(const Matrix& m) {
  if (m.rows() != m.cols()) throw DimensionMismatch("stable_cholesky: matrix not square");
  const double scale = m.rows() > 0 ? m.diagonal().cwiseAbs().maxCoeff() : 0.0;
  for (double jitter : jitter_ladder()) {
    Matrix shifted = m;
    shifted.diagonal().array() += jitter;
    Eigen::LLT<Matrix> llt(shifted);
    if (llt.info() != Eigen::Success) continue;
    Matrix l = llt.matrixL();
    const double min_pivot = l.rows() > 0 ? l.diagonal().array().square().minCoeff() : 1.0;
    if (!(min_pivot > kRelativePivotFloor * scale) || !l.allFinite()) continue;
    return GramFactor{m, std::move(l), jitter};
  }
  throw FactorizationFailed("Cholesky failed even with jitter 1e-2; kernel badly scaled?");
}

}  // namespace dsvgp
