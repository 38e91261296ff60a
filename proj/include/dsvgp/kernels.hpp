#pragma once

#include <Eigen/Dense>

#include <array>
#include <string>
#include <string_view>

namespace dsvgp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Rows of a PointSet are input points.
using PointSet = Eigen::MatrixXd;

enum class KernelFamily { Matern52, SquaredExponential };

std::string_view to_string(KernelFamily family);
KernelFamily kernel_family_from_string(std::string_view name);

struct Hyperparams {
  double variance = 1.0;
  /// One entry shared across dimensions, or one per input dimension (ARD).
  Vector lengthscales = Vector::Ones(1);
  double constant_variance = 0.0;
  double noise_variance = 0.1;

  bool ard() const { return lengthscales.size() > 1; }
  /// Throws InvalidArgument unless all positivity constraints hold.
  void validate() const;
};

struct KernelSpec {
  KernelFamily family = KernelFamily::Matern52;
  Hyperparams hyper;

  double prior_variance() const { return hyper.variance + hyper.constant_variance; }
};

double eval_kernel(const KernelSpec& spec, const Eigen::Ref<const Vector>& x,
                   const Eigen::Ref<const Vector>& x_prime);

Matrix gram(const KernelSpec& spec, const PointSet& a, const PointSet& b);

/// Diagonal of gram(a, a); constant for the stationary families provided.
Vector gram_diagonal(const KernelSpec& spec, const PointSet& a);

/// Cholesky factor of a symmetric matrix plus the diagonal jitter it needed.
struct GramFactor {
  Matrix matrix;
  Matrix chol;
  double jitter_used = 0.0;

  Eigen::Index size() const { return matrix.rows(); }
  /// matrix + jitter_used * I, the matrix chol actually factors.
  Matrix regularized() const;
  Vector solve(const Vector& rhs) const;
  Matrix solve(const Matrix& rhs) const;
  /// L^{-1} rhs.
  Matrix half_solve(const Eigen::Ref<const Matrix>& rhs) const;
  double log_determinant() const;
};

/// Tries jitter 0, 1e-6, 1e-5, ..., 1e-2 in order and keeps the first that
/// factors. Throws FactorizationFailed when the whole ladder fails.
GramFactor stable_cholesky(const Matrix& m);

/// Jitter escalation ladder, smallest first.
const std::array<double, 6>& jitter_ladder();

}  // namespace dsvgp
