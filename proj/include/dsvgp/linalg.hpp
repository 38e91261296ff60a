#pragma once

#include "dsvgp/kernels.hpp"

#include <functional>
#include <string_view>

namespace dsvgp {

inline Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

/// Smallest eigenvalue of the symmetric part of m.
double min_eigenvalue(const Matrix& m);

/// PSD within tolerance: min eigenvalue >= -rel_tol * max(trace, 1).
bool is_psd(const Matrix& m, double rel_tol = 1e-8);

struct ClippedPsd {
  Matrix matrix;
  bool clipped = false;
  double most_negative = 0.0;
};

/// Eigen-clips negative eigenvalues of a symmetric matrix at zero.
ClippedPsd clip_psd(const Matrix& m);

struct PseudoInverse {
  Matrix inverse;
  Eigen::Index rank = 0;
  /// Sum of log eigenvalues over the retained range.
  double log_pseudo_determinant = 0.0;
};

/// Symmetric eigendecomposition pseudo-inverse; eigenvalues at or below
/// rel_tol * max eigenvalue are treated as zero.
PseudoInverse pseudo_inverse(const Matrix& m, double rel_tol = 1e-10);

/// KL(N(m1, V1) || N(m2, V2)).
double kl_gaussian(const Vector& m1, const Matrix& v1, const Vector& m2, const Matrix& v2);

void set_warning_sink(std::function<void(std::string_view)> sink);
void log_warning(std::string_view message);

}  // namespace dsvgp
