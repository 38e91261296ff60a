#pragma once

#include "dsvgp/dual_core.hpp"

#include <vector>

namespace dsvgp {

struct PivotSelection {
  /// Candidate rows in the order they were pivoted.
  std::vector<Eigen::Index> indices;
  Vector residual_diagonal;
};

inline constexpr double kPivotRelativeStop = 1e-10;

/// Greedy pivoted Cholesky on gram(candidates, candidates). Ties go to the
/// lowest index; stops once the largest residual drops below 1e-10 of the
/// initial largest diagonal.
PivotSelection pivoted_cholesky_select(const KernelSpec& kernel, const PointSet& candidates,
                                       Eigen::Index m);

/// alpha <- P alpha, B <- P B P^T with P = K_{new,old} K_{old,old}^{-1}.
DualState project_duals(const DualState& state, const PointSet& z_new);

/// Rows of candidates at the selected indices, in ascending index order.
PointSet select_rows(const PointSet& candidates, std::vector<Eigen::Index> indices);

/// Pivoted Cholesky over [Z_old; batch_inputs] followed by projection. Returns
/// the state untouched when the selection is exactly Z_old.
DualState refresh_representation(const DualState& state, const PointSet& batch_inputs,
                                 Eigen::Index m);

}  // namespace dsvgp
