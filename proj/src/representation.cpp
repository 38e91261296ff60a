#include "dsvgp/representation.hpp"

#include "dsvgp/errors.hpp"
#include "dsvgp/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace dsvgp {

PivotSelection pivoted_cholesky_select(const KernelSpec& kernel, const PointSet& candidates,
                                       Eigen::Index m) {
  if (candidates.rows() < 1) throw InvalidArgument("pivoted Cholesky needs at least one candidate");
  if (m < 1) throw InvalidArgument("target inducing count must be positive");
  const Eigen::Index n = candidates.rows();
  const Eigen::Index target = std::min(m, n);

  PivotSelection out;
  Vector d = gram_diagonal(kernel, candidates);
  const double initial_max = d.maxCoeff();
  Matrix l = Matrix::Zero(n, target);
  std::vector<bool> taken(static_cast<std::size_t>(n), false);

  for (Eigen::Index j = 0; j < target; ++j) {
    Eigen::Index pivot = -1;
    double best = -1.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (taken[static_cast<std::size_t>(i)]) continue;
      if (d[i] > best) {
        best = d[i];
        pivot = i;
      }
    }
    if (pivot < 0 || !(best >= kPivotRelativeStop * initial_max) || !(best > 0.0)) break;
    taken[static_cast<std::size_t>(pivot)] = true;
    out.indices.push_back(pivot);

    const Vector col = gram(kernel, candidates, candidates.row(pivot)).col(0);
    const double root = std::sqrt(best);
    for (Eigen::Index i = 0; i < n; ++i) {
      double v = col[i];
      for (Eigen::Index k = 0; k < j; ++k) v -= l(i, k) * l(pivot, k);
      l(i, j) = v / root;
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      d[i] = taken[static_cast<std::size_t>(i)] ? 0.0 : std::max(0.0, d[i] - l(i, j) * l(i, j));
    }
  }
  out.residual_diagonal = d;
  return out;
}

DualState project_duals(const DualState& state, const PointSet& z_new) {
  if (z_new.rows() < 1) throw InvalidArgument("projection target must be nonempty");
  if (z_new.cols() != state.z.cols()) throw DimensionMismatch("projection target dimension differs");
  const Matrix k_old_new = gram(state.kernel, state.z, z_new);
  const Matrix p_t = state.kzz.solve(k_old_new);  // P^T
  const Vector alpha = p_t.transpose() * state.alpha;
  const Matrix b = symmetrize(p_t.transpose() * state.b * p_t);
  return DualState::make(state.kernel, z_new, alpha, b);
}

PointSet select_rows(const PointSet& candidates, std::vector<Eigen::Index> indices) {
  std::sort(indices.begin(), indices.end());
  PointSet out(static_cast<Eigen::Index>(indices.size()), candidates.cols());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = candidates.row(indices[i]);
  }
  return out;
}

DualState refresh_representation(const DualState& state, const PointSet& batch_inputs,
                                 Eigen::Index m) {
  PointSet candidates = state.z;
  if (batch_inputs.rows() > 0) {
    if (batch_inputs.cols() != state.z.cols()) {
      throw DimensionMismatch("batch dimension differs from inducing dimension");
    }
    candidates.resize(state.z.rows() + batch_inputs.rows(), state.z.cols());
    candidates << state.z, batch_inputs;
  }
  std::vector<Eigen::Index> chosen = pivoted_cholesky_select(state.kernel, candidates, m).indices;
  std::sort(chosen.begin(), chosen.end());
  const Eigen::Index m_old = state.z.rows();
  bool unchanged = static_cast<Eigen::Index>(chosen.size()) == m_old;
  for (std::size_t i = 0; unchanged && i < chosen.size(); ++i) {
    unchanged = chosen[i] == static_cast<Eigen::Index>(i);
  }
  if (unchanged) return state;
  return project_duals(state, select_rows(candidates, chosen));
}

}  // namespace dsvgp
