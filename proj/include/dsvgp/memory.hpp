#pragma once

#include "dsvgp/dual_core.hpp"

#include <cstdint>
#include <string_view>

namespace dsvgp {

struct MemorySet {
  PointSet inputs;
  Vector labels;
  Vector scores;
  Eigen::Index capacity = 0;

  Eigen::Index size() const { return inputs.rows(); }
  bool empty() const { return inputs.rows() == 0; }
  Dataset data() const { return Dataset{inputs, labels}; }

  static MemorySet with_capacity(Eigen::Index capacity, Eigen::Index dim);
};

enum class MemoryPolicy { Bls, Random };

std::string_view to_string(MemoryPolicy policy);
MemoryPolicy memory_policy_from_string(std::string_view name);

/// Bayesian leverage scores h_i = beta_hat_i * v_i, with v_i the latent
/// predictive variance under the state.
Vector bls(const DualState& state, const Likelihood& lik, const Dataset& data);

/// Dense evaluation for a state whose sites come from exactly these points:
/// beta_hat_i * (r_i + a_i^T (A diag(beta_hat) A^T + K^{-1})^{-1} a_i), with
/// a_i = K^{-1} k_zi and r_i = kappa_ii - k_zi^T K^{-1} k_zi.
Vector bls_dense(const DualState& state, const Likelihood& lik, const Dataset& data);

/// Ridge leverage scores a_i^T (A A^T / noise + K^{-1})^{-1} a_i for the
/// columns a_i of features.
Vector rls(double noise_variance, const Matrix& features, const Matrix& kzz);

struct MemoryUpdateOptions {
  MemoryPolicy policy = MemoryPolicy::Bls;
  bool pool_includes_memory = true;
};

/// Weighted sampling without replacement (exponential keys); returns
/// selected positions in ascending order.
std::vector<Eigen::Index> weighted_sample(const Vector& weights, Eigen::Index count,
                                          std::uint64_t seed);

MemorySet update_memory(const MemorySet& memory, const DualState& state, const Likelihood& lik,
                        const Dataset& batch, std::uint64_t seed,
                        const MemoryUpdateOptions& options = {});

}  // namespace dsvgp
