#include "dsvgp/memory.hpp"

#include "dsvgp/errors.hpp"
#include "dsvgp/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

namespace dsvgp {

MemorySet MemorySet::with_capacity(Eigen::Index capacity, Eigen::Index dim) {
  if (capacity < 0) throw InvalidArgument("memory capacity must be nonnegative");
  MemorySet out;
  out.capacity = capacity;
  out.inputs.resize(0, dim);
  out.labels.resize(0);
  out.scores.resize(0);
  return out;
}

std::string_view to_string(MemoryPolicy policy) {
  return policy == MemoryPolicy::Bls ? "bls" : "random";
}

MemoryPolicy memory_policy_from_string(std::string_view name) {
  if (name == "bls") return MemoryPolicy::Bls;
  if (name == "random") return MemoryPolicy::Random;
  throw InvalidArgument("unknown memory policy '" + std::string(name) + "'");
}

Vector bls(const DualState& state, const Likelihood& lik, const Dataset& data) {
  if (data.empty()) return Vector(0);
  const Marginals marg = predict(state, data.x);
  Vector h(data.size());
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    const SiteValues s = site_expectations(lik, data.y[i], marg.mean[i], marg.var[i]);
    h[i] = s.beta_hat * marg.var[i];
  }
  return h;
}

Vector bls_dense(const DualState& state, const Likelihood& lik, const Dataset& data) {
  if (data.empty()) return Vector(0);
  const std::vector<SiteValues> sites = compute_sites(state, lik, data);
  const Matrix kzx = gram(state.kernel, state.z, data.x);
  const Matrix a = state.kzz.solve(kzx);
  Vector beta(data.size());
  for (Eigen::Index i = 0; i < data.size(); ++i) beta[i] = sites[static_cast<std::size_t>(i)].beta_hat;

  const Eigen::Index m = state.num_inducing();
  const Matrix k_inv = state.kzz.solve(Matrix(Matrix::Identity(m, m)));
  const Matrix precision = symmetrize(a * beta.asDiagonal() * a.transpose() + k_inv);
  const GramFactor pf = stable_cholesky(precision);
  const Matrix q_half = pf.half_solve(a);
  const Vector q = q_half.colwise().squaredNorm().transpose();
  const Vector nystrom = (kzx.array() * a.array()).colwise().sum().transpose();
  const Vector r = gram_diagonal(state.kernel, data.x) - nystrom;
  return beta.cwiseProduct(r + q);
}

Vector rls(double noise_variance, const Matrix& features, const Matrix& kzz) {
  if (!(noise_variance > 0.0)) throw InvalidArgument("noise variance must be positive");
  if (features.rows() != kzz.rows() || kzz.rows() != kzz.cols()) {
    throw DimensionMismatch("features and K_zz disagree in size");
  }
  const GramFactor kf = stable_cholesky(kzz);
  const Eigen::Index m = kzz.rows();
  const Matrix k_inv = kf.solve(Matrix(Matrix::Identity(m, m)));
  const Matrix precision = symmetrize(features * features.transpose() / noise_variance + k_inv);
  const GramFactor pf = stable_cholesky(precision);
  return pf.half_solve(features).colwise().squaredNorm().transpose();
}

std::vector<Eigen::Index> weighted_sample(const Vector& weights, Eigen::Index count,
                                          std::uint64_t seed) {
  const Eigen::Index n = weights.size();
  std::vector<Eigen::Index> all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), Eigen::Index{0});
  if (count >= n) return all;
  if (count <= 0) return {};

  std::mt19937_64 gen(seed);
  std::vector<double> keys(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    // 53-bit uniform in (0, 1].
    const double u = (static_cast<double>(gen() >> 11) + 1.0) * 0x1.0p-53;
    const double w = weights[i];
    keys[static_cast<std::size_t>(i)] =
        w > 0.0 ? std::log(u) / w : -std::numeric_limits<double>::infinity();
  }
  std::stable_sort(all.begin(), all.end(), [&](Eigen::Index a, Eigen::Index b) {
    return keys[static_cast<std::size_t>(a)] > keys[static_cast<std::size_t>(b)];
  });
  all.resize(static_cast<std::size_t>(count));
  std::sort(all.begin(), all.end());
  return all;
}

MemorySet update_memory(const MemorySet& memory, const DualState& state, const Likelihood& lik,
                        const Dataset& batch, std::uint64_t seed,
                        const MemoryUpdateOptions& options) {
  MemorySet out = MemorySet::with_capacity(memory.capacity, state.z.cols());
  if (memory.capacity == 0) return out;

  const Dataset pool = options.pool_includes_memory ? concat(memory.data(), batch) : batch;
  if (pool.empty()) return out;
  const Vector scores = bls(state, lik, pool);
  const Vector weights =
      options.policy == MemoryPolicy::Bls ? scores : Vector(Vector::Ones(pool.size()));
  const std::vector<Eigen::Index> keep = weighted_sample(weights, memory.capacity, seed);

  const Dataset kept = pool.subset(keep);
  out.inputs = kept.x;
  out.labels = kept.y;
  out.scores.resize(static_cast<Eigen::Index>(keep.size()));
  for (std::size_t i = 0; i < keep.size(); ++i) {
    out.scores[static_cast<Eigen::Index>(i)] = scores[keep[i]];
  }
  return out;
}

}  // namespace dsvgp
