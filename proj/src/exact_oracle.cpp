#include "dsvgp/exact_oracle.hpp"

#include "dsvgp/errors.hpp"

#include <cmath>
#include <numbers>

namespace dsvgp {

ExactPosterior fit_exact(const KernelSpec& kernel, double noise_variance, const PointSet& x,
                         const Vector& y) {
  if (x.rows() < 1) throw InvalidArgument("exact fit needs at least one point");
  if (x.rows() != y.size()) throw DimensionMismatch("inputs and targets differ in length");
  if (!(noise_variance > 0.0)) throw InvalidArgument("noise variance must be positive");

  ExactPosterior post;
  post.train_inputs = x;
  post.kernel = kernel;
  post.noise_variance = noise_variance;
  post.dual_beta = Vector::Constant(x.rows(), 1.0 / noise_variance);

  Matrix k = gram(kernel, x, x);
  k.diagonal().array() += noise_variance;
  post.factor = stable_cholesky(k);
  post.dual_alpha = post.factor.solve(y);
  return post;
}

MeanVar predict_exact(const ExactPosterior& post, const PointSet& x_star) {
  if (x_star.cols() != post.train_inputs.cols()) {
    throw DimensionMismatch("query dimension differs from training inputs");
  }
  const Matrix kxs = gram(post.kernel, post.train_inputs, x_star);
  const Matrix half = post.factor.half_solve(kxs);
  MeanVar out;
  out.mean = kxs.transpose() * post.dual_alpha;
  out.var = gram_diagonal(post.kernel, x_star) - half.colwise().squaredNorm().transpose();
  return out;
}

double log_marginal_likelihood(const ExactPosterior& post, const Vector& y) {
  const double n = static_cast<double>(y.size());
  return -0.5 * y.dot(post.dual_alpha) - 0.5 * post.factor.log_determinant() -
         0.5 * n * std::log(2.0 * std::numbers::pi);
}

}  // namespace dsvgp
