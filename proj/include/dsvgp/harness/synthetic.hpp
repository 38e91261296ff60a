#pragma once

#include "dsvgp/acquisition.hpp"
#include "dsvgp/dual_core.hpp"

#include <cstdint>
#include <functional>
#include <random>
#include <string>

namespace dsvgp {

/// Platform-stable draws from a 64-bit Mersenne Twister.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  double uniform();  // [0, 1)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  std::uint64_t next() { return gen_(); }

 private:
  std::mt19937_64 gen_;
};

/// y = sin(x) + 0.3 sin(3x) + noise, x uniform on [0, 10].
Dataset make_sine(Eigen::Index n, std::uint64_t seed, double noise_sd = 0.2);
double sine_truth(double x);

/// Two interleaving half-moons with {0,1} labels.
Dataset make_moons(Eigen::Index n, std::uint64_t seed, double noise_sd = 0.2);

/// Draw of a zero-mean GP at x plus Gaussian noise.
Vector sample_gp(const KernelSpec& kernel, const PointSet& x, double noise_variance,
                 std::uint64_t seed);

struct BoObjective {
  std::string name;
  Bounds bounds;
  /// To be maximized.
  std::function<double(const Vector&)> value;
  std::function<bool(const Vector&)> valid;
  double optimum = 0.0;
};

/// "forrester" (1D), "branin" (2D, negated), "two_bump" (1D).
BoObjective bo_objective(const std::string& name);

}  // namespace dsvgp
