#include "dsvgp/harness/synthetic.hpp"

#include "dsvgp/errors.hpp"

#include <cmath>
#include <numbers>

namespace dsvgp {

double Rng::uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

double Rng::normal() {
  const double u1 = (static_cast<double>(gen_() >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double sine_truth(double x) { return std::sin(x) + 0.3 * std::sin(3.0 * x); }

Dataset make_sine(Eigen::Index n, std::uint64_t seed, double noise_sd) {
  Rng rng(seed);
  Dataset d{PointSet(n, 1), Vector(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = rng.uniform(0.0, 10.0);
    d.x(i, 0) = x;
    d.y[i] = sine_truth(x) + noise_sd * rng.normal();
  }
  return d;
}

Dataset make_moons(Eigen::Index n, std::uint64_t seed, double noise_sd) {
  Rng rng(seed);
  Dataset d{PointSet(n, 2), Vector(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const bool upper = i % 2 == 0;
    const double t = rng.uniform(0.0, std::numbers::pi);
    double x0 = upper ? std::cos(t) : 1.0 - std::cos(t);
    double x1 = upper ? std::sin(t) : 0.5 - std::sin(t);
    x0 += noise_sd * rng.normal();
    x1 += noise_sd * rng.normal();
    d.x(i, 0) = x0;
    d.x(i, 1) = x1;
    d.y[i] = upper ? 1.0 : 0.0;
  }
  return d;
}

Vector sample_gp(const KernelSpec& kernel, const PointSet& x, double noise_variance,
                 std::uint64_t seed) {
  const GramFactor f = stable_cholesky(gram(kernel, x, x));
  Rng rng(seed);
  Vector z(x.rows());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  Vector y = f.chol * z;
  const double sd = std::sqrt(noise_variance);
  for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += sd * rng.normal();
  return y;
}

BoObjective bo_objective(const std::string& name) {
  BoObjective o;
  o.name = name;
  if (name == "forrester") {
    o.bounds = Bounds{Vector::Zero(1), Vector::Ones(1)};
    o.value = [](const Vector& x) {
      const double t = 6.0 * x[0] - 2.0;
      return -(t * t * std::sin(12.0 * x[0] - 4.0));
    };
    o.valid = [](const Vector& x) { return x[0] < 0.9; };
    o.optimum = 6.02074;
  } else if (name == "branin") {
    Vector lo(2), hi(2);
    lo << -5.0, 0.0;
    hi << 10.0, 15.0;
    o.bounds = Bounds{lo, hi};
    o.value = [](const Vector& x) {
      const double a = 1.0, b = 5.1 / (4.0 * std::numbers::pi * std::numbers::pi);
      const double c = 5.0 / std::numbers::pi, r = 6.0, s = 10.0;
      const double t = 1.0 / (8.0 * std::numbers::pi);
      const double q = x[1] - b * x[0] * x[0] + c * x[0] - r;
      return -(a * q * q + s * (1.0 - t) * std::cos(x[0]) + s);
    };
    o.valid = [](const Vector& x) { return x[0] + x[1] > 2.0; };
    o.optimum = -0.397887;
  } else if (name == "two_bump") {
    o.bounds = Bounds{Vector::Constant(1, -1.0), Vector::Ones(1)};
    o.value = [](const Vector& x) {
      return std::exp(-std::pow((x[0] - 0.6) / 0.1, 2)) +
             std::exp(-std::pow((x[0] + 0.6) / 0.1, 2));
    };
    o.valid = [](const Vector&) { return true; };
    o.optimum = 1.0;
  } else {
    throw InvalidArgument("unknown BO objective '" + name + "'");
  }
  return o;
}

}  // namespace dsvgp
