#pragma once

#include "dsvgp/errors.hpp"
#include "dsvgp/kernels.hpp"
#include "dsvgp/likelihoods.hpp"
#include "dsvgp/sequential.hpp"

#include <cstdint>
#include <string>

namespace dsvgp {

class ConfigError : public Error {
 public:
  using Error::Error;
};

struct DataConfig {
  std::string train;
  std::string test;
  std::string label_column = "y";
  double holdout_fraction = 0.0;
  std::string stream_order = "sorted";
  Eigen::Index sort_dim = 0;
  int num_batches = 4;
  bool standardize_inputs = false;
};

struct ModelConfig {
  KernelFamily kernel = KernelFamily::Matern52;
  double variance = 1.0;
  Vector lengthscales = Vector::Ones(1);
  double constant_variance = 0.0;
  LikelihoodFamily likelihood = LikelihoodFamily::Gaussian;
  double noise_variance = 0.1;
  int quadrature_order = kDefaultQuadratureOrder;
  Eigen::Index num_inducing = 100;
};

struct BoConfig {
  std::string objective = "branin";
  int iterations = 5;
  int batch_size = 4;
  int initial_points = 10;
  int search_budget = 2048;
  int refine_steps = 20;
  int refine_starts = 4;
  bool fantasy_sample = false;
  bool constrained = false;
};

struct RunConfig {
  std::string task;
  std::uint64_t seed = 0;
  std::string out = ".";
  bool timing = false;
  DataConfig data;
  ModelConfig model;
  SequentialConfig sequential;
  BoConfig bo;
  bool seed_set = false;
  bool rho_set = false;
  bool ngd_steps_set = false;

  /// Kernel spec with lengthscales broadcast to dim when a single one was given.
  KernelSpec kernel_spec(Eigen::Index dim) const;
  Likelihood likelihood() const;
  /// Sequential settings with likelihood-dependent step defaults filled in.
  SequentialConfig resolved_sequential() const;
};

/// Parses `key = value` lines grouped under [run], [data], [model],
/// [sequential] and [bo]. Keys before any section belong to [run]. Blank
/// lines and lines starting with # or ; are ignored.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// Applies one "section.key=value" override.
void apply_override(RunConfig& cfg, const std::string& assignment);
void set_config_value(RunConfig& cfg, const std::string& section, const std::string& key,
                      const std::string& value);

/// Canonical text of every resolved setting, one per line.
std::string canonical_config(const RunConfig& cfg);

std::uint64_t fnv1a64(const std::string& text);
std::string config_hash(const RunConfig& cfg);

}  // namespace dsvgp
