#pragma once

#include "dsvgp/dual_core.hpp"
#include "dsvgp/memory.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace dsvgp {

struct SequentialConfig {
  double rho = 0.8;
  int ngd_steps = 2;
  Eigen::Index num_inducing = 100;
  Eigen::Index memory_size = 0;
  double hyper_lr = 1e-2;
  int hyper_steps = 100;
  bool replay_in_update = true;
  bool remove_memory_from_prior = true;
  MemoryPolicy memory_policy = MemoryPolicy::Bls;
  bool pool_includes_memory = true;
  bool learn_noise = true;
  std::uint64_t seed = 0;
  /// Examples seen before the first batch of a run.
  Eigen::Index n_old_counter = 0;

  void validate() const;
};

struct StreamBatch {
  Dataset data;
  int index = 0;
};

/// Likelihood with its Gaussian noise taken from hyper.noise_variance.
Likelihood sync_noise(const Likelihood& lik, const Hyperparams& hyper);

/// Prior for the next batch: the current posterior with the memory sites
/// (evaluated under that posterior) subtracted. Negative eigenvalues left by
/// the subtraction are clipped to zero with a warning.
AdjustedPrior remove_memory(const DualState& state, const Likelihood& lik, const Dataset& memory,
                            bool enabled = true);

DualState process_batch(const DualState& state, const Likelihood& lik,
                        const SequentialConfig& config, const Dataset& batch,
                        const Dataset& memory);

/// Sum of expected log-likelihoods over batch and memory minus
/// KL(q || prior), the prior normalized. Equals the batch ELBO on the union
/// when memory holds all past data and the previous state had converged.
double seq_objective(const DualState& state, const Likelihood& lik, const Dataset& batch,
                     const Dataset& memory, const AdjustedPrior& prior);

/// Unnormalized four-term form: new-batch expected log-likelihood,
/// KL to the old posterior, memory expected log-likelihood, and minus the
/// expected log of the memory pseudo-likelihood built from sites under the
/// old posterior. Differs from seq_objective by a state-independent constant.
double seq_objective_vcl(const DualState& state, const DualState& old_state,
                         const Likelihood& lik, const Dataset& batch, const Dataset& memory);

/// -1/2 log|K B^+ K + K| - 1/2 y~^T (K + K B^+ K)^{-1} y~, y~ = K B^+ alpha + alpha.
double log_partition(const DualState& state);

/// Expected log-likelihood of the new batch plus (n_old / n_M) times that of
/// the memory, minus KL(q_theta || p_theta), with the duals held fixed and
/// all kernel quantities rebuilt under hyper.
double hyper_objective(const DualState& state, const Likelihood& lik, const Dataset& batch,
                       const Dataset& memory, Eigen::Index n_old, const Hyperparams& hyper);

struct HyperResult {
  Hyperparams hyper;
  double start_objective = 0.0;
  double final_objective = 0.0;
  int accepted_steps = 0;
};

/// Central finite-difference gradient of hyper_objective in log-space.
Vector hyper_gradient(const DualState& state, const Likelihood& lik, const Dataset& batch,
                      const Dataset& memory, Eigen::Index n_old, const Hyperparams& hyper,
                      bool learn_noise, double step = 1e-4);

/// Adam ascent on log-hyperparameters with step halving whenever a proposal
/// lowers the objective or makes it non-finite.
HyperResult optimize_hypers(const DualState& state, const Likelihood& lik, const Dataset& batch,
                            const Dataset& memory, Eigen::Index n_old,
                            const SequentialConfig& config);

struct BatchReport {
  int batch_index = 0;
  Eigen::Index n_seen = 0;
  double objective = 0.0;
  const DualState* state = nullptr;
  const MemorySet* memory = nullptr;
  const Likelihood* likelihood = nullptr;
};

struct StreamResult {
  DualState state;
  MemorySet memory;
  Likelihood likelihood;
  Eigen::Index n_seen = 0;
};

/// Per batch: refresh Z and project, NGD updates, hyperparameter updates,
/// memory update, then on_batch.
StreamResult run_stream(const std::vector<StreamBatch>& stream, const SequentialConfig& config,
                        const KernelSpec& kernel, const Likelihood& lik,
                        const std::function<void(const BatchReport&)>& on_batch = {});

/// Batch baseline on all data with the budget of a rounds-batch stream.
StreamResult fit_offline(const Dataset& data, const SequentialConfig& config,
                         const KernelSpec& kernel, const Likelihood& lik, int rounds,
                         const std::function<void(int, const DualState&, const Likelihood&)>&
                             on_round = {});

/// Seed for batch k of a run seeded with seed.
std::uint64_t batch_seed(std::uint64_t seed, int batch_index);

}  // namespace dsvgp
