#pragma once

#include "dsvgp/checkpoint.hpp"
#include "dsvgp/harness/config.hpp"
#include "dsvgp/harness/data.hpp"
#include "dsvgp/harness/metrics.hpp"
#include "dsvgp/sequential.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace dsvgp {

/// One line of a run log.
struct RunRecord {
  int batch_index = 0;
  Eigen::Index n_seen = 0;
  std::optional<double> nlpd;
  std::optional<double> rmse_or_error;
  std::optional<double> objective;
  std::optional<double> best_value;
  Hyperparams theta;
  double wall_ms = 0.0;
  std::uint64_t seed = 0;
  std::string config_hash;
};

std::string to_json_line(const RunRecord& record);

using RecordSink = std::function<void(const RunRecord&)>;

struct PreparedData {
  Dataset train;
  Dataset test;
};

/// Loads train (and test, or a seeded holdout) and maps Bernoulli labels to
/// +1/-1.
PreparedData prepare_data(const RunConfig& cfg);

struct ExperimentResult {
  DualState state;
  Likelihood likelihood;
  MemorySet memory;
  Standardization standardization;
  Eigen::Index n_seen = 0;
  std::optional<Metrics> final_metrics;
  Predictions final_predictions;
  std::vector<RunRecord> records;

  Checkpoint checkpoint(std::uint64_t seed) const;
};

/// Algorithm 1 over the configured stream; one record per batch. on_checkpoint
/// is called after every completed batch.
ExperimentResult run_stream_experiment(
    const RunConfig& cfg, const PreparedData& data, const RecordSink& sink = {},
    const std::function<void(const Checkpoint&)>& on_checkpoint = {});

/// Offline baseline with num_batches rounds of NGD and hyperparameter steps;
/// one record per round.
ExperimentResult run_fit_experiment(const RunConfig& cfg, const PreparedData& data,
                                    const RecordSink& sink = {});

struct BoResult {
  PointSet evaluated;
  Vector values;
  std::vector<bool> valid;
  double best_value = 0.0;
  std::vector<RunRecord> records;
};

/// Synthetic fantasy-batch Bayesian optimization.
BoResult run_bo_experiment(const RunConfig& cfg, const RecordSink& sink = {});

void write_predictions(const std::string& path, const Predictions& pred);
Predictions read_predictions(const std::string& path);

/// Executes cfg.task, writing log.jsonl, checkpoint.json and summaries into cfg.out.
void run_task(const RunConfig& cfg);

}  // namespace dsvgp
