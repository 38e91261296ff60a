#include "dsvgp/harness/cli.hpp"

#include "dsvgp/checkpoint.hpp"
#include "dsvgp/harness/config.hpp"
#include "dsvgp/harness/data.hpp"
#include "dsvgp/harness/metrics.hpp"
#include "dsvgp/harness/runs.hpp"
#include "dsvgp/harness/synthetic.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

namespace dsvgp {

namespace {

struct RunOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::vector<std::string> overrides;
  bool timing = false;
};

void add_run_options(CLI::App* cmd, RunOptions& o) {
  cmd->add_option("--config", o.config, "Config file (key = value with [sections])");
  cmd->add_option("--seed", o.seed, "Run seed; overrides run.seed");
  cmd->add_option("--out", o.out, "Output directory; overrides run.out");
  cmd->add_option("--set", o.overrides, "Override as section.key=value (repeatable)");
  cmd->add_flag("--timing", o.timing, "Record wall-clock milliseconds in the log");
}

RunConfig build_config(const std::string& task, const RunOptions& o) {
  RunConfig cfg = o.config.empty() ? RunConfig{} : load_config(o.config);
  cfg.task = task;
  for (const std::string& s : o.overrides) apply_override(cfg, s);
  if (o.seed) {
    cfg.seed = *o.seed;
    cfg.seed_set = true;
  }
  if (!o.out.empty()) cfg.out = o.out;
  if (o.timing) cfg.timing = true;
  if (!cfg.seed_set) throw ConfigError("a seed is required (--seed or run.seed)");
  return cfg;
}

PointSet feature_columns(const Table& t, const std::string& label_column, Eigen::Index dim,
                         Vector* labels) {
  const auto it = std::find(t.header.begin(), t.header.end(), label_column);
  const bool has_label = it != t.header.end();
  const auto label = has_label ? static_cast<Eigen::Index>(it - t.header.begin()) : -1;
  const Eigen::Index features = t.values.cols() - (has_label ? 1 : 0);
  if (features != dim) {
    throw DimensionMismatch("data has " + std::to_string(features) + " feature columns, model expects " +
                            std::to_string(dim));
  }
  PointSet x(t.values.rows(), dim);
  Eigen::Index out_col = 0;
  for (Eigen::Index c = 0; c < t.values.cols(); ++c) {
    if (c != label) x.col(out_col++) = t.values.col(c);
  }
  if (labels) {
    if (!has_label) throw MissingColumn("no column named '" + label_column + "'");
    *labels = t.values.col(label);
  }
  return x;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dual-parameterized sparse variational GP engine"};
  app.name("dsvgp");
  app.require_subcommand(1);

  RunOptions fit_o, stream_o, bo_o;
  CLI::App* fit = app.add_subcommand("fit", "Offline batch fit");
  add_run_options(fit, fit_o);
  CLI::App* stream = app.add_subcommand("stream", "Streaming run with memory");
  add_run_options(stream, stream_o);
  CLI::App* bo = app.add_subcommand("bo", "Fantasy-batch Bayesian optimization on a test function");
  add_run_options(bo, bo_o);

  std::string ckpt_path, data_path, pred_out = "predictions.csv", label_column = "y";
  CLI::App* predict = app.add_subcommand("predict", "Predict from a checkpoint");
  predict->add_option("--checkpoint", ckpt_path, "Checkpoint JSON")->required();
  predict->add_option("--data", data_path, "CSV with feature columns")->required();
  predict->add_option("--label-column", label_column, "Column ignored if present");
  predict->add_option("--out", pred_out, "Predictions CSV to write");

  std::string preds_path, eval_data, eval_out, eval_label = "y";
  CLI::App* eval = app.add_subcommand("eval", "Metrics from predictions and labels");
  eval->add_option("--predictions", preds_path, "Predictions CSV")->required();
  eval->add_option("--data", eval_data, "CSV holding the label column")->required();
  eval->add_option("--label-column", eval_label, "Label column name");
  eval->add_option("--out", eval_out, "Also write metrics JSON here");

  std::string kind = "sine", make_out;
  Eigen::Index make_n = 400;
  std::uint64_t make_seed = 0;
  double make_noise = 0.2;
  CLI::App* make = app.add_subcommand("make-data", "Write a synthetic dataset");
  make->add_option("--kind", kind, "sine or moons")->check(CLI::IsMember({"sine", "moons"}));
  make->add_option("--n", make_n, "Rows")->check(CLI::PositiveNumber);
  make->add_option("--seed", make_seed, "Generator seed")->required();
  make->add_option("--noise", make_noise, "Noise standard deviation");
  make->add_option("--out", make_out, "CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (fit->parsed()) {
      run_task(build_config("fit", fit_o));
    } else if (stream->parsed()) {
      run_task(build_config("stream", stream_o));
    } else if (bo->parsed()) {
      run_task(build_config("bo", bo_o));
    } else if (predict->parsed()) {
      const Checkpoint ckpt = load_checkpoint(ckpt_path);
      const Table t = read_csv(data_path);
      const PointSet x = feature_columns(t, label_column, ckpt.state.z.cols(), nullptr);
      const Standardization st{ckpt.input_mean, ckpt.input_scale};
      write_predictions(pred_out, make_predictions(ckpt.state, ckpt.likelihood, st.apply(x)));
    } else if (eval->parsed()) {
      const Predictions pred = read_predictions(preds_path);
      const Table t = read_csv(eval_data);
      const auto it = std::find(t.header.begin(), t.header.end(), eval_label);
      if (it == t.header.end()) throw MissingColumn("no column named '" + eval_label + "'");
      const Vector labels = t.values.col(static_cast<Eigen::Index>(it - t.header.begin()));
      const Metrics m = compute_metrics(pred, labels);
      nlohmann::json j{{"nlpd", m.nlpd}};
      if (pred.family == LikelihoodFamily::Gaussian) {
        j["rmse"] = m.rmse;
      } else {
        j["error_rate"] = m.error_rate;
        j["accuracy"] = m.accuracy;
      }
      out << j.dump() << '\n';
      if (!eval_out.empty()) {
        std::ofstream f(eval_out);
        if (!f) throw Error("cannot write '" + eval_out + "'");
        f << j.dump() << '\n';
      }
    } else if (make->parsed()) {
      const Dataset d = kind == "sine" ? make_sine(make_n, make_seed, make_noise)
                                       : make_moons(make_n, make_seed, make_noise);
      save_csv(make_out, d);
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace dsvgp
