#include "dsvgp/harness/runs.hpp"

#include "dsvgp/acquisition.hpp"
#include "dsvgp/harness/synthetic.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

namespace dsvgp {

namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

class Stopwatch {
 public:
  explicit Stopwatch(bool enabled) : enabled_(enabled), start_(Clock::now()) {}
  double elapsed_ms() const {
    if (!enabled_) return 0.0;
    return std::chrono::duration<double, std::milli>(Clock::now() - start_).count();
  }

 private:
  bool enabled_;
  Clock::time_point start_;
};

json opt(const std::optional<double>& v) {
  if (!v || !std::isfinite(*v)) return nullptr;
  return *v;
}

Hyperparams theta_of(const DualState& state, const Likelihood& lik) {
  Hyperparams h = state.kernel.hyper;
  if (lik.is_gaussian()) h.noise_variance = lik.noise_variance;
  return h;
}

Dataset standardized(const Dataset& d, const Standardization& st) {
  return Dataset{st.apply(d.x), d.y};
}

void write_text_atomic(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw Error("cannot write '" + tmp + "'");
    out << text;
    if (!out) throw Error("failed writing '" + tmp + "'");
  }
  std::filesystem::rename(tmp, path);
}

void write_batch_csv(const std::string& path, const std::vector<RunRecord>& records) {
  Matrix values(static_cast<Eigen::Index>(records.size()), 6);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = 0; i < records.size(); ++i) {
    const RunRecord& r = records[i];
    values.row(static_cast<Eigen::Index>(i)) << r.batch_index, static_cast<double>(r.n_seen),
        r.nlpd.value_or(nan), r.rmse_or_error.value_or(nan), r.objective.value_or(nan), r.wall_ms;
  }
  write_csv(path, {"batch_index", "n_seen", "nlpd", "rmse_or_error", "objective", "wall_ms"},
            values);
}

json metrics_json(const Metrics& m, LikelihoodFamily family) {
  json j{{"nlpd", m.nlpd}};
  if (family == LikelihoodFamily::Gaussian) {
    j["rmse"] = m.rmse;
  } else {
    j["error_rate"] = m.error_rate;
    j["accuracy"] = m.accuracy;
  }
  return j;
}

RunRecord base_record(const RunConfig& cfg, const std::string& hash) {
  RunRecord r;
  r.seed = cfg.seed;
  r.config_hash = hash;
  return r;
}

void finish_predictions(ExperimentResult& out, const PreparedData& data) {
  if (data.test.empty()) return;
  out.final_predictions =
      make_predictions(out.state, out.likelihood, out.standardization.apply(data.test.x));
  out.final_metrics = compute_metrics(out.final_predictions, data.test.y);
}

}  // namespace

std::string to_json_line(const RunRecord& r) {
  json j;
  j["batch_index"] = r.batch_index;
  j["n_seen"] = r.n_seen;
  j["nlpd"] = opt(r.nlpd);
  j["rmse_or_error"] = opt(r.rmse_or_error);
  j["elbo_like_objective"] = opt(r.objective);
  if (r.best_value) j["best_value"] = opt(r.best_value);
  json ls = json::array();
  for (Eigen::Index i = 0; i < r.theta.lengthscales.size(); ++i) ls.push_back(r.theta.lengthscales[i]);
  j["theta"] = {{"variance", r.theta.variance},
                {"lengthscales", ls},
                {"constant_variance", r.theta.constant_variance},
                {"noise_variance", r.theta.noise_variance}};
  j["wall_ms"] = r.wall_ms;
  j["seed"] = r.seed;
  j["config_hash"] = r.config_hash;
  return j.dump();
}

PreparedData prepare_data(const RunConfig& cfg) {
  if (cfg.data.train.empty()) throw ConfigError("data.train is required");
  PreparedData out;
  Dataset train = load_csv(cfg.data.train, cfg.data.label_column);
  if (!cfg.data.test.empty()) {
    out.train = std::move(train);
    out.test = load_csv(cfg.data.test, cfg.data.label_column);
    if (out.test.dim() != out.train.dim()) throw DimensionMismatch("train and test dimensions differ");
  } else if (cfg.data.holdout_fraction > 0.0) {
    auto [tr, te] = holdout_split(train, cfg.data.holdout_fraction, cfg.seed);
    out.train = std::move(tr);
    out.test = std::move(te);
  } else {
    out.train = std::move(train);
  }
  if (cfg.model.likelihood == LikelihoodFamily::BernoulliLogit) {
    to_signed_labels(out.train);
    if (!out.test.empty()) to_signed_labels(out.test);
  }
  return out;
}

Checkpoint ExperimentResult::checkpoint(std::uint64_t seed) const {
  return Checkpoint{state, likelihood, memory, seed, n_seen, standardization.mean,
                    standardization.scale};
}

ExperimentResult run_stream_experiment(const RunConfig& cfg, const PreparedData& data,
                                       const RecordSink& sink,
                                       const std::function<void(const Checkpoint&)>& on_checkpoint) {
  const SequentialConfig q = cfg.resolved_sequential();
  const Likelihood lik = cfg.likelihood();
  const std::string hash = config_hash(cfg);
  StreamStrategy strategy{stream_order_from_string(cfg.data.stream_order), cfg.data.sort_dim,
                          cfg.seed};
  std::vector<StreamBatch> stream = make_stream(data.train, strategy, cfg.data.num_batches);

  Standardization st;
  if (cfg.data.standardize_inputs) st = Standardization::fit(stream.front().data.x);
  for (StreamBatch& b : stream) b.data.x = st.apply(b.data.x);
  const PointSet test_x = st.apply(data.test.x);
  const KernelSpec kernel = cfg.kernel_spec(data.train.dim());

  ExperimentResult out;
  out.standardization = st;
  Stopwatch clock(cfg.timing);
  auto on_batch = [&](const BatchReport& rep) {
    RunRecord r = base_record(cfg, hash);
    r.batch_index = rep.batch_index;
    r.n_seen = rep.n_seen;
    r.objective = rep.objective;
    r.theta = theta_of(*rep.state, *rep.likelihood);
    if (!data.test.empty()) {
      const Metrics m = compute_metrics(make_predictions(*rep.state, *rep.likelihood, test_x),
                                        data.test.y);
      r.nlpd = m.nlpd;
      r.rmse_or_error = m.rmse_or_error(rep.likelihood->family);
    }
    r.wall_ms = clock.elapsed_ms();
    out.records.push_back(r);
    if (sink) sink(r);
    if (on_checkpoint) {
      on_checkpoint(Checkpoint{*rep.state, *rep.likelihood, *rep.memory, cfg.seed, rep.n_seen,
                               st.mean, st.scale});
    }
  };
  StreamResult res = run_stream(stream, q, kernel, lik, on_batch);
  out.state = std::move(res.state);
  out.likelihood = res.likelihood;
  out.memory = std::move(res.memory);
  out.n_seen = res.n_seen;
  finish_predictions(out, data);
  return out;
}

ExperimentResult run_fit_experiment(const RunConfig& cfg, const PreparedData& data,
                                    const RecordSink& sink) {
  const SequentialConfig q = cfg.resolved_sequential();
  const Likelihood lik = cfg.likelihood();
  const std::string hash = config_hash(cfg);
  Standardization st;
  if (cfg.data.standardize_inputs) st = Standardization::fit(data.train.x);
  const Dataset train = standardized(data.train, st);
  const PointSet test_x = st.apply(data.test.x);
  const KernelSpec kernel = cfg.kernel_spec(train.dim());

  ExperimentResult out;
  out.standardization = st;
  Stopwatch clock(cfg.timing);
  auto on_round = [&](int round, const DualState& state, const Likelihood& l) {
    RunRecord r = base_record(cfg, hash);
    r.batch_index = round;
    r.n_seen = train.size();
    r.objective = elbo(state, l, train);
    r.theta = theta_of(state, l);
    if (!data.test.empty()) {
      const Metrics m = compute_metrics(make_predictions(state, l, test_x), data.test.y);
      r.nlpd = m.nlpd;
      r.rmse_or_error = m.rmse_or_error(l.family);
    }
    r.wall_ms = clock.elapsed_ms();
    out.records.push_back(r);
    if (sink) sink(r);
  };
  StreamResult res = fit_offline(train, q, kernel, lik, cfg.data.num_batches, on_round);
  out.state = std::move(res.state);
  out.likelihood = res.likelihood;
  out.memory = std::move(res.memory);
  out.n_seen = res.n_seen;
  finish_predictions(out, data);
  return out;
}

BoResult run_bo_experiment(const RunConfig& cfg, const RecordSink& sink) {
  const BoObjective obj = bo_objective(cfg.bo.objective);
  const Eigen::Index d = obj.bounds.dim();
  const Vector width = obj.bounds.upper - obj.bounds.lower;
  const std::string hash = config_hash(cfg);
  if (cfg.bo.initial_points < 1) throw ConfigError("bo.initial_points must be positive");
  if (cfg.bo.iterations < 0 || cfg.bo.batch_size < 1) {
    throw ConfigError("bo.iterations must be nonnegative and bo.batch_size positive");
  }

  BoResult out;
  Rng rng(cfg.seed);
  std::vector<Vector> unit_points;
  std::vector<double> values;
  auto evaluate = [&](const Vector& unit) {
    const Vector x = obj.bounds.lower + width.cwiseProduct(unit);
    unit_points.push_back(unit);
    values.push_back(obj.value(x));
    out.valid.push_back(obj.valid(x));
  };
  for (int i = 0; i < cfg.bo.initial_points; ++i) {
    Vector u(d);
    for (Eigen::Index c = 0; c < d; ++c) u[c] = rng.uniform();
    evaluate(u);
  }

  const Bounds unit_bounds{Vector::Zero(d), Vector::Ones(d)};
  const Likelihood reg_lik = cfg.likelihood().is_gaussian() ? cfg.likelihood()
                                                             : Likelihood::gaussian(cfg.model.noise_variance);
  RunConfig reg_cfg = cfg;
  reg_cfg.model.likelihood = LikelihoodFamily::Gaussian;
  RunConfig cls_cfg = cfg;
  cls_cfg.model.likelihood = LikelihoodFamily::BernoulliLogit;
  Stopwatch clock(cfg.timing);

  for (int iter = 0; iter <= cfg.bo.iterations; ++iter) {
    const auto n = static_cast<Eigen::Index>(values.size());
    Dataset data{PointSet(n, d), Vector(n)};
    for (Eigen::Index i = 0; i < n; ++i) {
      data.x.row(i) = unit_points[static_cast<std::size_t>(i)].transpose();
      data.y[i] = values[static_cast<std::size_t>(i)];
    }
    double best_raw = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < n; ++i) {
      if (out.valid[static_cast<std::size_t>(i)]) best_raw = std::max(best_raw, data.y[i]);
    }
    out.best_value = best_raw;

    const double mu = data.y.mean();
    double sd = std::sqrt((data.y.array() - mu).square().mean());
    if (!(sd > 1e-12)) sd = 1.0;
    Dataset reg_data{data.x, (data.y.array() - mu) / sd};

    SequentialConfig q = reg_cfg.resolved_sequential();
    const StreamResult reg =
        fit_offline(reg_data, q, reg_cfg.kernel_spec(d), reg_lik, std::max(cfg.data.num_batches, 1));

    RunRecord r = base_record(cfg, hash);
    r.batch_index = iter;
    r.n_seen = n;
    r.objective = elbo(reg.state, reg.likelihood, reg_data);
    if (std::isfinite(best_raw)) r.best_value = best_raw;
    r.theta = theta_of(reg.state, reg.likelihood);
    r.wall_ms = clock.elapsed_ms();
    out.records.push_back(r);
    if (sink) sink(r);
    if (iter == cfg.bo.iterations) break;

    double best_std = std::isfinite(best_raw) ? (best_raw - mu) / sd : reg_data.y.maxCoeff();
    std::vector<SurrogateModel> models{SurrogateModel{reg.state, reg.likelihood, q.rho, q.ngd_steps}};
    Acquisition acq = Acquisition::ei(0, best_std, unit_bounds);
    if (cfg.bo.constrained) {
      Dataset cls_data{data.x, Vector(n)};
      for (Eigen::Index i = 0; i < n; ++i) cls_data.y[i] = out.valid[static_cast<std::size_t>(i)] ? 1.0 : -1.0;
      const SequentialConfig qc = cls_cfg.resolved_sequential();
      const StreamResult cls = fit_offline(cls_data, qc, cls_cfg.kernel_spec(d),
                                           Likelihood::bernoulli(cfg.model.quadrature_order),
                                           std::max(cfg.data.num_batches, 1));
      models.push_back(SurrogateModel{cls.state, cls.likelihood, qc.rho, qc.ngd_steps});
      acq = Acquisition::product({acq, Acquisition::pov(1, unit_bounds)}, unit_bounds);
    }
    FantasyOptions fo;
    fo.search_budget = cfg.bo.search_budget;
    fo.refine_steps = cfg.bo.refine_steps;
    fo.refine_starts = cfg.bo.refine_starts;
    fo.fantasy_sample = cfg.bo.fantasy_sample;
    fo.seed = batch_seed(cfg.seed, iter);
    const FantasyBatch batch = fantasize_batch(models, acq, cfg.bo.batch_size, fo);
    for (Eigen::Index j = 0; j < batch.points.rows(); ++j) evaluate(batch.points.row(j).transpose());
  }

  const auto n = static_cast<Eigen::Index>(values.size());
  out.evaluated.resize(n, d);
  out.values.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out.evaluated.row(i) =
        (obj.bounds.lower + width.cwiseProduct(unit_points[static_cast<std::size_t>(i)])).transpose();
    out.values[i] = values[static_cast<std::size_t>(i)];
  }
  return out;
}

void write_predictions(const std::string& path, const Predictions& pred) {
  if (pred.family == LikelihoodFamily::Gaussian) {
    Matrix v(pred.mean.size(), 2);
    v << pred.mean, pred.var;
    write_csv(path, {"mean", "var"}, v);
  } else {
    write_csv(path, {"prob"}, Matrix(pred.prob));
  }
}

Predictions read_predictions(const std::string& path) {
  const Table t = read_csv(path);
  Predictions p;
  if (t.header == std::vector<std::string>{"mean", "var"}) {
    p.family = LikelihoodFamily::Gaussian;
    p.mean = t.values.col(0);
    p.var = t.values.col(1);
  } else if (t.header == std::vector<std::string>{"prob"}) {
    p.family = LikelihoodFamily::BernoulliLogit;
    p.prob = t.values.col(0);
  } else {
    throw Error("'" + path + "' is not a predictions file (expected mean,var or prob columns)");
  }
  return p;
}

void run_task(const RunConfig& cfg) {
  namespace fs = std::filesystem;
  if (cfg.task != "fit" && cfg.task != "stream" && cfg.task != "bo") {
    throw ConfigError("run.task must be fit, stream or bo");
  }
  fs::create_directories(cfg.out);
  const fs::path dir(cfg.out);
  write_text_atomic((dir / "config.resolved").string(), canonical_config(cfg));

  std::ofstream log((dir / "log.jsonl").string(), std::ios::trunc);
  if (!log) throw Error("cannot write run log in '" + cfg.out + "'");
  auto sink = [&log](const RunRecord& r) { log << to_json_line(r) << '\n' << std::flush; };

  json summary;
  summary["task"] = cfg.task;
  summary["seed"] = cfg.seed;
  summary["config_hash"] = config_hash(cfg);

  if (cfg.task == "bo") {
    const BoResult res = run_bo_experiment(cfg, sink);
    Matrix v(res.values.size(), res.evaluated.cols() + 2);
    std::vector<std::string> header;
    for (Eigen::Index c = 0; c < res.evaluated.cols(); ++c) header.push_back("x" + std::to_string(c));
    header.push_back("value");
    header.push_back("valid");
    for (Eigen::Index i = 0; i < v.rows(); ++i) {
      v.row(i).head(res.evaluated.cols()) = res.evaluated.row(i);
      v(i, res.evaluated.cols()) = res.values[i];
      v(i, res.evaluated.cols() + 1) = res.valid[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
    }
    write_csv((dir / "bo_evaluations.csv").string(), header, v);
    write_batch_csv((dir / "batch_metrics.csv").string(), res.records);
    summary["best_value"] = opt(res.best_value);
    summary["evaluations"] = res.values.size();
  } else {
    const PreparedData data = prepare_data(cfg);
    const std::string ckpt_path = (dir / "checkpoint.json").string();
    ExperimentResult res =
        cfg.task == "stream"
            ? run_stream_experiment(cfg, data, sink,
                                    [&](const Checkpoint& c) {
                                      write_text_atomic(ckpt_path, checkpoint_to_json(c) + "\n");
                                    })
            : run_fit_experiment(cfg, data, sink);
    write_text_atomic(ckpt_path, checkpoint_to_json(res.checkpoint(cfg.seed)) + "\n");
    write_batch_csv((dir / "batch_metrics.csv").string(), res.records);
    summary["n_seen"] = res.n_seen;
    if (res.final_metrics) {
      write_predictions((dir / "predictions.csv").string(), res.final_predictions);
      summary["final_metrics"] = metrics_json(*res.final_metrics, res.likelihood.family);
    }
  }
  write_text_atomic((dir / "summary.json").string(), summary.dump(1) + "\n");
}

}  // namespace dsvgp
