#include "dsvgp/harness/config.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

namespace dsvgp {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string where(const std::string& section, const std::string& key) {
  return section + "." + key;
}

double to_double(const std::string& section, const std::string& key, const std::string& v) {
  char* end = nullptr;
  errno = 0;
  const double out = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE || !std::isfinite(out)) {
    throw ConfigError(where(section, key) + ": expected a number, got '" + v + "'");
  }
  return out;
}

long long to_int(const std::string& section, const std::string& key, const std::string& v) {
  char* end = nullptr;
  errno = 0;
  const long long out = std::strtoll(v.c_str(), &end, 10);
  if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE) {
    throw ConfigError(where(section, key) + ": expected an integer, got '" + v + "'");
  }
  return out;
}

std::uint64_t to_u64(const std::string& section, const std::string& key, const std::string& v) {
  char* end = nullptr;
  errno = 0;
  if (!v.empty() && v[0] == '-') {
    throw ConfigError(where(section, key) + ": expected a nonnegative integer");
  }
  const unsigned long long out = std::strtoull(v.c_str(), &end, 10);
  if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE) {
    throw ConfigError(where(section, key) + ": expected a nonnegative integer, got '" + v + "'");
  }
  return out;
}

bool to_bool(const std::string& section, const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(where(section, key) + ": expected true or false, got '" + v + "'");
}

Vector to_vector(const std::string& section, const std::string& key, const std::string& v) {
  std::vector<double> vals;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) vals.push_back(to_double(section, key, trim(item)));
  if (vals.empty()) throw ConfigError(where(section, key) + ": empty list");
  return Eigen::Map<Vector>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt(bool v) { return v ? "true" : "false"; }

}  // namespace

KernelSpec RunConfig::kernel_spec(Eigen::Index dim) const {
  KernelSpec spec;
  spec.family = model.kernel;
  spec.hyper.variance = model.variance;
  if (model.lengthscales.size() == 1) {
    spec.hyper.lengthscales = Vector::Constant(dim, model.lengthscales[0]);
  } else if (model.lengthscales.size() == dim) {
    spec.hyper.lengthscales = model.lengthscales;
  } else {
    throw ConfigError("model.lengthscale: " + std::to_string(model.lengthscales.size()) +
                      " values for " + std::to_string(dim) + " input dimensions");
  }
  spec.hyper.constant_variance = model.constant_variance;
  spec.hyper.noise_variance = model.noise_variance;
  spec.hyper.validate();
  return spec;
}

Likelihood RunConfig::likelihood() const {
  Likelihood lik;
  lik.family = model.likelihood;
  lik.noise_variance = model.noise_variance;
  lik.quadrature_order = model.quadrature_order;
  lik.validate();
  return lik;
}

SequentialConfig RunConfig::resolved_sequential() const {
  SequentialConfig out = sequential;
  const bool gaussian = model.likelihood == LikelihoodFamily::Gaussian;
  if (!rho_set) out.rho = gaussian ? 0.8 : 0.5;
  if (!ngd_steps_set) out.ngd_steps = gaussian ? 2 : 4;
  out.num_inducing = model.num_inducing;
  out.seed = seed;
  return out;
}

void set_config_value(RunConfig& cfg, const std::string& section, const std::string& key,
                      const std::string& value) {
  const std::string& s = section;
  const std::string& k = key;
  const std::string& v = value;
  try {
    if (s == "run") {
      if (k == "task") return void(cfg.task = v);
      if (k == "seed") {
        cfg.seed_set = true;
        return void(cfg.seed = to_u64(s, k, v));
      }
      if (k == "out") return void(cfg.out = v);
      if (k == "timing") return void(cfg.timing = to_bool(s, k, v));
    } else if (s == "data") {
      DataConfig& d = cfg.data;
      if (k == "train") return void(d.train = v);
      if (k == "test") return void(d.test = v);
      if (k == "label_column") return void(d.label_column = v);
      if (k == "holdout_fraction") return void(d.holdout_fraction = to_double(s, k, v));
      if (k == "stream_order") {
        if (v != "sorted" && v != "as_is" && v != "shuffled") {
          throw ConfigError(where(s, k) + ": expected sorted, as_is or shuffled");
        }
        return void(d.stream_order = v);
      }
      if (k == "sort_dim") return void(d.sort_dim = to_int(s, k, v));
      if (k == "num_batches") return void(d.num_batches = static_cast<int>(to_int(s, k, v)));
      if (k == "standardize_inputs") return void(d.standardize_inputs = to_bool(s, k, v));
    } else if (s == "model") {
      ModelConfig& m = cfg.model;
      if (k == "kernel") return void(m.kernel = kernel_family_from_string(v));
      if (k == "variance") return void(m.variance = to_double(s, k, v));
      if (k == "lengthscale" || k == "lengthscales") return void(m.lengthscales = to_vector(s, k, v));
      if (k == "constant_variance") return void(m.constant_variance = to_double(s, k, v));
      if (k == "likelihood") return void(m.likelihood = likelihood_family_from_string(v));
      if (k == "noise_variance") return void(m.noise_variance = to_double(s, k, v));
      if (k == "quadrature_order") return void(m.quadrature_order = static_cast<int>(to_int(s, k, v)));
      if (k == "num_inducing") return void(m.num_inducing = to_int(s, k, v));
    } else if (s == "sequential") {
      SequentialConfig& q = cfg.sequential;
      if (k == "rho") {
        cfg.rho_set = true;
        return void(q.rho = to_double(s, k, v));
      }
      if (k == "ngd_steps") {
        cfg.ngd_steps_set = true;
        return void(q.ngd_steps = static_cast<int>(to_int(s, k, v)));
      }
      if (k == "memory_size") return void(q.memory_size = to_int(s, k, v));
      if (k == "memory_policy") return void(q.memory_policy = memory_policy_from_string(v));
      if (k == "hyper_lr") return void(q.hyper_lr = to_double(s, k, v));
      if (k == "hyper_steps") return void(q.hyper_steps = static_cast<int>(to_int(s, k, v)));
      if (k == "replay_in_update") return void(q.replay_in_update = to_bool(s, k, v));
      if (k == "remove_memory_from_prior") return void(q.remove_memory_from_prior = to_bool(s, k, v));
      if (k == "pool_includes_memory") return void(q.pool_includes_memory = to_bool(s, k, v));
      if (k == "learn_noise") return void(q.learn_noise = to_bool(s, k, v));
      if (k == "n_old") return void(q.n_old_counter = to_int(s, k, v));
    } else if (s == "bo") {
      BoConfig& b = cfg.bo;
      if (k == "objective") return void(b.objective = v);
      if (k == "iterations") return void(b.iterations = static_cast<int>(to_int(s, k, v)));
      if (k == "batch_size") return void(b.batch_size = static_cast<int>(to_int(s, k, v)));
      if (k == "initial_points") return void(b.initial_points = static_cast<int>(to_int(s, k, v)));
      if (k == "search_budget") return void(b.search_budget = static_cast<int>(to_int(s, k, v)));
      if (k == "refine_steps") return void(b.refine_steps = static_cast<int>(to_int(s, k, v)));
      if (k == "refine_starts") return void(b.refine_starts = static_cast<int>(to_int(s, k, v)));
      if (k == "fantasy_sample") return void(b.fantasy_sample = to_bool(s, k, v));
      if (k == "constrained") return void(b.constrained = to_bool(s, k, v));
    } else {
      throw ConfigError("unknown section [" + s + "]");
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(where(s, k) + ": " + e.what());
  }
  throw ConfigError("unknown key '" + where(s, k) + "'");
}

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  std::stringstream in(text);
  std::string line;
  std::string section = "run";
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']') throw ConfigError("line " + std::to_string(line_no) + ": bad section header");
      section = trim(t.substr(1, t.size() - 2));
      if (section != "run" && section != "data" && section != "model" && section != "sequential" &&
          section != "bo") {
        throw ConfigError("line " + std::to_string(line_no) + ": unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    }
    set_config_value(cfg, section, trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void apply_override(RunConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  const auto dot = assignment.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
    throw ConfigError("override '" + assignment + "' is not section.key=value");
  }
  set_config_value(cfg, trim(assignment.substr(0, dot)), trim(assignment.substr(dot + 1, eq - dot - 1)),
                   trim(assignment.substr(eq + 1)));
}

std::string canonical_config(const RunConfig& cfg) {
  const SequentialConfig q = cfg.resolved_sequential();
  std::ostringstream o;
  o << "run.task=" << cfg.task << '\n'
    << "run.seed=" << cfg.seed << '\n'
    << "data.train=" << cfg.data.train << '\n'
    << "data.test=" << cfg.data.test << '\n'
    << "data.label_column=" << cfg.data.label_column << '\n'
    << "data.holdout_fraction=" << fmt(cfg.data.holdout_fraction) << '\n'
    << "data.stream_order=" << cfg.data.stream_order << '\n'
    << "data.sort_dim=" << cfg.data.sort_dim << '\n'
    << "data.num_batches=" << cfg.data.num_batches << '\n'
    << "data.standardize_inputs=" << fmt(cfg.data.standardize_inputs) << '\n'
    << "model.kernel=" << to_string(cfg.model.kernel) << '\n'
    << "model.variance=" << fmt(cfg.model.variance) << '\n'
    << "model.lengthscale=";
  for (Eigen::Index i = 0; i < cfg.model.lengthscales.size(); ++i) {
    o << (i ? "," : "") << fmt(cfg.model.lengthscales[i]);
  }
  o << '\n'
    << "model.constant_variance=" << fmt(cfg.model.constant_variance) << '\n'
    << "model.likelihood=" << to_string(cfg.model.likelihood) << '\n'
    << "model.noise_variance=" << fmt(cfg.model.noise_variance) << '\n'
    << "model.quadrature_order=" << cfg.model.quadrature_order << '\n'
    << "model.num_inducing=" << cfg.model.num_inducing << '\n'
    << "sequential.rho=" << fmt(q.rho) << '\n'
    << "sequential.ngd_steps=" << q.ngd_steps << '\n'
    << "sequential.memory_size=" << q.memory_size << '\n'
    << "sequential.memory_policy=" << to_string(q.memory_policy) << '\n'
    << "sequential.hyper_lr=" << fmt(q.hyper_lr) << '\n'
    << "sequential.hyper_steps=" << q.hyper_steps << '\n'
    << "sequential.replay_in_update=" << fmt(q.replay_in_update) << '\n'
    << "sequential.remove_memory_from_prior=" << fmt(q.remove_memory_from_prior) << '\n'
    << "sequential.pool_includes_memory=" << fmt(q.pool_includes_memory) << '\n'
    << "sequential.learn_noise=" << fmt(q.learn_noise) << '\n'
    << "sequential.n_old=" << q.n_old_counter << '\n'
    << "bo.objective=" << cfg.bo.objective << '\n'
    << "bo.iterations=" << cfg.bo.iterations << '\n'
    << "bo.batch_size=" << cfg.bo.batch_size << '\n'
    << "bo.initial_points=" << cfg.bo.initial_points << '\n'
    << "bo.search_budget=" << cfg.bo.search_budget << '\n'
    << "bo.refine_steps=" << cfg.bo.refine_steps << '\n'
    << "bo.refine_starts=" << cfg.bo.refine_starts << '\n'
    << "bo.fantasy_sample=" << fmt(cfg.bo.fantasy_sample) << '\n'
    << "bo.constrained=" << fmt(cfg.bo.constrained) << '\n';
  return o.str();
}

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_hash(const RunConfig& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(canonical_config(cfg))));
  return buf;
}

}  // namespace dsvgp
