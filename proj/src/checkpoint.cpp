#include "dsvgp/checkpoint.hpp"

#include "dsvgp/errors.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace dsvgp {

namespace {

using nlohmann::json;

json vec_to_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

json mat_to_json(const Matrix& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) out.push_back(vec_to_json(m.row(i).transpose()));
  return out;
}

Vector vec_from_json(const json& j) {
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

Matrix mat_from_json(const json& j, Eigen::Index cols) {
  Matrix m(static_cast<Eigen::Index>(j.size()), cols);
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (static_cast<Eigen::Index>(j[i].size()) != cols) throw Error("checkpoint: ragged matrix");
    for (std::size_t c = 0; c < j[i].size(); ++c) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = j[i][c].get<double>();
    }
  }
  return m;
}

}  // namespace

std::string checkpoint_to_json(const Checkpoint& ckpt) {
  const DualState& s = ckpt.state;
  const Hyperparams& h = s.kernel.hyper;
  json j;
  j["format"] = "dsvgp-checkpoint";
  j["version"] = 1;
  j["kernel"] = {{"family", std::string(to_string(s.kernel.family))},
                 {"variance", h.variance},
                 {"lengthscales", vec_to_json(h.lengthscales)},
                 {"constant_variance", h.constant_variance},
                 {"noise_variance", h.noise_variance}};
  j["likelihood"] = {{"family", std::string(to_string(ckpt.likelihood.family))},
                     {"noise_variance", ckpt.likelihood.noise_variance},
                     {"quadrature_order", ckpt.likelihood.quadrature_order}};
  j["dim"] = s.z.cols();
  j["z"] = mat_to_json(s.z);
  j["alpha"] = vec_to_json(s.alpha);
  j["b"] = mat_to_json(s.b);
  j["seed"] = ckpt.seed;
  j["n_seen"] = ckpt.n_seen;
  j["memory"] = {{"capacity", ckpt.memory.capacity},
                 {"inputs", mat_to_json(ckpt.memory.inputs)},
                 {"labels", vec_to_json(ckpt.memory.labels)},
                 {"scores", vec_to_json(ckpt.memory.scores)}};
  j["standardization"] = {{"mean", vec_to_json(ckpt.input_mean)},
                          {"scale", vec_to_json(ckpt.input_scale)}};
  return j.dump(1);
}

Checkpoint checkpoint_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(std::string("checkpoint: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != "dsvgp-checkpoint") {
      throw Error("checkpoint: unrecognized format");
    }
    const Eigen::Index dim = j.at("dim").get<Eigen::Index>();
    KernelSpec kernel;
    const json& jk = j.at("kernel");
    kernel.family = kernel_family_from_string(jk.at("family").get<std::string>());
    kernel.hyper.variance = jk.at("variance").get<double>();
    kernel.hyper.lengthscales = vec_from_json(jk.at("lengthscales"));
    kernel.hyper.constant_variance = jk.at("constant_variance").get<double>();
    kernel.hyper.noise_variance = jk.at("noise_variance").get<double>();

    Checkpoint out;
    const json& jl = j.at("likelihood");
    out.likelihood.family = likelihood_family_from_string(jl.at("family").get<std::string>());
    out.likelihood.noise_variance = jl.at("noise_variance").get<double>();
    out.likelihood.quadrature_order = jl.at("quadrature_order").get<int>();
    out.likelihood.validate();

    const Matrix z = mat_from_json(j.at("z"), dim);
    const Vector alpha = vec_from_json(j.at("alpha"));
    const Matrix b = mat_from_json(j.at("b"), z.rows());
    out.state = DualState::make(kernel, z, alpha, b);
    out.seed = j.at("seed").get<std::uint64_t>();
    out.n_seen = j.at("n_seen").get<Eigen::Index>();

    const json& jm = j.at("memory");
    out.memory.capacity = jm.at("capacity").get<Eigen::Index>();
    out.memory.inputs = mat_from_json(jm.at("inputs"), dim);
    out.memory.labels = vec_from_json(jm.at("labels"));
    out.memory.scores = vec_from_json(jm.at("scores"));
    out.input_mean = vec_from_json(j.at("standardization").at("mean"));
    out.input_scale = vec_from_json(j.at("standardization").at("scale"));
    return out;
  } catch (const json::exception& e) {
    throw Error(std::string("checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write checkpoint '" + path + "'");
  out << checkpoint_to_json(ckpt) << '\n';
  if (!out) throw Error("failed writing checkpoint '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read checkpoint '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return checkpoint_from_json(ss.str());
}

}  // namespace dsvgp
