#pragma once

#include "dsvgp/dual_core.hpp"
#include "dsvgp/memory.hpp"

#include <cstdint>
#include <string>

namespace dsvgp {

/// Everything needed to resume or query a run. input_mean/input_scale are
/// empty when inputs were not standardized.
struct Checkpoint {
  DualState state;
  Likelihood likelihood;
  MemorySet memory;
  std::uint64_t seed = 0;
  Eigen::Index n_seen = 0;
  Vector input_mean;
  Vector input_scale;
};

std::string checkpoint_to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(const std::string& text);

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace dsvgp
