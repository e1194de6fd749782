#pragma once
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "amir/hierarchy.hpp"
#include "amir/nn/optim.hpp"
#include "amir/nn/params.hpp"

namespace amir {

struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Versioned training snapshot. Parameters are stored in float (the training
// dtype); reload reproduces forward outputs bitwise on the same platform.
struct Checkpoint {
  static constexpr std::uint32_t kFormatVersion = 1;

  std::uint64_t config_hash = 0;
  int stage = 1;
  int epoch = 0;
  int built_levels = 0;
  std::string variant = "full";

  std::vector<TreeAssignment> assignments;

  struct Tensor {
    std::vector<int> shape;
    std::vector<float> data;
  };
  std::map<std::string, Tensor> params;  // "drn.*" and "rn.*"

  // AdamW state, keyed like params
  std::int64_t opt_steps = 0;
  std::map<std::string, std::pair<std::vector<float>, std::vector<float>>> opt_mv;
};

// Atomic write: temp file in the same directory, then rename.
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// Copies every parameter with the given prefix out of / into a store.
// Applying requires names and shapes to match exactly (within the prefix).
void capture_params(const nn::ParamStore<float>& store, const std::string& prefix,
                    Checkpoint& ckpt);
void apply_params(const Checkpoint& ckpt, const std::string& prefix,
                  nn::ParamStore<float>& store);

// Optimizer state round-trip; slot order follows the store's name order.
void capture_optimizer(nn::AdamW<float>& opt, const nn::ParamStore<float>& store,
                       Checkpoint& ckpt);
void apply_optimizer(const Checkpoint& ckpt, const nn::ParamStore<float>& store,
                     nn::AdamW<float>& opt);

}  // namespace amir
