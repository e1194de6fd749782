#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "amir/restorer.hpp"

namespace amir {

// All knobs of a training run. Serialized as JSON; the hash of the
// canonical dump guards checkpoints against silent config drift.
struct TrainConfig {
  std::string corpus_dir;
  std::string out_dir = "run";

  int patch = 64;
  int batch = 16;
  int stage1_epochs = 40;
  int cluster_interval = 10;  // levels built at epochs 0, 10, 20, 30
  int stage2_epochs = 40;

  double lr = 5e-4;
  double lr_min = 1e-6;
  double weight_decay = 0.0;
  double alpha = 0.2;  // SSIM weight in the restoration loss

  std::uint64_t seed = 0;
  int tree_levels = 4;
  int tree_branching = 2;
  int kmeans_restarts = 10;
  // nodes with fewer than branching * ceil(fraction * n_samples) members
  // become early leaves instead of being split further
  double kmeans_min_fraction = 0.05;

  std::string variant = "full";
  bool stage2_finetune = false;  // default: retrain RN from scratch

  std::vector<int> drn_widths = {16, 32, 64, 128};
  std::vector<int> rn_widths = {16, 32, 64};

  AblationVariant ablation() const { return variant_from_string(variant); }
  void validate() const;
};

TrainConfig load_train_config(const std::string& path);
void save_train_config(const TrainConfig& cfg, const std::string& path);

// FNV-1a over the canonical JSON dump.
std::uint64_t config_hash(const TrainConfig& cfg);

}  // namespace amir
