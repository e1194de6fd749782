#include "amir/config.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

using json = nlohmann::json;

namespace amir {

std::string to_string(AblationVariant v) {
  switch (v) {
    case AblationVariant::full: return "full";
    case AblationVariant::no_ftb: return "no_ftb";
    case AblationVariant::no_dsln: return "no_dsln";
    case AblationVariant::no_gm: return "no_gm";
    case AblationVariant::layers_1: return "layers_1";
    case AblationVariant::layers_2: return "layers_2";
    case AblationVariant::layers_3: return "layers_3";
    case AblationVariant::layers_4: return "layers_4";
  }
  throw std::invalid_argument("unknown ablation variant");
}

AblationVariant variant_from_string(const std::string& s) {
  if (s == "full") return AblationVariant::full;
  if (s == "no_ftb") return AblationVariant::no_ftb;
  if (s == "no_dsln") return AblationVariant::no_dsln;
  if (s == "no_gm") return AblationVariant::no_gm;
  if (s == "layers_1") return AblationVariant::layers_1;
  if (s == "layers_2") return AblationVariant::layers_2;
  if (s == "layers_3") return AblationVariant::layers_3;
  if (s == "layers_4") return AblationVariant::layers_4;
  throw std::invalid_argument("unknown ablation variant: " + s);
}

void TrainConfig::validate() const {
  auto positive = [](long long v, const char* what) {
    if (v <= 0) throw std::invalid_argument(std::string("config: ") + what +
                                            " must be positive");
  };
  positive(patch, "patch");
  positive(batch, "batch");
  positive(stage1_epochs, "stage1_epochs");
  positive(cluster_interval, "cluster_interval");
  positive(stage2_epochs, "stage2_epochs");
  positive(tree_levels, "tree_levels");
  positive(tree_branching, "tree_branching");
  positive(kmeans_restarts, "kmeans_restarts");
  if (lr <= 0 || lr_min <= 0 || lr_min > lr)
    throw std::invalid_argument("config: need 0 < lr_min <= lr");
  if (weight_decay < 0) throw std::invalid_argument("config: weight_decay < 0");
  if (alpha < 0) throw std::invalid_argument("config: alpha < 0");
  if (patch % 4 != 0) throw std::invalid_argument("config: patch must be a multiple of 4");
  if (static_cast<long long>(cluster_interval) * tree_levels > stage1_epochs)
    throw std::invalid_argument(
        "config: cluster_interval * tree_levels must not exceed stage1_epochs");
  if (kmeans_min_fraction <= 0 || kmeans_min_fraction >= 0.5)
    throw std::invalid_argument("config: need 0 < kmeans_min_fraction < 0.5");
  if (drn_widths.empty() || rn_widths.empty())
    throw std::invalid_argument("config: empty width list");
  variant_from_string(variant);  // throws on unknown names
}

namespace {

json to_json(const TrainConfig& c) {
  return json{{"corpus_dir", c.corpus_dir},
              {"out_dir", c.out_dir},
              {"patch", c.patch},
              {"batch", c.batch},
              {"stage1_epochs", c.stage1_epochs},
              {"cluster_interval", c.cluster_interval},
              {"stage2_epochs", c.stage2_epochs},
              {"lr", c.lr},
              {"lr_min", c.lr_min},
              {"weight_decay", c.weight_decay},
              {"alpha", c.alpha},
              {"seed", c.seed},
              {"tree_levels", c.tree_levels},
              {"tree_branching", c.tree_branching},
              {"kmeans_restarts", c.kmeans_restarts},
              {"kmeans_min_fraction", c.kmeans_min_fraction},
              {"variant", c.variant},
              {"stage2_finetune", c.stage2_finetune},
              {"drn_widths", c.drn_widths},
              {"rn_widths", c.rn_widths}};
}

}  // namespace

TrainConfig load_train_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& ex) {
    throw std::runtime_error("malformed config " + path + ": " + ex.what());
  }
  TrainConfig c;
  json defaults = to_json(c);
  for (const auto& [key, val] : j.items())
    if (!defaults.contains(key))
      throw std::runtime_error("unknown config key: " + key);
  c.corpus_dir = j.value("corpus_dir", c.corpus_dir);
  c.out_dir = j.value("out_dir", c.out_dir);
  c.patch = j.value("patch", c.patch);
  c.batch = j.value("batch", c.batch);
  c.stage1_epochs = j.value("stage1_epochs", c.stage1_epochs);
  c.cluster_interval = j.value("cluster_interval", c.cluster_interval);
  c.stage2_epochs = j.value("stage2_epochs", c.stage2_epochs);
  c.lr = j.value("lr", c.lr);
  c.lr_min = j.value("lr_min", c.lr_min);
  c.weight_decay = j.value("weight_decay", c.weight_decay);
  c.alpha = j.value("alpha", c.alpha);
  c.seed = j.value("seed", c.seed);
  c.tree_levels = j.value("tree_levels", c.tree_levels);
  c.tree_branching = j.value("tree_branching", c.tree_branching);
  c.kmeans_restarts = j.value("kmeans_restarts", c.kmeans_restarts);
  c.kmeans_min_fraction = j.value("kmeans_min_fraction", c.kmeans_min_fraction);
  c.variant = j.value("variant", c.variant);
  c.stage2_finetune = j.value("stage2_finetune", c.stage2_finetune);
  c.drn_widths = j.value("drn_widths", c.drn_widths);
  c.rn_widths = j.value("rn_widths", c.rn_widths);
  c.validate();
  return c;
}

void save_train_config(const TrainConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write config: " + path);
  out << to_json(cfg).dump(2) << "\n";
}

std::uint64_t config_hash(const TrainConfig& cfg) {
  const std::string dump = to_json(cfg).dump();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : dump) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace amir
