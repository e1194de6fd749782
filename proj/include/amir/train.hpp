#pragma once
#include <string>
#include <vector>

#include "amir/checkpoint.hpp"
#include "amir/config.hpp"
#include "amir/corpus.hpp"

namespace amir {

struct EpochLoss {
  int epoch = 0;
  double total = 0.0;
  double cls = 0.0;
  double res = 0.0;
};

struct TrainOutput {
  Checkpoint checkpoint;
  std::vector<EpochLoss> losses;
};

// Stage 1 (Fig.-2 left): joint optimization of the degradation encoder and
// the restorer; the degradation tree grows one level at every clustering
// epoch (epoch % cluster_interval == 0) until fully built.
TrainOutput train_stage1(const TrainConfig& cfg, const CorpusManifest& manifest,
                         const std::string& corpus_root);

// Stage 2: encoder frozen bitwise; restorer retrained from scratch on the
// restoration loss alone (or fine-tuned when cfg.stage2_finetune).
TrainOutput train_stage2(const TrainConfig& cfg, const Checkpoint& stage1,
                         const CorpusManifest& manifest,
                         const std::string& corpus_root);

// Writes "epoch<TAB>total<TAB>cls<TAB>res" lines.
void write_loss_log(const std::vector<EpochLoss>& losses, const std::string& path);

}  // namespace amir
