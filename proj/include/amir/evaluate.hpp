#pragma once
#include <string>
#include <vector>

#include "amir/checkpoint.hpp"
#include "amir/config.hpp"
#include "amir/corpus.hpp"

namespace amir {

enum class EvalSplit { all, train, val };

struct KindMetrics {
  std::string kind;
  int count = 0;
  double psnr = 0.0;
  double ssim = 0.0;
};

struct EvalReport {
  std::vector<KindMetrics> per_kind;  // one row per distinct degradation kind
  KindMetrics average;                // "average" row over all evaluated images
};

// Whole-image restoration metrics (pad-and-crop, outputs clipped to [0,1]).
EvalReport evaluate(const Checkpoint& ckpt, const TrainConfig& cfg,
                    const CorpusManifest& manifest, const std::string& corpus_root,
                    EvalSplit split = EvalSplit::all);

// Degraded-vs-clean metrics without any model: the identity baseline.
EvalReport evaluate_baseline(const CorpusManifest& manifest,
                             const std::string& corpus_root,
                             EvalSplit split = EvalSplit::all);

// Tab-separated: kind, count, psnr, ssim; last row is the average.
std::string format_report(const EvalReport& report);

}  // namespace amir
