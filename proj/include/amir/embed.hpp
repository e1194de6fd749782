#pragma once
#include <string>
#include <vector>

#include "amir/checkpoint.hpp"
#include "amir/config.hpp"
#include "amir/corpus.hpp"

namespace amir {

struct EmbeddingRow {
  int id = 0;
  std::string kind;
  int validation = 0;              // 0/1 split flag
  std::vector<float> z;            // encoder embedding
  std::vector<float> r;            // degradation representation
  double pc1 = 0.0, pc2 = 0.0;     // top-2 principal components of centered z
};

// Computes one row per corpus entry; projection is fit on the centered z
// matrix of these rows.
std::vector<EmbeddingRow> compute_embeddings(const Checkpoint& ckpt,
                                             const TrainConfig& cfg,
                                             const CorpusManifest& manifest,
                                             const std::string& corpus_root);

// Tab-separated dump: id, kind, validation, z..., r..., pc1, pc2 — one
// header comment line then one row per sample.
void dump_embeddings(const Checkpoint& ckpt, const TrainConfig& cfg,
                     const CorpusManifest& manifest,
                     const std::string& corpus_root, const std::string& out_path);

// Mean silhouette coefficient of the labeled points (Euclidean).
double mean_silhouette(const std::vector<std::vector<double>>& points,
                       const std::vector<int>& labels);

}  // namespace amir
