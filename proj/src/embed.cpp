#include "amir/embed.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>

#include "amir/model.hpp"
#include "amir/rng.hpp"

namespace amir {

std::vector<EmbeddingRow> compute_embeddings(const Checkpoint& ckpt,
                                             const TrainConfig& cfg,
                                             const CorpusManifest& manifest,
                                             const std::string& corpus_root) {
  cfg.validate();
  if (manifest.entries.empty())
    throw std::invalid_argument("compute_embeddings: empty manifest");
  const DegTree tree{cfg.tree_levels, cfg.tree_branching};
  const int built_eff = std::min(
      ckpt.built_levels, variant_max_levels(cfg.ablation(), tree.levels));

  nn::ParamStore<float> ps(split_seed(cfg.seed, 0x51));
  Drn<float> drn(ps, drn_config(cfg));
  apply_params(ckpt, "drn.", ps);
  ps.set_requires_grad(false);

  std::vector<EmbeddingRow> rows;
  for (size_t i = 0; i < manifest.entries.size(); ++i) {
    const auto& e = manifest.entries[i];
    Image degraded = load_image(corpus_root + "/" + e.degraded_path);
    auto x = nn::Var<float>::constant(image_to_tensor(degraded));
    auto z = drn.encode(x);
    auto r_m = drn.mask_probs(drn.mask_logits(z), tree, built_eff);
    auto r = ckpt.stage == 1
                 ? compose_representation(r_m, drn.attr_project(z), 1)
                 : compose_representation(r_m, r_m, 2);
    EmbeddingRow row;
    row.id = static_cast<int>(i);
    row.kind = to_string(e.spec.kind);
    row.validation = is_validation_entry(manifest, i) ? 1 : 0;
    row.z.assign(z.value().v.begin(), z.value().v.end());
    row.r.assign(r.value().v.begin(), r.value().v.end());
    rows.push_back(std::move(row));
  }

  // PCA on the centered z matrix
  const int n = static_cast<int>(rows.size());
  const int d = static_cast<int>(rows[0].z.size());
  Eigen::MatrixXd Z(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) Z(i, j) = rows[static_cast<size_t>(i)].z[static_cast<size_t>(j)];
  Eigen::RowVectorXd mean = Z.colwise().mean();
  Z.rowwise() -= mean;
  Eigen::MatrixXd cov = (Z.transpose() * Z) / std::max(1, n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  // eigenvalues ascend; take the last two columns
  Eigen::VectorXd v1 = es.eigenvectors().col(d - 1);
  Eigen::VectorXd v2 = Eigen::VectorXd::Zero(d);
  if (d >= 2) v2 = es.eigenvectors().col(d - 2);
  for (int i = 0; i < n; ++i) {
    rows[static_cast<size_t>(i)].pc1 = Z.row(i).dot(v1);
    rows[static_cast<size_t>(i)].pc2 = Z.row(i).dot(v2);
  }
  return rows;
}

void dump_embeddings(const Checkpoint& ckpt, const TrainConfig& cfg,
                     const CorpusManifest& manifest,
                     const std::string& corpus_root,
                     const std::string& out_path) {
  auto rows = compute_embeddings(ckpt, cfg, manifest, corpus_root);
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot write embeddings: " + out_path);
  out << "# id\tkind\tvalidation\tz[" << rows[0].z.size() << "]\tr["
      << rows[0].r.size() << "]\tpc1\tpc2\n";
  for (const auto& row : rows) {
    out << row.id << '\t' << row.kind << '\t' << row.validation;
    for (float v : row.z) out << '\t' << v;
    for (float v : row.r) out << '\t' << v;
    out << '\t' << row.pc1 << '\t' << row.pc2 << '\n';
  }
  if (!out) throw std::runtime_error("write failure: " + out_path);
}

double mean_silhouette(const std::vector<std::vector<double>>& points,
                       const std::vector<int>& labels) {
  const size_t n = points.size();
  if (n != labels.size() || n < 2)
    throw std::invalid_argument("mean_silhouette: bad inputs");
  auto dist = [&](size_t a, size_t b) {
    double s = 0;
    for (size_t k = 0; k < points[a].size(); ++k) {
      double d = points[a][k] - points[b][k];
      s += d * d;
    }
    return std::sqrt(s);
  };
  double total = 0.0;
  int counted = 0;
  for (size_t i = 0; i < n; ++i) {
    std::map<int, std::pair<double, int>> per_label;  // sum, count
    for (size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      auto& [sum, cnt] = per_label[labels[j]];
      sum += dist(i, j);
      ++cnt;
    }
    auto own = per_label.find(labels[i]);
    if (own == per_label.end() || own->second.second == 0) continue;  // singleton
    double a = own->second.first / own->second.second;
    double b = std::numeric_limits<double>::infinity();
    for (const auto& [lab, sc] : per_label)
      if (lab != labels[i]) b = std::min(b, sc.first / sc.second);
    if (!std::isfinite(b)) continue;  // single cluster overall
    total += (b - a) / std::max(a, b);
    ++counted;
  }
  if (counted == 0) throw std::invalid_argument("mean_silhouette: need >= 2 clusters");
  return total / counted;
}

}  // namespace amir
