#include "amir/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "amir/model.hpp"
#include "amir/rng.hpp"

namespace amir {

namespace {

struct LoadedCorpus {
  std::vector<ImagePair> pairs;    // degraded + clean, manifest order
  std::vector<size_t> train_idx;   // non-validation entries
};

LoadedCorpus load_corpus(const CorpusManifest& manifest,
                         const std::string& root) {
  if (manifest.entries.empty())
    throw std::invalid_argument("train: empty corpus manifest");
  LoadedCorpus lc;
  for (size_t i = 0; i < manifest.entries.size(); ++i) {
    const auto& e = manifest.entries[i];
    ImagePair p;
    p.degraded = load_image(root + "/" + e.degraded_path);
    p.clean = load_image(root + "/" + e.clean_path);
    if (!p.degraded.same_shape(p.clean))
      throw std::runtime_error("train: clean/degraded shape mismatch at entry " +
                               std::to_string(i));
    lc.pairs.push_back(std::move(p));
    if (!is_validation_entry(manifest, i)) lc.train_idx.push_back(i);
  }
  if (lc.train_idx.empty())
    throw std::runtime_error("train: validation split consumed every sample");
  return lc;
}

std::vector<std::vector<double>> encode_all(Drn<float>& drn,
                                            const std::vector<ImagePair>& pairs) {
  std::vector<std::vector<double>> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    auto z = drn.encode(nn::Var<float>::constant(image_to_tensor(p.degraded)));
    out.emplace_back(z.value().v.begin(), z.value().v.end());
  }
  return out;
}

// targets laid out as [sample][level]; unbuilt levels padded with 0
std::vector<int> batch_targets(const std::vector<TreeAssignment>& assignments,
                               const std::vector<size_t>& batch,
                               const DegTree& tree, int built_eff) {
  std::vector<int> t(batch.size() * static_cast<size_t>(tree.levels), 0);
  for (size_t n = 0; n < batch.size(); ++n) {
    auto idx = path_level_indices(assignments[batch[n]], tree);
    for (int l = 0; l < built_eff; ++l)
      t[n * static_cast<size_t>(tree.levels) + static_cast<size_t>(l)] =
          idx[static_cast<size_t>(l)];
  }
  return t;
}

}  // namespace

TrainOutput train_stage1(const TrainConfig& cfg, const CorpusManifest& manifest,
                         const std::string& corpus_root) {
  cfg.validate();
  const DegTree tree{cfg.tree_levels, cfg.tree_branching};
  const AblationVariant variant = cfg.ablation();
  const int level_cap = variant_max_levels(variant, tree.levels);

  LoadedCorpus corpus = load_corpus(manifest, corpus_root);
  const size_t n_entries = corpus.pairs.size();

  nn::ParamStore<float> ps(split_seed(cfg.seed, 0x51));
  Drn<float> drn(ps, drn_config(cfg));
  Restorer<float> rn(ps, rn_config(cfg));
  nn::AdamW<float> opt(ps, cfg.weight_decay);

  KMeansConfig km;
  km.k = tree.branching;
  km.restarts = cfg.kmeans_restarts;
  km.min_cluster_fraction = cfg.kmeans_min_fraction;
  km.seed = split_seed(cfg.seed, 0x52);

  std::vector<TreeAssignment> assignments(n_entries);
  int built = 0;

  TrainOutput out;
  for (int epoch = 0; epoch < cfg.stage1_epochs; ++epoch) {
    if (epoch % cfg.cluster_interval == 0 && built < tree.levels) {
      auto embeddings = encode_all(drn, corpus.pairs);
      build_level(embeddings, assignments, built + 1, tree, km);
      ++built;
    }
    const int built_eff = std::min(built, level_cap);
    const double lr = nn::cosine_lr(cfg.lr, cfg.lr_min, epoch, cfg.stage1_epochs);

    auto rng = make_rng(split_seed(cfg.seed, 0x100 + static_cast<std::uint64_t>(epoch)));
    std::vector<size_t> order = corpus.train_idx;
    std::shuffle(order.begin(), order.end(), rng);

    EpochLoss el;
    el.epoch = epoch;
    int batches = 0;
    for (size_t start = 0; start < order.size();
         start += static_cast<size_t>(cfg.batch)) {
      std::vector<size_t> batch(
          order.begin() + static_cast<std::ptrdiff_t>(start),
          order.begin() + static_cast<std::ptrdiff_t>(
                              std::min(start + static_cast<size_t>(cfg.batch),
                                       order.size())));
      std::vector<Image> deg, cln;
      for (size_t i : batch) {
        ImagePair patch = random_patch(corpus.pairs[i], cfg.patch, rng);
        deg.push_back(std::move(patch.degraded));
        cln.push_back(std::move(patch.clean));
      }
      std::vector<const Image*> dp, cp;
      for (auto& im : deg) dp.push_back(&im);
      for (auto& im : cln) cp.push_back(&im);
      auto x = nn::Var<float>::constant(batch_to_tensor(dp));
      auto y = nn::Var<float>::constant(batch_to_tensor(cp));

      ps.zero_grad();
      auto z = drn.encode(x);
      auto logits = drn.mask_logits(z);
      auto r_m = drn.mask_probs(logits, tree, built_eff);
      auto r = compose_representation(r_m, drn.attr_project(z), 1);
      auto l_res = restoration_loss(rn.forward(x, r), y, cfg.alpha);

      nn::Var<float> total;
      double cls_val = 0.0;
      if (built_eff >= 1) {
        auto l_cls = nn::per_level_cross_entropy(
            logits, batch_targets(assignments, batch, tree, built_eff),
            tree.level_sizes(), built_eff);
        cls_val = l_cls.scalar();
        total = total_loss_stage1(l_cls, l_res);
      } else {
        total = l_res;  // L_cls defined as 0 before the first clustering
      }
      if (!std::isfinite(total.scalar()))
        throw std::runtime_error("train_stage1: non-finite loss at epoch " +
                                 std::to_string(epoch) + ", batch " +
                                 std::to_string(batches));
      nn::backward(total);
      opt.step(lr);

      el.total += total.scalar();
      el.cls += cls_val;
      el.res += l_res.scalar();
      ++batches;
    }
    el.total /= batches;
    el.cls /= batches;
    el.res /= batches;
    out.losses.push_back(el);
  }

  Checkpoint& ck = out.checkpoint;
  ck.config_hash = config_hash(cfg);
  ck.stage = 1;
  ck.epoch = cfg.stage1_epochs;
  ck.built_levels = built;
  ck.variant = cfg.variant;
  ck.assignments = std::move(assignments);
  capture_params(ps, "drn.", ck);
  capture_params(ps, "rn.", ck);
  capture_optimizer(opt, ps, ck);
  return out;
}

TrainOutput train_stage2(const TrainConfig& cfg, const Checkpoint& stage1,
                         const CorpusManifest& manifest,
                         const std::string& corpus_root) {
  cfg.validate();
  const DegTree tree{cfg.tree_levels, cfg.tree_branching};
  if (stage1.built_levels != tree.levels)
    throw std::invalid_argument(
        "train_stage2: stage-1 checkpoint has an unfinished tree (built " +
        std::to_string(stage1.built_levels) + " of " +
        std::to_string(tree.levels) + " levels)");
  if (stage1.variant != cfg.variant)
    throw std::invalid_argument("train_stage2: checkpoint variant '" +
                                stage1.variant + "' differs from config '" +
                                cfg.variant + "'");
  if (stage1.config_hash != config_hash(cfg))
    throw CheckpointError("train_stage2: config hash mismatch; refusing resume");

  const AblationVariant variant = cfg.ablation();
  const int built_eff = std::min(stage1.built_levels,
                                 variant_max_levels(variant, tree.levels));
  LoadedCorpus corpus = load_corpus(manifest, corpus_root);

  // frozen encoder in its own store
  nn::ParamStore<float> ps_drn(split_seed(cfg.seed, 0x51));
  Drn<float> drn(ps_drn, drn_config(cfg));
  apply_params(stage1, "drn.", ps_drn);
  ps_drn.set_requires_grad(false);

  // restorer retrained from scratch unless fine-tuning is requested
  nn::ParamStore<float> ps_rn(split_seed(cfg.seed, 0x53));
  Restorer<float> rn(ps_rn, rn_config(cfg));
  if (cfg.stage2_finetune) apply_params(stage1, "rn.", ps_rn);
  nn::AdamW<float> opt(ps_rn, cfg.weight_decay);

  TrainOutput out;
  for (int epoch = 0; epoch < cfg.stage2_epochs; ++epoch) {
    const double lr = nn::cosine_lr(cfg.lr, cfg.lr_min, epoch, cfg.stage2_epochs);
    auto rng = make_rng(split_seed(cfg.seed, 0x200 + static_cast<std::uint64_t>(epoch)));
    std::vector<size_t> order = corpus.train_idx;
    std::shuffle(order.begin(), order.end(), rng);

    EpochLoss el;
    el.epoch = epoch;
    int batches = 0;
    for (size_t start = 0; start < order.size();
         start += static_cast<size_t>(cfg.batch)) {
      std::vector<size_t> batch(
          order.begin() + static_cast<std::ptrdiff_t>(start),
          order.begin() + static_cast<std::ptrdiff_t>(
                              std::min(start + static_cast<size_t>(cfg.batch),
                                       order.size())));
      std::vector<Image> deg, cln;
      for (size_t i : batch) {
        ImagePair patch = random_patch(corpus.pairs[i], cfg.patch, rng);
        deg.push_back(std::move(patch.degraded));
        cln.push_back(std::move(patch.clean));
      }
      std::vector<const Image*> dp, cp;
      for (auto& im : deg) dp.push_back(&im);
      for (auto& im : cln) cp.push_back(&im);
      auto x = nn::Var<float>::constant(batch_to_tensor(dp));
      auto y = nn::Var<float>::constant(batch_to_tensor(cp));

      ps_rn.zero_grad();
      auto z = drn.encode(x);
      auto r_m = drn.mask_probs(drn.mask_logits(z), tree, built_eff);
      auto r = detach(compose_representation(r_m, r_m, 2));
      auto loss = restoration_loss(rn.forward(x, r), y, cfg.alpha);
      if (!std::isfinite(loss.scalar()))
        throw std::runtime_error("train_stage2: non-finite loss at epoch " +
                                 std::to_string(epoch) + ", batch " +
                                 std::to_string(batches));
      nn::backward(loss);
      opt.step(lr);

      el.total += loss.scalar();
      el.res += loss.scalar();
      ++batches;
    }
    el.total /= batches;
    el.res /= batches;
    out.losses.push_back(el);
  }

  Checkpoint& ck = out.checkpoint;
  ck.config_hash = config_hash(cfg);
  ck.stage = 2;
  ck.epoch = cfg.stage2_epochs;
  ck.built_levels = stage1.built_levels;
  ck.variant = cfg.variant;
  ck.assignments = stage1.assignments;
  capture_params(ps_drn, "drn.", ck);
  capture_params(ps_rn, "rn.", ck);
  capture_optimizer(opt, ps_rn, ck);
  return out;
}

void write_loss_log(const std::vector<EpochLoss>& losses,
                    const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write loss log: " + path);
  out << "epoch\ttotal\tcls\tres\n";
  for (const auto& l : losses)
    out << l.epoch << '\t' << l.total << '\t' << l.cls << '\t' << l.res << '\n';
}

}  // namespace amir
