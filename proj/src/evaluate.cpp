#include "amir/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "amir/metrics.hpp"
#include "amir/model.hpp"
#include "amir/rng.hpp"

namespace amir {

namespace {

bool in_split(const CorpusManifest& m, size_t i, EvalSplit split) {
  switch (split) {
    case EvalSplit::all: return true;
    case EvalSplit::val: return is_validation_entry(m, i);
    case EvalSplit::train: return !is_validation_entry(m, i);
  }
  return true;
}

struct Accum {
  int count = 0;
  double psnr = 0.0, ssim = 0.0;
};

EvalReport finish(const std::map<std::string, Accum>& acc) {
  EvalReport rep;
  Accum total;
  for (const auto& [kind, a] : acc) {
    KindMetrics k;
    k.kind = kind;
    k.count = a.count;
    k.psnr = a.psnr / a.count;
    k.ssim = a.ssim / a.count;
    rep.per_kind.push_back(k);
    total.count += a.count;
    total.psnr += a.psnr;
    total.ssim += a.ssim;
  }
  if (total.count == 0) throw std::invalid_argument("evaluate: empty split");
  rep.average.kind = "average";
  rep.average.count = total.count;
  rep.average.psnr = total.psnr / total.count;
  rep.average.ssim = total.ssim / total.count;
  return rep;
}

}  // namespace

EvalReport evaluate(const Checkpoint& ckpt, const TrainConfig& cfg,
                    const CorpusManifest& manifest,
                    const std::string& corpus_root, EvalSplit split) {
  cfg.validate();
  const DegTree tree{cfg.tree_levels, cfg.tree_branching};
  const int built_eff = std::min(
      ckpt.built_levels, variant_max_levels(cfg.ablation(), tree.levels));

  nn::ParamStore<float> ps_drn(split_seed(cfg.seed, 0x51));
  Drn<float> drn(ps_drn, drn_config(cfg));
  apply_params(ckpt, "drn.", ps_drn);
  ps_drn.set_requires_grad(false);

  nn::ParamStore<float> ps_rn(split_seed(cfg.seed, 0x53));
  Restorer<float> rn(ps_rn, rn_config(cfg));
  apply_params(ckpt, "rn.", ps_rn);
  ps_rn.set_requires_grad(false);

  std::map<std::string, Accum> acc;
  for (size_t i = 0; i < manifest.entries.size(); ++i) {
    if (!in_split(manifest, i, split)) continue;
    const auto& e = manifest.entries[i];
    Image degraded = load_image(corpus_root + "/" + e.degraded_path);
    Image clean = load_image(corpus_root + "/" + e.clean_path);

    auto x = nn::Var<float>::constant(image_to_tensor(degraded));
    auto z = drn.encode(x);
    auto r_m = drn.mask_probs(drn.mask_logits(z), tree, built_eff);
    auto r = ckpt.stage == 1
                 ? compose_representation(r_m, drn.attr_project(z), 1)
                 : compose_representation(r_m, r_m, 2);
    auto restored = rn.forward_padded(x, r);
    Image out = tensor_to_image(restored.value());
    clip01(out);

    Accum& a = acc[to_string(e.spec.kind)];
    ++a.count;
    a.psnr += psnr(out, clean);
    a.ssim += ssim(out, clean);
  }
  return finish(acc);
}

EvalReport evaluate_baseline(const CorpusManifest& manifest,
                             const std::string& corpus_root, EvalSplit split) {
  std::map<std::string, Accum> acc;
  for (size_t i = 0; i < manifest.entries.size(); ++i) {
    if (!in_split(manifest, i, split)) continue;
    const auto& e = manifest.entries[i];
    Image degraded = load_image(corpus_root + "/" + e.degraded_path);
    Image clean = load_image(corpus_root + "/" + e.clean_path);
    Accum& a = acc[to_string(e.spec.kind)];
    ++a.count;
    a.psnr += psnr(degraded, clean);
    a.ssim += ssim(degraded, clean);
  }
  return finish(acc);
}

std::string format_report(const EvalReport& report) {
  std::ostringstream out;
  out << "kind\tcount\tpsnr\tssim\n";
  out.setf(std::ios::fixed);
  out.precision(4);
  for (const auto& k : report.per_kind)
    out << k.kind << '\t' << k.count << '\t' << k.psnr << '\t' << k.ssim << '\n';
  out << report.average.kind << '\t' << report.average.count << '\t'
      << report.average.psnr << '\t' << report.average.ssim << '\n';
  return out.str();
}

}  // namespace amir
