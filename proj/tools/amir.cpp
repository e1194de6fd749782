#include <CLI11.hpp>
#include <filesystem>
#include <iostream>

#include "amir/checkpoint.hpp"
#include "amir/config.hpp"
#include "amir/corpus.hpp"
#include "amir/embed.hpp"
#include "amir/evaluate.hpp"
#include "amir/train.hpp"

namespace fs = std::filesystem;
using namespace amir;

namespace {

struct CommonOpts {
  std::string config_path;
  std::string corpus_dir;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string device = "cpu";
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--config", o.config_path, "JSON config file");
  cmd->add_option("--corpus-dir", o.corpus_dir, "corpus root (overrides config)");
  cmd->add_option("--out-dir", o.out_dir, "output directory (overrides config)");
  cmd->add_option("--seed", o.seed, "seed (overrides config)")
      ->each([&o](const std::string&) { o.seed_set = true; });
  cmd->add_option("--device", o.device, "compute device (only cpu supported)");
}

TrainConfig resolve_config(const CommonOpts& o) {
  TrainConfig cfg;
  if (!o.config_path.empty()) cfg = load_train_config(o.config_path);
  if (!o.corpus_dir.empty()) cfg.corpus_dir = o.corpus_dir;
  if (!o.out_dir.empty()) cfg.out_dir = o.out_dir;
  if (o.seed_set) cfg.seed = o.seed;
  if (o.device != "cpu")
    throw std::invalid_argument("unsupported device: " + o.device);
  cfg.validate();
  if (cfg.corpus_dir.empty())
    throw std::invalid_argument("corpus_dir not set (flag or config)");
  return cfg;
}

CorpusManifest manifest_for(const TrainConfig& cfg) {
  return read_manifest(cfg.corpus_dir + "/manifest.json");
}

Checkpoint load_ckpt(const std::string& path) {
  if (!fs::exists(path))
    throw std::runtime_error("checkpoint not found: " + path);
  return load_checkpoint(path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hierarchical degradation representation + restoration trainer"};
  app.require_subcommand(1);

  // gen-clean
  auto* gen_clean = app.add_subcommand("gen-clean", "generate procedural clean images");
  std::string gc_dir;
  int gc_count = 200, gc_size = 96;
  std::uint64_t gc_seed = 0;
  gen_clean->add_option("--out-dir", gc_dir, "target directory")->required();
  gen_clean->add_option("--count", gc_count, "number of images");
  gen_clean->add_option("--size", gc_size, "square image side");
  gen_clean->add_option("--seed", gc_seed, "seed");

  // gen-data
  auto* gen_data = app.add_subcommand("gen-data", "build a degraded corpus");
  std::string gd_clean, gd_out, gd_types =
      "gaussian_noise,gaussian_blur,low_light,block_compression";
  int gd_n = 50;
  std::uint64_t gd_seed = 0;
  gen_data->add_option("--clean-dir", gd_clean, "clean image directory")->required();
  gen_data->add_option("--out-dir", gd_out, "corpus output directory")->required();
  gen_data->add_option("--types", gd_types, "comma-separated degradation kinds");
  gen_data->add_option("--n-per-type", gd_n, "images per kind");
  gen_data->add_option("--seed", gd_seed, "seed");

  // train-stage1 / train-stage2
  CommonOpts s1, s2;
  auto* stage1 = app.add_subcommand("train-stage1", "stage-1 joint training");
  add_common(stage1, s1);
  auto* stage2 = app.add_subcommand("train-stage2", "stage-2 restorer retraining");
  add_common(stage2, s2);
  std::string s2_ckpt;
  stage2->add_option("--checkpoint", s2_ckpt, "stage-1 checkpoint path");

  // eval
  CommonOpts ev;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  add_common(eval_cmd, ev);
  std::string ev_ckpt, ev_split = "all";
  eval_cmd->add_option("--checkpoint", ev_ckpt, "checkpoint path")->required();
  eval_cmd->add_option("--split", ev_split, "all|train|val");

  // ablate
  CommonOpts ab;
  auto* ablate_cmd = app.add_subcommand("ablate", "train + evaluate one variant");
  add_common(ablate_cmd, ab);
  std::string ab_variant = "full";
  ablate_cmd->add_option("--variant", ab_variant,
                         "full|no_ftb|no_dsln|no_gm|layers_1..4");

  // embed-dump
  CommonOpts em;
  auto* embed_cmd = app.add_subcommand("embed-dump", "dump embeddings + 2-D projection");
  add_common(embed_cmd, em);
  std::string em_ckpt, em_out;
  embed_cmd->add_option("--checkpoint", em_ckpt, "checkpoint path")->required();
  embed_cmd->add_option("--out", em_out, "output file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen_clean->parsed()) {
      generate_clean_dir(gc_dir, gc_count, gc_size, gc_size, gc_seed);
      std::cout << "wrote " << gc_count << " clean images to " << gc_dir << "\n";
    } else if (gen_data->parsed()) {
      auto m = generate_corpus(gd_clean, roster_from_string(gd_types), gd_n,
                               gd_out, gd_seed);
      std::cout << "wrote " << m.entries.size() << " pairs to " << gd_out << "\n";
    } else if (stage1->parsed()) {
      TrainConfig cfg = resolve_config(s1);
      fs::create_directories(cfg.out_dir);
      auto out = train_stage1(cfg, manifest_for(cfg), cfg.corpus_dir);
      save_checkpoint(out.checkpoint, cfg.out_dir + "/stage1.ckpt");
      write_loss_log(out.losses, cfg.out_dir + "/loss_stage1.tsv");
      std::cout << "stage 1 done: built_levels=" << out.checkpoint.built_levels
                << " final_loss=" << out.losses.back().total << "\n";
    } else if (stage2->parsed()) {
      TrainConfig cfg = resolve_config(s2);
      fs::create_directories(cfg.out_dir);
      if (s2_ckpt.empty()) s2_ckpt = cfg.out_dir + "/stage1.ckpt";
      auto out = train_stage2(cfg, load_ckpt(s2_ckpt), manifest_for(cfg),
                              cfg.corpus_dir);
      save_checkpoint(out.checkpoint, cfg.out_dir + "/stage2.ckpt");
      write_loss_log(out.losses, cfg.out_dir + "/loss_stage2.tsv");
      std::cout << "stage 2 done: final_loss=" << out.losses.back().total << "\n";
    } else if (eval_cmd->parsed()) {
      TrainConfig cfg = resolve_config(ev);
      EvalSplit split = ev_split == "all" ? EvalSplit::all
                        : ev_split == "train" ? EvalSplit::train
                        : ev_split == "val" ? EvalSplit::val
                        : throw std::invalid_argument("bad --split: " + ev_split);
      auto rep = evaluate(load_ckpt(ev_ckpt), cfg, manifest_for(cfg),
                          cfg.corpus_dir, split);
      std::cout << format_report(rep);
    } else if (ablate_cmd->parsed()) {
      TrainConfig cfg = resolve_config(ab);
      cfg.variant = ab_variant;
      cfg.validate();
      fs::create_directories(cfg.out_dir);
      auto m = manifest_for(cfg);
      auto out = train_stage1(cfg, m, cfg.corpus_dir);
      save_checkpoint(out.checkpoint,
                      cfg.out_dir + "/ablate_" + ab_variant + ".ckpt");
      auto rep = evaluate(out.checkpoint, cfg, m, cfg.corpus_dir, EvalSplit::val);
      std::cout << ab_variant << '\t' << rep.average.psnr << '\t'
                << rep.average.ssim << "\n";
    } else if (embed_cmd->parsed()) {
      TrainConfig cfg = resolve_config(em);
      dump_embeddings(load_ckpt(em_ckpt), cfg, manifest_for(cfg), cfg.corpus_dir,
                      em_out);
      std::cout << "wrote " << em_out << "\n";
    }
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
  return 0;
}
