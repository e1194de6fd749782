#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "amir/degrade.hpp"

namespace amir {

// Roster entry: a degradation spec template. When sigma_choices is
// non-empty, each generated entry draws its sigma from the list using the
// entry's derived seed; otherwise the template's parameters are used as-is.
struct DegradationTemplate {
  DegradationSpec base;
  std::vector<double> sigma_choices;
};

struct CorpusEntry {
  std::string clean_path;     // relative to the corpus root
  std::string degraded_path;  // relative to the corpus root
  DegradationSpec spec;       // realized parameters, including derived seed
};

struct CorpusManifest {
  std::string version = "1";
  std::uint64_t seed = 0;
  std::vector<CorpusEntry> entries;
};

// Desk-default severity for each kind (noise 25/255, blur sigma 2,
// low-light gamma 2.5 gain 0.4, jpeg quality 10, motion 7px/30deg,
// defocus radius 2.5).
DegradationTemplate default_template(DegKind kind);

// Parses a comma-separated kind list ("gaussian_noise,gaussian_blur,...")
// into default templates. Throws on unknown kinds.
std::vector<DegradationTemplate> roster_from_string(const std::string& s);

// Procedural clean image: fixed-frequency gratings and fixed-contrast
// shapes with randomized phases and placement, normalized per channel to
// shared moments. Pure function of (h, w, seed).
Image make_clean_image(int h, int w, std::uint64_t seed);

// Writes `count` clean images into dir as NNNNN.ppm.
void generate_clean_dir(const std::string& dir, int count, int h, int w,
                        std::uint64_t seed);

// Cycles through the sorted clean images, applying roster entries in order:
// entry i (global index) uses seed split_seed(seed, i). Writes
// out_dir/{clean,degraded}/NNNNN.ppm and out_dir/manifest.json.
CorpusManifest generate_corpus(const std::string& clean_dir,
                               const std::vector<DegradationTemplate>& roster,
                               int n_per_type, const std::string& out_dir,
                               std::uint64_t seed);

void write_manifest(const CorpusManifest& m, const std::string& path);
CorpusManifest read_manifest(const std::string& path);

// Deterministic validation split: entry i is validation iff
// mix64(manifest seed ^ i) % 10 == 0 (about 10%).
bool is_validation_entry(const CorpusManifest& m, size_t index);

}  // namespace amir
