#include "amir/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "amir/rng.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace amir {

DegradationTemplate default_template(DegKind kind) {
  DegradationTemplate t;
  t.base.kind = kind;
  switch (kind) {
    case DegKind::gaussian_noise: t.base.sigma = 25.0 / 255.0; break;
    case DegKind::gaussian_blur: t.base.sigma = 2.0; break;
    case DegKind::motion_blur:
      t.base.length = 7.0;
      t.base.angle = 30.0;
      break;
    case DegKind::defocus_blur: t.base.radius = 2.5; break;
    case DegKind::low_light:
      t.base.gamma = 2.5;
      t.base.gain = 0.4;
      break;
    case DegKind::block_compression: t.base.quality = 10; break;
  }
  return t;
}

std::vector<DegradationTemplate> roster_from_string(const std::string& s) {
  std::vector<DegradationTemplate> roster;
  size_t pos = 0;
  while (pos <= s.size()) {
    size_t comma = s.find(',', pos);
    std::string tok = s.substr(pos, comma == std::string::npos ? std::string::npos
                                                               : comma - pos);
    if (!tok.empty()) roster.push_back(default_template(deg_kind_from_string(tok)));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  if (roster.empty())
    throw std::invalid_argument("roster_from_string: empty roster");
  return roster;
}

// Clean images share global statistics (fixed grating frequencies, fixed
// shape count/contrast, per-channel moment normalization) so that the main
// axis of variation in a corpus is the applied degradation rather than the
// underlying content. Randomness enters only through phases, orientation
// jitter, shape placement, and contrast signs.
Image make_clean_image(int h, int w, std::uint64_t seed) {
  auto rng = make_rng(seed);
  std::uniform_real_distribution<float> u(0.f, 1.f);
  Image img(h, w, 3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) img.at(y, x, c) = 0.5f;

  // three fixed-frequency gratings with jittered orientation and random phase
  const float freqs[3] = {5.f, 9.f, 13.f};
  const float thetas[3] = {0.f, 2.094f, 4.189f};
  for (int g = 0; g < 3; ++g) {
    float fr = freqs[g] * 6.28318f;
    float th = thetas[g] + 0.3f * (u(rng) - 0.5f);
    float ph = 6.28318f * u(rng);
    float kx = std::cos(th) * fr / w, ky = std::sin(th) * fr / h;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        float v = 0.07f * std::sin(kx * x + ky * y + ph);
        for (int c = 0; c < 3; ++c) img.at(y, x, c) += v;
      }
  }

  // four fixed-size shapes at random positions with fixed-magnitude contrast
  const int sizes[4] = {10, 13, 16, 12};
  for (int s = 0; s < 4; ++s) {
    int sz = std::min({sizes[s], h / 2, w / 2});
    int cx = sz + int(u(rng) * (w - 2 * sz)), cy = sz + int(u(rng) * (h - 2 * sz));
    bool disk = s % 2;
    float off[3];
    for (int c = 0; c < 3; ++c) off[c] = (u(rng) < 0.5f ? -1.f : 1.f) * 0.15f;
    for (int y = cy - sz; y < cy + sz; ++y)
      for (int x = cx - sz; x < cx + sz; ++x) {
        if (disk && (x - cx) * (x - cx) + (y - cy) * (y - cy) > sz * sz) continue;
        for (int c = 0; c < 3; ++c) img.at(y, x, c) += off[c];
      }
  }

  // per-channel normalization to mean 0.5, std 0.16
  for (int c = 0; c < 3; ++c) {
    double mu = 0, var = 0;
    const int n = h * w;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) mu += img.at(y, x, c);
    mu /= n;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double d = img.at(y, x, c) - mu;
        var += d * d;
      }
    var /= n;
    double sd = std::sqrt(var) + 1e-6;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        img.at(y, x, c) = static_cast<float>(0.5 + 0.16 * (img.at(y, x, c) - mu) / sd);
  }
  clip01(img);
  return img;
}

namespace {

std::string numbered(const char* stem, int i, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s/%05d.%s", stem, i, ext);
  return buf;
}

json spec_to_json(const DegradationSpec& s) {
  return json{{"kind", to_string(s.kind)}, {"sigma", s.sigma},
              {"length", s.length},        {"angle", s.angle},
              {"radius", s.radius},        {"gamma", s.gamma},
              {"gain", s.gain},            {"quality", s.quality},
              {"seed", s.seed}};
}

DegradationSpec spec_from_json(const json& j) {
  DegradationSpec s;
  s.kind = deg_kind_from_string(j.at("kind").get<std::string>());
  s.sigma = j.at("sigma").get<double>();
  s.length = j.at("length").get<double>();
  s.angle = j.at("angle").get<double>();
  s.radius = j.at("radius").get<double>();
  s.gamma = j.at("gamma").get<double>();
  s.gain = j.at("gain").get<double>();
  s.quality = j.at("quality").get<int>();
  s.seed = j.at("seed").get<std::uint64_t>();
  return s;
}

}  // namespace

void generate_clean_dir(const std::string& dir, int count, int h, int w,
                        std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("generate_clean_dir: count < 1");
  fs::create_directories(dir);
  for (int i = 0; i < count; ++i) {
    Image img = make_clean_image(h, w, split_seed(seed, i));
    save_image(img, dir + "/" + numbered("", i, "ppm").substr(1));
  }
}

CorpusManifest generate_corpus(const std::string& clean_dir,
                               const std::vector<DegradationTemplate>& roster,
                               int n_per_type, const std::string& out_dir,
                               std::uint64_t seed) {
  if (roster.empty()) throw std::invalid_argument("generate_corpus: empty roster");
  if (n_per_type < 1) throw std::invalid_argument("generate_corpus: n_per_type < 1");

  std::vector<std::string> clean_files;
  if (fs::is_directory(clean_dir))
    for (const auto& e : fs::directory_iterator(clean_dir))
      if (e.is_regular_file()) clean_files.push_back(e.path().string());
  std::sort(clean_files.begin(), clean_files.end());
  if (clean_files.empty())
    throw std::invalid_argument("generate_corpus: no clean images in " + clean_dir);

  fs::create_directories(fs::path(out_dir) / "clean");
  fs::create_directories(fs::path(out_dir) / "degraded");

  CorpusManifest m;
  m.seed = seed;
  int index = 0;
  for (const auto& tmpl : roster) {
    for (int i = 0; i < n_per_type; ++i, ++index) {
      const std::uint64_t entry_seed = split_seed(seed, index);
      DegradationSpec spec = tmpl.base;
      spec.seed = entry_seed;
      if (!tmpl.sigma_choices.empty()) {
        auto rng = make_rng(split_seed(entry_seed, 1));
        std::uniform_int_distribution<size_t> pick(0, tmpl.sigma_choices.size() - 1);
        spec.sigma = tmpl.sigma_choices[pick(rng)];
      }
      Image clean = load_image(clean_files[index % clean_files.size()]);
      Image degraded = apply_degradation(clean, spec);

      CorpusEntry e;
      e.clean_path = numbered("clean", index, "ppm");
      e.degraded_path = numbered("degraded", index, "ppm");
      e.spec = spec;
      save_image(clean, out_dir + "/" + e.clean_path);
      save_image(degraded, out_dir + "/" + e.degraded_path);
      m.entries.push_back(std::move(e));
    }
  }
  write_manifest(m, out_dir + "/manifest.json");
  return m;
}

void write_manifest(const CorpusManifest& m, const std::string& path) {
  json j;
  j["version"] = m.version;
  j["seed"] = m.seed;
  j["entries"] = json::array();
  for (const auto& e : m.entries)
    j["entries"].push_back(json{{"clean", e.clean_path},
                                {"degraded", e.degraded_path},
                                {"spec", spec_to_json(e.spec)}});
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write manifest: " + path);
  out << j.dump(2) << "\n";
}

CorpusManifest read_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open manifest: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& ex) {
    throw std::runtime_error("malformed manifest " + path + ": " + ex.what());
  }
  CorpusManifest m;
  m.version = j.at("version").get<std::string>();
  m.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& je : j.at("entries")) {
    CorpusEntry e;
    e.clean_path = je.at("clean").get<std::string>();
    e.degraded_path = je.at("degraded").get<std::string>();
    e.spec = spec_from_json(je.at("spec"));
    m.entries.push_back(std::move(e));
  }
  return m;
}

bool is_validation_entry(const CorpusManifest& m, size_t index) {
  return mix64(m.seed ^ static_cast<std::uint64_t>(index)) % 10 == 0;
}

}  // namespace amir
