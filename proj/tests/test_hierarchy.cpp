#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "amir/hierarchy.hpp"

using namespace amir;

namespace {

// exhaustive 2-partition oracle: minimal inertia over all splits
double brute_force_inertia_k2(const std::vector<std::vector<double>>& pts) {
  const size_t n = pts.size();
  const size_t dim = pts[0].size();
  double best = std::numeric_limits<double>::max();
  for (unsigned mask = 1; mask + 1 < (1u << n); ++mask) {
    std::vector<double> c0(dim, 0.0), c1(dim, 0.0);
    int n0 = 0, n1 = 0;
    for (size_t i = 0; i < n; ++i) {
      auto& c = (mask >> i) & 1 ? c1 : c0;
      ((mask >> i) & 1 ? n1 : n0)++;
      for (size_t d = 0; d < dim; ++d) c[d] += pts[i][d];
    }
    for (size_t d = 0; d < dim; ++d) {
      c0[d] /= n0;
      c1[d] /= n1;
    }
    double inertia = 0.0;
    for (size_t i = 0; i < n; ++i) {
      const auto& c = (mask >> i) & 1 ? c1 : c0;
      for (size_t d = 0; d < dim; ++d) {
        double diff = pts[i][d] - c[d];
        inertia += diff * diff;
      }
    }
    best = std::min(best, inertia);
  }
  return best;
}

}  // namespace

TEST_CASE("flatten: default tree layout") {
  DegTree tree;
  CHECK(tree.flat_length() == 30);
  CHECK(tree.level_sizes() == std::vector<int>{2, 4, 8, 16});
  CHECK(tree.level_offsets() == std::vector<int>{0, 2, 6, 14});

  TreeAssignment a{{0, 0, 0, 0}};
  FlatLabel lab = flatten(a, tree);
  for (int i = 0; i < 30; ++i)
    CHECK(lab[static_cast<size_t>(i)] == ((i == 0 || i == 2 || i == 6 || i == 14) ? 1 : 0));

  TreeAssignment root{};
  FlatLabel zeros = flatten(root, tree);
  CHECK(std::count(zeros.begin(), zeros.end(), 0) == 30);
}

TEST_CASE("flatten/unflatten round-trips all 16 leaf paths") {
  DegTree tree;
  for (int leaf = 0; leaf < 16; ++leaf) {
    TreeAssignment a;
    for (int l = 3; l >= 0; --l) a.path.push_back((leaf >> l) & 1);
    FlatLabel lab = flatten(a, tree);
    // exactly one bit per level
    auto off = tree.level_offsets();
    auto sz = tree.level_sizes();
    for (int l = 0; l < 4; ++l) {
      int bits = 0;
      for (int j = 0; j < sz[static_cast<size_t>(l)]; ++j) bits += lab[static_cast<size_t>(off[static_cast<size_t>(l)] + j)];
      CHECK(bits == 1);
    }
    TreeAssignment back = unflatten(lab, tree);
    CHECK(back.path == a.path);
  }
}

TEST_CASE("flatten rejects out-of-range paths; unflatten rejects bad labels") {
  DegTree tree;
  TreeAssignment bad{{0, 2}};
  CHECK_THROWS(flatten(bad, tree));

  FlatLabel lab(30, 0);
  lab[0] = 1;
  lab[4] = 1;  // level-2 node whose parent bit (index 1) is unset
  CHECK_THROWS(unflatten(lab, tree));
}

TEST_CASE("kmeans: clean 1-D separation") {
  std::vector<std::vector<double>> pts = {{0.0}, {0.1}, {10.0}, {10.1}};
  KMeansConfig cfg;
  cfg.seed = 1;
  KMeansResult res = kmeans(pts, cfg);
  CHECK(res.assignments[0] == res.assignments[1]);
  CHECK(res.assignments[2] == res.assignments[3]);
  CHECK(res.assignments[0] != res.assignments[2]);
  CHECK(res.inertia == doctest::Approx(brute_force_inertia_k2(pts)).epsilon(1e-9));
  // canonical order: centroid with the smaller first coordinate comes first
  CHECK(res.centroids[0][0] < res.centroids[1][0]);
}

TEST_CASE("kmeans: identical points degenerate to inertia 0") {
  std::vector<std::vector<double>> pts(5, {3.0, 3.0});
  KMeansConfig cfg;
  cfg.seed = 2;
  KMeansResult res = kmeans(pts, cfg);
  CHECK(res.inertia == doctest::Approx(0.0));
  CHECK(res.centroids[0] == res.centroids[1]);
}

TEST_CASE("kmeans: brute-force-optimal on 20 random 8-point instances") {
  std::mt19937_64 rng(123);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int optimal = 0;
  for (int inst = 0; inst < 20; ++inst) {
    std::vector<std::vector<double>> pts(8, std::vector<double>(2));
    for (auto& p : pts) {
      p[0] = u(rng);
      p[1] = u(rng);
    }
    KMeansConfig cfg;
    cfg.seed = 1000 + static_cast<std::uint64_t>(inst);
    double got = kmeans(pts, cfg).inertia;
    double best = brute_force_inertia_k2(pts);
    if (got <= best * (1 + 1e-9) + 1e-12) ++optimal;
  }
  CHECK(optimal >= 19);
}

TEST_CASE("kmeans: deterministic under seed; validates config") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::vector<double>> pts(12, std::vector<double>(3));
  for (auto& p : pts)
    for (auto& v : p) v = u(rng);
  KMeansConfig cfg;
  cfg.seed = 9;
  auto a = kmeans(pts, cfg);
  auto b = kmeans(pts, cfg);
  CHECK(a.assignments == b.assignments);
  CHECK(a.inertia == b.inertia);

  CHECK_THROWS(kmeans({{1.0}}, cfg));  // fewer points than k
  std::vector<std::vector<double>> empty_dim = {{}, {}};
  CHECK_THROWS(kmeans(empty_dim, cfg));
}

TEST_CASE("build_level: separated blobs recover blob identity") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n(0.0, 0.1);
  std::vector<std::vector<double>> emb;
  std::vector<int> truth;
  for (int i = 0; i < 40; ++i) {
    int blob = i % 2;
    emb.push_back({blob * 5.0 + n(rng), n(rng)});
    truth.push_back(blob);
  }
  std::vector<TreeAssignment> assign(emb.size());
  DegTree tree;
  KMeansConfig cfg;
  cfg.seed = 3;
  build_level(emb, assign, 1, tree, cfg);
  std::vector<int> got;
  for (auto& a : assign) got.push_back(a.path[0]);
  CHECK(adjusted_rand_index(got, truth) == doctest::Approx(1.0));
}

TEST_CASE("build_level: early-leaf rule and path consistency") {
  DegTree tree;
  KMeansConfig cfg;
  cfg.seed = 4;
  // one tiny node: a single sample always goes to child 0
  std::vector<std::vector<double>> emb = {{1.0, 2.0}};
  std::vector<TreeAssignment> assign(1);
  build_level(emb, assign, 1, tree, cfg);
  CHECK(assign[0].path == std::vector<int>{0});

  // grow a 2-level tree on random data and re-check invariants
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::vector<double>> e2(50, std::vector<double>(4));
  for (auto& p : e2)
    for (auto& v : p) v = u(rng);
  std::vector<TreeAssignment> a2(e2.size());
  build_level(e2, a2, 1, tree, cfg);
  auto level1 = a2;
  build_level(e2, a2, 2, tree, cfg);
  for (size_t i = 0; i < a2.size(); ++i) {
    CHECK(a2[i].built_levels() == 2);
    CHECK(a2[i].path[0] == level1[i].path[0]);  // refinement only
    FlatLabel lab = flatten(a2[i], tree);
    CHECK(unflatten(lab, tree).path == a2[i].path);
  }

  // level skipping rejected
  std::vector<TreeAssignment> wrong(e2.size());
  CHECK_THROWS(build_level(e2, wrong, 2, tree, cfg));
}

TEST_CASE("adjusted_rand_index basics") {
  CHECK(adjusted_rand_index({0, 0, 1, 1}, {1, 1, 0, 0}) == doctest::Approx(1.0));
  CHECK(std::abs(adjusted_rand_index({0, 1, 0, 1}, {0, 0, 1, 1})) < 0.5);
}
