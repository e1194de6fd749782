#include "amir/hierarchy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <stdexcept>

#include "amir/rng.hpp"

namespace amir {

std::vector<int> path_level_indices(const TreeAssignment& a, const DegTree& tree) {
  std::vector<int> idx;
  int cur = 0;
  for (int l = 0; l < a.built_levels(); ++l) {
    int child = a.path[static_cast<size_t>(l)];
    if (child < 0 || child >= tree.branching)
      throw std::out_of_range("path index out of range");
    cur = cur * tree.branching + child;
    idx.push_back(cur);
  }
  return idx;
}

FlatLabel flatten(const TreeAssignment& a, const DegTree& tree) {
  if (a.built_levels() > tree.levels)
    throw std::out_of_range("path longer than tree depth");
  FlatLabel label(static_cast<size_t>(tree.flat_length()), 0);
  auto offsets = tree.level_offsets();
  auto idx = path_level_indices(a, tree);
  for (int l = 0; l < a.built_levels(); ++l)
    label[static_cast<size_t>(offsets[static_cast<size_t>(l)] + idx[static_cast<size_t>(l)])] = 1;
  return label;
}

TreeAssignment unflatten(const FlatLabel& label, const DegTree& tree) {
  if (static_cast<int>(label.size()) != tree.flat_length())
    throw std::invalid_argument("flat label length mismatch");
  auto offsets = tree.level_offsets();
  auto sizes = tree.level_sizes();
  TreeAssignment a;
  int parent = 0;
  for (int l = 0; l < tree.levels; ++l) {
    int found = -1;
    for (int j = 0; j < sizes[static_cast<size_t>(l)]; ++j)
      if (label[static_cast<size_t>(offsets[static_cast<size_t>(l)] + j)]) {
        if (found >= 0) throw std::invalid_argument("multiple bits set in one level");
        found = j;
      }
    if (found < 0) break;  // unbuilt from here down
    if (found / tree.branching != parent)
      throw std::invalid_argument("flat label violates path consistency");
    a.path.push_back(found % tree.branching);
    parent = found;
  }
  // all remaining levels must be zero
  for (int l = a.built_levels(); l < tree.levels; ++l)
    for (int j = 0; j < sizes[static_cast<size_t>(l)]; ++j)
      if (label[static_cast<size_t>(offsets[static_cast<size_t>(l)] + j)])
        throw std::invalid_argument("bit set below an unbuilt level");
  return a;
}

namespace {

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

// One seeded restart; returns (assignments, centroids, inertia).
KMeansResult lloyd_once(const std::vector<std::vector<double>>& pts, int k,
                        int max_iters, double tol, std::uint64_t seed) {
  const size_t n = pts.size();
  const size_t dim = pts[0].size();
  auto rng = make_rng(seed);

  // k-means++ seeding
  std::vector<std::vector<double>> cent;
  std::uniform_int_distribution<size_t> uid(0, n - 1);
  cent.push_back(pts[uid(rng)]);
  std::vector<double> d2(n);
  while (static_cast<int>(cent.size()) < k) {
    double sum = 0.0;
    for (size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::max();
      for (const auto& c : cent) best = std::min(best, sq_dist(pts[i], c));
      d2[i] = best;
      sum += best;
    }
    size_t pick = 0;
    if (sum <= 0.0) {
      pick = uid(rng);
    } else {
      std::uniform_real_distribution<double> u(0.0, sum);
      double r = u(rng), cum = 0.0;
      for (size_t i = 0; i < n; ++i) {
        cum += d2[i];
        if (r <= cum) { pick = i; break; }
      }
    }
    cent.push_back(pts[pick]);
  }

  std::vector<int> assign(n, 0);
  double inertia = 0.0;
  for (int it = 0; it < max_iters; ++it) {
    // assignment step; equidistant points join the lower centroid index
    inertia = 0.0;
    for (size_t i = 0; i < n; ++i) {
      int best = 0;
      double bd = sq_dist(pts[i], cent[0]);
      for (int c = 1; c < k; ++c) {
        double d = sq_dist(pts[i], cent[static_cast<size_t>(c)]);
        if (d < bd) { bd = d; best = c; }
      }
      assign[i] = best;
      inertia += bd;
    }
    // update step
    std::vector<std::vector<double>> next(static_cast<size_t>(k),
                                          std::vector<double>(dim, 0.0));
    std::vector<int> count(static_cast<size_t>(k), 0);
    for (size_t i = 0; i < n; ++i) {
      for (size_t d = 0; d < dim; ++d) next[static_cast<size_t>(assign[i])][d] += pts[i][d];
      ++count[static_cast<size_t>(assign[i])];
    }
    for (int c = 0; c < k; ++c) {
      if (count[static_cast<size_t>(c)] == 0) {
        // reseed at the point farthest from its assigned centroid
        size_t far = 0;
        double fd = -1.0;
        for (size_t i = 0; i < n; ++i) {
          double d = sq_dist(pts[i], cent[static_cast<size_t>(assign[i])]);
          if (d > fd) { fd = d; far = i; }
        }
        next[static_cast<size_t>(c)] = pts[far];
      } else {
        for (size_t d = 0; d < dim; ++d)
          next[static_cast<size_t>(c)][d] /= count[static_cast<size_t>(c)];
      }
    }
    double shift = 0.0;
    for (int c = 0; c < k; ++c) shift += sq_dist(cent[static_cast<size_t>(c)], next[static_cast<size_t>(c)]);
    cent = std::move(next);
    if (shift < tol) break;
  }
  // final assignment against the converged centroids
  inertia = 0.0;
  for (size_t i = 0; i < n; ++i) {
    int best = 0;
    double bd = sq_dist(pts[i], cent[0]);
    for (int c = 1; c < k; ++c) {
      double d = sq_dist(pts[i], cent[static_cast<size_t>(c)]);
      if (d < bd) { bd = d; best = c; }
    }
    assign[i] = best;
    inertia += bd;
  }
  return {std::move(assign), std::move(cent), inertia};
}

}  // namespace

KMeansResult kmeans(const std::vector<std::vector<double>>& points,
                    const KMeansConfig& cfg) {
  if (cfg.k < 2) throw std::invalid_argument("kmeans: k must be >= 2");
  if (cfg.restarts < 1 || cfg.tol <= 0.0)
    throw std::invalid_argument("kmeans: bad config");
  if (points.size() < static_cast<size_t>(cfg.k))
    throw std::invalid_argument("kmeans: fewer points than clusters");
  if (points[0].empty())
    throw std::invalid_argument("kmeans: zero-dimensional points");

  KMeansResult best;
  best.inertia = std::numeric_limits<double>::max();
  for (int r = 0; r < cfg.restarts; ++r) {
    KMeansResult res = lloyd_once(points, cfg.k, cfg.max_iters, cfg.tol,
                                  split_seed(cfg.seed, static_cast<std::uint64_t>(r)));
    if (res.inertia < best.inertia) best = std::move(res);  // ties keep lowest restart
  }

  // canonical centroid order: lexicographic on coordinates
  std::vector<int> order(static_cast<size_t>(cfg.k));
  for (int i = 0; i < cfg.k; ++i) order[static_cast<size_t>(i)] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return best.centroids[static_cast<size_t>(a)] < best.centroids[static_cast<size_t>(b)];
  });
  std::vector<int> rank(static_cast<size_t>(cfg.k));
  std::vector<std::vector<double>> cent(static_cast<size_t>(cfg.k));
  for (int i = 0; i < cfg.k; ++i) {
    rank[static_cast<size_t>(order[static_cast<size_t>(i)])] = i;
    cent[static_cast<size_t>(i)] = best.centroids[static_cast<size_t>(order[static_cast<size_t>(i)])];
  }
  for (int& a : best.assignments) a = rank[static_cast<size_t>(a)];
  best.centroids = std::move(cent);
  return best;
}

void build_level(const std::vector<std::vector<double>>& embeddings,
                 std::vector<TreeAssignment>& assignments, int level,
                 const DegTree& tree, const KMeansConfig& cfg) {
  if (level < 1 || level > tree.levels)
    throw std::invalid_argument("build_level: level out of range");
  if (embeddings.size() != assignments.size())
    throw std::invalid_argument("build_level: embedding/sample count mismatch");
  for (const auto& a : assignments)
    if (a.built_levels() != level - 1)
      throw std::invalid_argument("build_level: samples not at level - 1");

  // group samples by their level-(level-1) node
  std::map<int, std::vector<size_t>> groups;
  for (size_t i = 0; i < assignments.size(); ++i) {
    auto idx = path_level_indices(assignments[i], tree);
    groups[idx.empty() ? 0 : idx.back()].push_back(i);
  }

  const size_t min_members = std::max<size_t>(
      1, static_cast<size_t>(std::ceil(cfg.min_cluster_fraction *
                                       static_cast<double>(assignments.size()))));
  for (auto& [node, members] : groups) {
    if (members.size() < static_cast<size_t>(tree.branching) * min_members) {
      for (size_t i : members) assignments[i].path.push_back(0);
      continue;
    }
    std::vector<std::vector<double>> pts;
    pts.reserve(members.size());
    for (size_t i : members) pts.push_back(embeddings[i]);
    KMeansConfig node_cfg = cfg;
    node_cfg.k = tree.branching;
    node_cfg.seed = split_seed(cfg.seed, (static_cast<std::uint64_t>(level) << 32) |
                                             static_cast<std::uint64_t>(node));
    KMeansResult res = kmeans(pts, node_cfg);
    for (size_t m = 0; m < members.size(); ++m)
      assignments[members[m]].path.push_back(res.assignments[m]);
  }
}

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size() || a.empty())
    throw std::invalid_argument("adjusted_rand_index: bad inputs");
  std::map<std::pair<int, int>, long long> cont;
  std::map<int, long long> ra, rb;
  for (size_t i = 0; i < a.size(); ++i) {
    ++cont[{a[i], b[i]}];
    ++ra[a[i]];
    ++rb[b[i]];
  }
  auto comb2 = [](long long n) { return n * (n - 1) / 2.0; };
  double sum_ij = 0.0, sum_a = 0.0, sum_b = 0.0;
  for (auto& [k, v] : cont) sum_ij += comb2(v);
  for (auto& [k, v] : ra) sum_a += comb2(v);
  for (auto& [k, v] : rb) sum_b += comb2(v);
  double total = comb2(static_cast<long long>(a.size()));
  double expected = sum_a * sum_b / total;
  double max_idx = 0.5 * (sum_a + sum_b);
  if (max_idx == expected) return 1.0;  // single-cluster degenerate case
  return (sum_ij - expected) / (max_idx - expected);
}

}  // namespace amir
