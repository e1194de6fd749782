#pragma once
#include <cstdint>
#include <vector>

namespace amir {

// Fixed-shape degradation hierarchy. Level i (1-based) holds branching^i
// nodes; the flat label is the level-order concatenation of all levels.
struct DegTree {
  int levels = 4;
  int branching = 2;

  std::vector<int> level_sizes() const {
    std::vector<int> s;
    int n = 1;
    for (int i = 0; i < levels; ++i) {
      n *= branching;
      s.push_back(n);
    }
    return s;
  }
  std::vector<int> level_offsets() const {
    std::vector<int> off;
    int acc = 0, n = 1;
    for (int i = 0; i < levels; ++i) {
      off.push_back(acc);
      n *= branching;
      acc += n;
    }
    return off;
  }
  int flat_length() const {
    int acc = 0, n = 1;
    for (int i = 0; i < levels; ++i) {
      n *= branching;
      acc += n;
    }
    return acc;  // 30 for the default 4-level binary tree
  }
};

// A sample's path down the tree: one child index per built level.
struct TreeAssignment {
  std::vector<int> path;
  int built_levels() const { return static_cast<int>(path.size()); }
};

using FlatLabel = std::vector<int>;  // 0/1 bits, level order

FlatLabel flatten(const TreeAssignment& a, const DegTree& tree);
TreeAssignment unflatten(const FlatLabel& label, const DegTree& tree);

// Global node index within its level for each built level of a path.
std::vector<int> path_level_indices(const TreeAssignment& a, const DegTree& tree);

struct KMeansConfig {
  int k = 2;
  int restarts = 10;
  int max_iters = 100;
  double tol = 1e-10;
  std::uint64_t seed = 0;
  double min_cluster_fraction = 0.05;
};

struct KMeansResult {
  std::vector<int> assignments;
  std::vector<std::vector<double>> centroids;  // canonical order
  double inertia = 0.0;
};

// Lloyd iterations from k-means++ seeding, best of restarts by inertia.
// Centroids are canonicalized by lexicographic sort on coordinates.
KMeansResult kmeans(const std::vector<std::vector<double>>& points,
                    const KMeansConfig& cfg);

// Extends every sample's path from level-1 depth `level - 1` to `level` by
// clustering each level-(level-1) node's members into `branching` groups.
// Nodes with fewer than branching * min-members samples put everyone in
// child 0 (early-leaf rule). Refinement only: no sample leaves its parent.
void build_level(const std::vector<std::vector<double>>& embeddings,
                 std::vector<TreeAssignment>& assignments, int level,
                 const DegTree& tree, const KMeansConfig& cfg);

// Adjusted Rand index between two labelings of the same samples.
double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b);

}  // namespace amir
