// picdiar/graphclust.cpp

#include "picdiar/graphclust.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>

namespace picdiar {

namespace {

constexpr double kCosineFloor = 1e-12;
constexpr double kSolveResidual = 1e-8;

// Union-find over node indices.
struct DisjointSets {
  std::vector<int> parent;
  explicit DisjointSets(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

std::vector<int> sorted_union(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<int> u;
  u.reserve(a.size() + b.size());
  std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(u));
  return u;
}

// (1/|C_a|^2) 1_{C_a}^T (I - sigma P_union)^{-1} 1_{C_a} with `selector`
// marking the C_a positions inside `nodes`.
double resolvent_quadratic_form(const AffinityGraph& g, const std::vector<int>& nodes,
                                const std::vector<bool>& selector, int cardinality) {
  const int m = static_cast<int>(nodes.size());
  Matrix system(m, m);
  for (int r = 0; r < m; ++r)
    for (int c = 0; c < m; ++c)
      system(r, c) = (r == c ? 1.0 : 0.0) - g.sigma * g.transition(nodes[r], nodes[c]);
  Vector rhs(m);
  for (int r = 0; r < m; ++r) rhs(r) = selector[r] ? 1.0 : 0.0;
  Vector solution = system.partialPivLu().solve(rhs);
  const double residual = (system * solution - rhs).cwiseAbs().maxCoeff();
  if (!(residual <= kSolveResidual))
    throw Error("path integral: linear solve residual " + std::to_string(residual));
  double total = 0.0;
  for (int r = 0; r < m; ++r)
    if (selector[r]) total += solution(r);
  return total / (static_cast<double>(cardinality) * static_cast<double>(cardinality));
}

void check_cluster(const AffinityGraph& g, const std::vector<int>& cluster) {
  if (cluster.empty()) throw Error("path integral: empty cluster");
  for (int node : cluster)
    if (node < 0 || node >= g.n) throw Error("path integral: node index out of range");
}

// Pair key used for deterministic tie-breaking: the pair of smallest member
// indices, ordered.
std::pair<int, int> pair_key(const std::vector<int>& a, const std::vector<int>& b) {
  return {std::min(a.front(), b.front()), std::max(a.front(), b.front())};
}

Clustering finalize(int n, std::vector<std::vector<int>> clusters,
                    std::vector<MergeRecord> merge_log) {
  Clustering result;
  result.assignment.assign(n, -1);
  result.merge_log = std::move(merge_log);
  // Canonical ids in order of first appearance by node index.
  std::sort(clusters.begin(), clusters.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  result.n_clusters = static_cast<int>(clusters.size());
  for (int id = 0; id < result.n_clusters; ++id)
    for (int node : clusters[id]) result.assignment[node] = id;
  return result;
}

}  // namespace

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

AffinityGraph build_graph(const Matrix& scores, int knn, double sigma,
                          ScoreWeight score_to_weight) {
  const int n = static_cast<int>(scores.rows());
  if (scores.cols() != n) throw Error("build_graph: score matrix must be square");
  if (n < 2) throw Error("build_graph: need at least 2 nodes");
  if (knn < 1 || knn >= n) throw Error("build_graph: require 1 <= K < N");
  if (!(sigma > 0.0) || !(sigma < 1.0)) throw Error("build_graph: require 0 < sigma < 1");

  AffinityGraph g;
  g.n = n;
  g.knn = knn;
  g.sigma = sigma;

  Matrix dense(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) {
        dense(i, j) = 0.0;
        continue;
      }
      dense(i, j) = score_to_weight == ScoreWeight::Sigmoid
                        ? sigmoid(scores(i, j))
                        : std::max((1.0 + scores(i, j)) / 2.0, kCosineFloor);
    }
  }

  g.weights = Matrix::Zero(n, n);
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      if (dense(i, a) != dense(i, b)) return dense(i, a) > dense(i, b);
      return a < b;
    });
    for (int r = 0; r < knn; ++r) g.weights(i, order[r]) = dense(i, order[r]);
  }

  g.transition = g.weights;
  for (int i = 0; i < n; ++i) {
    const double row_sum = g.transition.row(i).sum();
    if (!(row_sum > 0.0)) throw Error("build_graph: all-zero row after sparsification");
    g.transition.row(i) /= row_sum;
  }
  return g;
}

double path_integral(const AffinityGraph& g, const std::vector<int>& cluster) {
  check_cluster(g, cluster);
  std::vector<int> nodes = cluster;
  std::sort(nodes.begin(), nodes.end());
  std::vector<bool> selector(nodes.size(), true);
  return resolvent_quadratic_form(g, nodes, selector, static_cast<int>(nodes.size()));
}

double conditional_path_integral(const AffinityGraph& g, const std::vector<int>& cluster_a,
                                 const std::vector<int>& cluster_b) {
  check_cluster(g, cluster_a);
  check_cluster(g, cluster_b);
  std::vector<int> a = cluster_a;
  std::vector<int> b = cluster_b;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::vector<int> nodes = sorted_union(a, b);
  if (nodes.size() != a.size() + b.size() ||
      std::adjacent_find(nodes.begin(), nodes.end()) != nodes.end())
    throw Error("conditional_path_integral: clusters overlap");
  std::vector<bool> selector(nodes.size());
  for (size_t r = 0; r < nodes.size(); ++r)
    selector[r] = std::binary_search(a.begin(), a.end(), nodes[r]);
  return resolvent_quadratic_form(g, nodes, selector, static_cast<int>(a.size()));
}

double pic_affinity(const AffinityGraph& g, const std::vector<int>& cluster_a,
                    const std::vector<int>& cluster_b) {
  return conditional_path_integral(g, cluster_a, cluster_b) - path_integral(g, cluster_a) +
         conditional_path_integral(g, cluster_b, cluster_a) - path_integral(g, cluster_b);
}

std::vector<std::vector<int>> nearest_neighbor_components(const AffinityGraph& g) {
  DisjointSets sets(g.n);
  for (int i = 0; i < g.n; ++i) {
    int best = -1;
    double best_weight = -1.0;
    for (int j = 0; j < g.n; ++j) {
      if (j == i) continue;
      if (g.weights(i, j) > best_weight) {
        best_weight = g.weights(i, j);
        best = j;
      }
    }
    sets.unite(i, best);
  }
  std::vector<std::vector<int>> clusters;
  std::vector<int> root_to_cluster(g.n, -1);
  for (int i = 0; i < g.n; ++i) {
    const int root = sets.find(i);
    if (root_to_cluster[root] < 0) {
      root_to_cluster[root] = static_cast<int>(clusters.size());
      clusters.emplace_back();
    }
    clusters[root_to_cluster[root]].push_back(i);
  }
  return clusters;
}

Clustering pic_cluster(const AffinityGraph& g, const StopRule& stop) {
  std::vector<std::vector<int>> clusters = nearest_neighbor_components(g);
  int n_clusters = static_cast<int>(clusters.size());

  int target = 1;
  if (stop.kind == StopRule::Kind::TargetCount) {
    if (stop.target < 1) throw Error("pic_cluster: target count must be >= 1");
    target = stop.target;
  } else if (stop.kind == StopRule::Kind::EigenThreshold) {
    target = estimate_num_clusters(g, stop.threshold);
  } else {
    throw Error("pic_cluster: unsupported stop rule");
  }

  if (target > n_clusters) {
    std::cerr << "warning: pic_cluster: target " << target << " exceeds initial cluster count "
              << n_clusters << "; returning initial clustering\n";
    return finalize(g.n, std::move(clusters), {});
  }

  std::vector<bool> alive(clusters.size(), true);
  // Cached pairwise affinities; entries involving a merged cluster are
  // recomputed, everything else is reused untouched.
  std::vector<std::vector<double>> affinity(clusters.size());
  for (size_t a = 0; a < clusters.size(); ++a) {
    affinity[a].resize(a);
    for (size_t b = 0; b < a; ++b)
      affinity[a][b] = pic_affinity(g, clusters[a], clusters[b]);
  }
  auto cached = [&](size_t a, size_t b) -> double& {
    return a > b ? affinity[a][b] : affinity[b][a];
  };

  std::vector<MergeRecord> merge_log;
  while (n_clusters > target) {
    double best = -std::numeric_limits<double>::infinity();
    std::pair<int, int> best_key{std::numeric_limits<int>::max(),
                                 std::numeric_limits<int>::max()};
    size_t best_a = 0, best_b = 0;
    for (size_t a = 0; a < clusters.size(); ++a) {
      if (!alive[a]) continue;
      for (size_t b = 0; b < a; ++b) {
        if (!alive[b]) continue;
        const double value = affinity[a][b];
        const auto key = pair_key(clusters[a], clusters[b]);
        if (value > best || (value == best && key < best_key)) {
          best = value;
          best_key = key;
          best_a = a;
          best_b = b;
        }
      }
    }

    // Keep the side with the smaller leading member as the surviving cluster.
    size_t keep = best_a, drop = best_b;
    if (clusters[drop].front() < clusters[keep].front()) std::swap(keep, drop);
    merge_log.push_back({best_key.first, best_key.second, best});
    clusters[keep] = sorted_union(clusters[keep], clusters[drop]);
    alive[drop] = false;
    --n_clusters;

    for (size_t c = 0; c < clusters.size(); ++c)
      if (alive[c] && c != keep) cached(keep, c) = pic_affinity(g, clusters[keep], clusters[c]);
  }

  std::vector<std::vector<int>> survivors;
  for (size_t c = 0; c < clusters.size(); ++c)
    if (alive[c]) survivors.push_back(std::move(clusters[c]));
  return finalize(g.n, std::move(survivors), std::move(merge_log));
}

Clustering ahc_cluster(const Matrix& scores, const StopRule& stop) {
  const int n = static_cast<int>(scores.rows());
  if (scores.cols() != n) throw Error("ahc_cluster: score matrix must be square");
  if (n < 1) throw Error("ahc_cluster: empty input");
  if (stop.kind == StopRule::Kind::EigenThreshold)
    throw Error("ahc_cluster: eigen stop rule not supported");
  const bool by_count = stop.kind == StopRule::Kind::TargetCount;
  const int target = by_count ? std::max(stop.target, 1) : 1;

  std::vector<std::vector<int>> clusters(n);
  for (int i = 0; i < n; ++i) clusters[i] = {i};
  std::vector<bool> alive(n, true);
  // Average linkage maintained with the Lance-Williams update.
  std::vector<std::vector<double>> link(n);
  for (int a = 0; a < n; ++a) {
    link[a].resize(a);
    for (int b = 0; b < a; ++b) link[a][b] = scores(a, b);
  }
  auto linkage = [&](size_t a, size_t b) -> double& {
    return a > b ? link[a][b] : link[b][a];
  };

  std::vector<MergeRecord> merge_log;
  int n_clusters = n;
  while (n_clusters > (by_count ? target : 1)) {
    double best = -std::numeric_limits<double>::infinity();
    std::pair<int, int> best_key{std::numeric_limits<int>::max(),
                                 std::numeric_limits<int>::max()};
    size_t best_a = 0, best_b = 0;
    for (size_t a = 0; a < clusters.size(); ++a) {
      if (!alive[a]) continue;
      for (size_t b = 0; b < a; ++b) {
        if (!alive[b]) continue;
        const double value = link[a][b];
        const auto key = pair_key(clusters[a], clusters[b]);
        if (value > best || (value == best && key < best_key)) {
          best = value;
          best_key = key;
          best_a = a;
          best_b = b;
        }
      }
    }
    if (!by_count && best < stop.threshold) break;

    size_t keep = best_a, drop = best_b;
    if (clusters[drop].front() < clusters[keep].front()) std::swap(keep, drop);
    const double size_keep = static_cast<double>(clusters[keep].size());
    const double size_drop = static_cast<double>(clusters[drop].size());
    for (size_t c = 0; c < clusters.size(); ++c) {
      if (!alive[c] || c == keep || c == drop) continue;
      linkage(keep, c) = (size_keep * linkage(keep, c) + size_drop * linkage(drop, c)) /
                         (size_keep + size_drop);
    }
    merge_log.push_back({best_key.first, best_key.second, best});
    clusters[keep] = sorted_union(clusters[keep], clusters[drop]);
    alive[drop] = false;
    --n_clusters;
  }

  std::vector<std::vector<int>> survivors;
  for (size_t c = 0; c < clusters.size(); ++c)
    if (alive[c]) survivors.push_back(std::move(clusters[c]));
  return finalize(n, std::move(survivors), std::move(merge_log));
}

int estimate_num_clusters(const AffinityGraph& g, double th) {
  if (!(th > 0.0) || !(th < 1.0)) throw Error("estimate_num_clusters: require 0 < th < 1");
  Eigen::EigenSolver<Matrix> solver(g.transition, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) throw Error("estimate_num_clusters: eigensolver failed");
  int count = 0;
  for (int i = 0; i < g.n; ++i)
    if (std::abs(solver.eigenvalues()(i)) > th) ++count;
  return std::max(count, 1);
}

Matrix temporal_continuity(const Matrix& scores, double beta, int n_b) {
  if (!(beta > 0.0) || !(beta < 1.0))
    throw Error("temporal_continuity: require 0 < beta < 1");
  if (n_b < 1) throw Error("temporal_continuity: require n_b >= 1");
  if (!scores.allFinite()) throw Error("temporal_continuity: non-finite scores");
  const int n = static_cast<int>(scores.rows());
  Matrix out(n, scores.cols());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < scores.cols(); ++j)
      out(i, j) = scores(i, j) * std::pow(beta, std::min(n_b, std::abs(i - j)));
  return out;
}

}  // namespace picdiar
