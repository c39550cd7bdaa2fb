// picdiar/graphclust.hpp
//
// Graph construction from a pairwise score matrix, path integral clustering,
// an average-linkage AHC baseline, eigenvalue-based cluster-count estimation
// and temporal continuity reweighting.

#pragma once

#include <string>
#include <vector>

#include "picdiar/types.hpp"

namespace picdiar {

enum class ScoreWeight { Sigmoid, ShiftedCosine };

// Directed K-NN graph. W keeps the K largest weights per row (self-weight
// zeroed first, ties to the smaller column index); P is W with each row
// divided by its sum.
struct AffinityGraph {
  int n = 0;
  Matrix weights;     // W
  Matrix transition;  // P, row-stochastic
  int knn = 0;
  double sigma = 0.0;
};

AffinityGraph build_graph(const Matrix& scores, int knn, double sigma,
                          ScoreWeight score_to_weight);

// Sum of sigma-discounted path weights starting and ending inside the
// cluster, normalized by |C|^2: (1/|C|^2) 1^T (I - sigma P_C)^{-1} 1.
double path_integral(const AffinityGraph& g, const std::vector<int>& cluster);

// Same quantity evaluated on the union's sub-matrix with the selector
// restricted to cluster_a; cluster_a and cluster_b must be disjoint.
double conditional_path_integral(const AffinityGraph& g, const std::vector<int>& cluster_a,
                                 const std::vector<int>& cluster_b);

// Incremental path integral of each cluster inside the union, summed.
double pic_affinity(const AffinityGraph& g, const std::vector<int>& cluster_a,
                    const std::vector<int>& cluster_b);

struct MergeRecord {
  int cluster_a = 0;  // smallest member index of each side at merge time
  int cluster_b = 0;
  double affinity = 0.0;
};

struct Clustering {
  std::vector<int> assignment;  // cluster id per node, ids 0..n_clusters-1
  int n_clusters = 0;
  std::vector<MergeRecord> merge_log;
};

struct StopRule {
  enum class Kind { TargetCount, EigenThreshold, ScoreThreshold };
  Kind kind = Kind::TargetCount;
  int target = 1;
  double threshold = 0.0;

  static StopRule count(int n) { return {Kind::TargetCount, n, 0.0}; }
  static StopRule eigen(double th) { return {Kind::EigenThreshold, 1, th}; }
  static StopRule score(double th) { return {Kind::ScoreThreshold, 1, th}; }
};

// Initial clusters for PIC: weakly connected components of the directed
// best-neighbor graph (each node points at its highest-weight neighbor).
std::vector<std::vector<int>> nearest_neighbor_components(const AffinityGraph& g);

// Greedy agglomeration by maximum pic_affinity down to the target count
// (TargetCount) or the eigenvalue-based estimate (EigenThreshold). Ties are
// broken toward the pair with the lexicographically smallest pair of
// smallest-member indices.
Clustering pic_cluster(const AffinityGraph& g, const StopRule& stop);

// Average-linkage agglomerative clustering on raw scores. ScoreThreshold
// merges while the best linkage is >= threshold; TargetCount merges down to
// the requested count.
Clustering ahc_cluster(const Matrix& scores, const StopRule& stop);

// Number of eigenvalue moduli of P strictly above th, floored at 1.
int estimate_num_clusters(const AffinityGraph& g, double th);

// s'(i,j) = s(i,j) * beta^{min(n_b, |i-j|)}.
Matrix temporal_continuity(const Matrix& scores, double beta, int n_b);

double sigmoid(double x);

}  // namespace picdiar
