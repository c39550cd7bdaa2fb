// picdiar/selfsup.hpp
//
// Joint representation and metric learning. A three-layer affine network
// maps raw embeddings to the PLDA-projected space; pairwise scores use the
// PLDA log-likelihood ratio with a learnable diagonal between-class
// variance. Training minimizes binary cross entropy against a target
// adjacency built from the current clustering's pseudo-labels, and the outer
// loop alternates training with reclustering.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "picdiar/graphclust.hpp"
#include "picdiar/plda.hpp"
#include "picdiar/preprocess.hpp"
#include "picdiar/types.hpp"

namespace picdiar {

// Layers: h = Q x + q_bias; g = h/||h|| (fixed, when length_norm);
// z = gamma g; u = V z - bias. Scores read psi.
struct MetricNet {
  Matrix q;        // D x D
  Vector q_bias;   // D
  Matrix gamma;    // d x D
  Matrix v;        // d x d
  Vector bias;     // d
  Vector psi;      // d, kept >= 0
  bool length_norm = true;

  int in_dim() const { return static_cast<int>(q.cols()); }
  int out_dim() const { return static_cast<int>(v.rows()); }
};

// Copies the baseline chain into the network so that, at initialization,
// forward_embed + neural_plda_score reproduce whitening -> length norm ->
// recording PCA -> PLDA projection -> scoring. The PCA and whitening means
// are absorbed into the layer biases.
MetricNet init_from_plda(const WhiteningTransform& wt, const PcaTransform& pca,
                         const PldaModel& plda, bool length_norm = true);

Matrix forward_embed(const MetricNet& net, const Matrix& inputs);

double neural_plda_score(const MetricNet& net, const Vector& ui, const Vector& uj);

// forward_embed + symmetric pairwise scoring in one call.
Matrix neural_score_matrix(const MetricNet& net, const Matrix& inputs);

struct TargetAdjacency {
  int n = 0;
  Eigen::Matrix<uint8_t, Eigen::Dynamic, Eigen::Dynamic> target;  // 1 same, 0 different
  Eigen::Matrix<uint8_t, Eigen::Dynamic, Eigen::Dynamic> mask;    // pair scored in the loss

  int masked_pair_count() const;
};

// target[i][j] = 1 iff same pseudo-cluster; diagonal excluded by mask. With
// balance_pairs the majority class is subsampled to the minority count,
// deterministically under `seed`.
TargetAdjacency build_target_adjacency(const Clustering& pseudo, bool balance_pairs = false,
                                       uint64_t seed = 0);

struct NetGradients {
  Matrix q;
  Vector q_bias;
  Matrix gamma;
  Matrix v;
  Vector bias;
  Vector psi;
};

// Mean BCE over masked pairs of sigmoid(neural score) against the target;
// analytic gradients for every learnable tensor when `grads` is non-null.
double bce_loss(const MetricNet& net, const Matrix& inputs, const TargetAdjacency& tgt,
                NetGradients* grads = nullptr);

struct TrainingConfig {
  double learning_rate = 2e-3;
  int epochs_per_iteration = 40;
  int outer_iterations = 3;
  double initial_cluster_threshold = 0.7;  // eigen or AHC threshold for N^0
  bool balance_pairs = false;
  uint64_t seed = 0;
};

// Full-batch gradient descent with a fixed step; psi re-clamped at 0 after
// every step. Returns the loss measured at the start of each epoch.
std::vector<double> train_iteration(MetricNet& net, const Matrix& inputs,
                                    const TargetAdjacency& tgt, const TrainingConfig& cfg);

enum class Clusterer { Pic, Ahc };
enum class InitialClusterMode { EigenThreshold, AhcThreshold };

struct GraphParams {
  int knn = 30;
  double sigma = 0.1;
  ScoreWeight score_to_weight = ScoreWeight::Sigmoid;
};

struct TemporalParams {
  bool enabled = false;
  double beta = 0.95;
  int n_b = 2;
};

struct SelfsupOptions {
  TrainingConfig train;
  GraphParams graph;
  TemporalParams temporal;
  Clusterer clusterer = Clusterer::Pic;
  InitialClusterMode initial_mode = InitialClusterMode::EigenThreshold;
  StopRule stop = StopRule::eigen(0.7);
  std::ostream* diagnostics_out = nullptr;  // `iter epoch loss n_clusters` lines
};

struct IterationDiag {
  std::vector<double> loss_trace;
  int n_clusters = 0;
};

struct SelfsupResult {
  Clustering clustering;
  MetricNet net;
  std::vector<IterationDiag> diagnostics;
};

// The outer self-supervision loop: initialize from the baseline models,
// conservatively over-cluster to N^0, then alternate target building,
// training and reclustering until the pseudo-labels stabilize or the
// iteration budget runs out. The final clustering applies the stop rule and
// optional temporal continuity. `rec` carries the raw D-dimensional inputs.
SelfsupResult selfsup_pipeline(const RecordingEmbeddings& rec, const WhiteningTransform& wt,
                               const PcaTransform& pca, const PldaModel& plda,
                               const SelfsupOptions& opts);

// Checkpoint: `METRICNET <D> <d>` then Q, Q-bias, gamma, V, bias, psi.
void save_metricnet(const MetricNet& net, const std::string& path);
MetricNet load_metricnet(const std::string& path);

}  // namespace picdiar
