// picdiar/selfsup.cpp

#include "picdiar/selfsup.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>

#include "picdiar/rng.hpp"

namespace picdiar {

namespace {

struct ForwardCache {
  Matrix pre_norm;    // h rows   (N x D)
  Matrix normalized;  // g rows   (N x D)
  Matrix hidden;      // z rows   (N x d)
  Matrix projected;   // u rows   (N x d)
};

ForwardCache forward_pass(const MetricNet& net, const Matrix& inputs) {
  if (inputs.cols() != net.in_dim()) throw Error("forward_embed: dimension mismatch");
  ForwardCache cache;
  cache.pre_norm = (inputs * net.q.transpose()).rowwise() + net.q_bias.transpose();
  cache.normalized =
      net.length_norm ? length_normalize_rows(cache.pre_norm) : cache.pre_norm;
  cache.hidden = cache.normalized * net.gamma.transpose();
  cache.projected = (cache.hidden * net.v.transpose()).rowwise() - net.bias.transpose();
  return cache;
}

double stable_softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

// d/du_i and d/dpsi of the per-dimension LLR term; see plda_llr for the
// forward expression.
struct LlrPartials {
  double d_ui;
  double d_uj;
  double d_psi;
};

LlrPartials llr_partials(double psi, double ui, double uj) {
  const double a = psi + 1.0;
  const double det2 = 2.0 * psi + 1.0;
  const double sq = ui * ui + uj * uj;
  const double cross = ui * uj;
  LlrPartials out;
  out.d_ui = -(a * ui - psi * uj) / det2 + ui / a;
  out.d_uj = -(a * uj - psi * ui) / det2 + uj / a;
  out.d_psi = -1.0 / det2 + 1.0 / a - (sq - 2.0 * cross) / (2.0 * det2) +
              (a * sq - 2.0 * psi * cross) / (det2 * det2) - sq / (2.0 * a * a);
  return out;
}

}  // namespace

MetricNet init_from_plda(const WhiteningTransform& wt, const PcaTransform& pca,
                         const PldaModel& plda, bool length_norm) {
  if (pca.in_dim() != wt.dim())
    throw Error("init_from_plda: whitening dim " + std::to_string(wt.dim()) +
                " does not match PCA input dim " + std::to_string(pca.in_dim()));
  if (plda.dim != pca.out_dim())
    throw Error("init_from_plda: PLDA dim " + std::to_string(plda.dim) +
                " does not match PCA output dim " + std::to_string(pca.out_dim()));
  MetricNet net;
  net.q = wt.transform;
  net.q_bias = -(wt.transform * wt.mean);
  net.gamma = pca.basis;
  net.v = plda.diagonalizer;
  // The PCA mean subtraction folds into the last-layer bias.
  net.bias = plda.bias + plda.diagonalizer * (pca.basis * pca.mean);
  net.psi = plda.psi;
  net.length_norm = length_norm;
  return net;
}

Matrix forward_embed(const MetricNet& net, const Matrix& inputs) {
  return forward_pass(net, inputs).projected;
}

double neural_plda_score(const MetricNet& net, const Vector& ui, const Vector& uj) {
  return plda_llr(net.psi, ui, uj);
}

Matrix neural_score_matrix(const MetricNet& net, const Matrix& inputs) {
  const Matrix projected = forward_embed(net, inputs);
  const int n = static_cast<int>(projected.rows());
  Matrix scores(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      const double s = plda_llr(net.psi, projected.row(i), projected.row(j));
      scores(i, j) = s;
      scores(j, i) = s;
    }
  return scores;
}

int TargetAdjacency::masked_pair_count() const {
  int count = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (mask(i, j)) ++count;
  return count;
}

TargetAdjacency build_target_adjacency(const Clustering& pseudo, bool balance_pairs,
                                       uint64_t seed) {
  const int n = static_cast<int>(pseudo.assignment.size());
  TargetAdjacency tgt;
  tgt.n = n;
  tgt.target.setZero(n, n);
  tgt.mask.setZero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      tgt.target(i, j) = pseudo.assignment[i] == pseudo.assignment[j] ? 1 : 0;
      tgt.mask(i, j) = 1;
    }
  if (!balance_pairs) return tgt;

  std::vector<std::pair<int, int>> same, diff;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      (tgt.target(i, j) ? same : diff).emplace_back(i, j);
  auto& majority = same.size() > diff.size() ? same : diff;
  const size_t keep = std::min(same.size(), diff.size());
  if (majority.size() > keep) {
    Rng rng(derive_seed(seed, 0x62616Cu));  // independent balancing stream
    for (size_t i = majority.size() - 1; i > 0; --i)
      std::swap(majority[i], majority[rng.below(i + 1)]);
    for (size_t i = keep; i < majority.size(); ++i) {
      tgt.mask(majority[i].first, majority[i].second) = 0;
      tgt.mask(majority[i].second, majority[i].first) = 0;
    }
  }
  return tgt;
}

double bce_loss(const MetricNet& net, const Matrix& inputs, const TargetAdjacency& tgt,
                NetGradients* grads) {
  const int n = static_cast<int>(inputs.rows());
  if (tgt.n != n) throw Error("bce_loss: adjacency size does not match input rows");
  const int pairs = tgt.masked_pair_count();
  if (pairs == 0) throw Error("bce_loss: empty pair mask");

  const ForwardCache cache = forward_pass(net, inputs);
  const Matrix& projected = cache.projected;
  const int d = net.out_dim();

  double loss = 0.0;
  Matrix d_projected = Matrix::Zero(n, d);
  Vector d_psi = Vector::Zero(d);
  const double inv_pairs = 1.0 / static_cast<double>(pairs);

  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (!tgt.mask(i, j)) continue;
      const double score = plda_llr(net.psi, projected.row(i), projected.row(j));
      const double t = static_cast<double>(tgt.target(i, j));
      loss += (stable_softplus(score) - t * score) * inv_pairs;
      if (!grads) continue;
      const double d_score = (sigmoid(score) - t) * inv_pairs;
      for (int k = 0; k < d; ++k) {
        const LlrPartials partial = llr_partials(net.psi(k), projected(i, k), projected(j, k));
        d_projected(i, k) += d_score * partial.d_ui;
        d_projected(j, k) += d_score * partial.d_uj;
        d_psi(k) += d_score * partial.d_psi;
      }
    }
  }
  if (!std::isfinite(loss)) throw Error("bce_loss: non-finite loss");
  if (!grads) return loss;

  // Backward through u = V z - b.
  grads->v = d_projected.transpose() * cache.hidden;
  grads->bias = -d_projected.colwise().sum().transpose();
  Matrix d_hidden = d_projected * net.v;
  // Through z = gamma g.
  grads->gamma = d_hidden.transpose() * cache.normalized;
  Matrix d_normalized = d_hidden * net.gamma;
  // Through the fixed length normalization g = h/||h||.
  Matrix d_pre(n, net.in_dim());
  if (net.length_norm) {
    for (int i = 0; i < n; ++i) {
      const double norm = cache.pre_norm.row(i).norm();
      if (norm == 0.0) {
        d_pre.row(i).setZero();
        continue;
      }
      const double radial = cache.normalized.row(i).dot(d_normalized.row(i));
      d_pre.row(i) = (d_normalized.row(i) - radial * cache.normalized.row(i)) / norm;
    }
  } else {
    d_pre = d_normalized;
  }
  // Through h = Q x + q_bias.
  grads->q = d_pre.transpose() * inputs;
  grads->q_bias = d_pre.colwise().sum().transpose();
  grads->psi = d_psi;
  return loss;
}

std::vector<double> train_iteration(MetricNet& net, const Matrix& inputs,
                                    const TargetAdjacency& tgt, const TrainingConfig& cfg) {
  if (!(cfg.learning_rate >= 0.0)) throw Error("train_iteration: negative learning rate");
  std::vector<double> trace;
  trace.reserve(cfg.epochs_per_iteration);
  for (int epoch = 0; epoch < cfg.epochs_per_iteration; ++epoch) {
    NetGradients grads;
    const double loss = bce_loss(net, inputs, tgt, &grads);
    trace.push_back(loss);
    net.q -= cfg.learning_rate * grads.q;
    net.q_bias -= cfg.learning_rate * grads.q_bias;
    net.gamma -= cfg.learning_rate * grads.gamma;
    net.v -= cfg.learning_rate * grads.v;
    net.bias -= cfg.learning_rate * grads.bias;
    net.psi = (net.psi - cfg.learning_rate * grads.psi).cwiseMax(0.0);
    if (!net.q.allFinite() || !net.gamma.allFinite() || !net.v.allFinite() ||
        !net.psi.allFinite())
      throw Error("train_iteration: parameters diverged (non-finite after update)");
  }
  return trace;
}

namespace {

Clustering cluster_scores(const Matrix& scores, const SelfsupOptions& opts,
                          const StopRule& stop) {
  if (opts.clusterer == Clusterer::Ahc) return ahc_cluster(scores, stop);
  const int n = static_cast<int>(scores.rows());
  const int knn = std::min(opts.graph.knn, n - 1);
  AffinityGraph g = build_graph(scores, knn, opts.graph.sigma, opts.graph.score_to_weight);
  return pic_cluster(g, stop);
}

int initial_cluster_count(const Matrix& scores, const SelfsupOptions& opts) {
  if (opts.initial_mode == InitialClusterMode::AhcThreshold)
    return ahc_cluster(scores, StopRule::score(opts.train.initial_cluster_threshold))
        .n_clusters;
  const int n = static_cast<int>(scores.rows());
  const int knn = std::min(opts.graph.knn, n - 1);
  AffinityGraph g = build_graph(scores, knn, opts.graph.sigma, opts.graph.score_to_weight);
  return estimate_num_clusters(g, opts.train.initial_cluster_threshold);
}

}  // namespace

SelfsupResult selfsup_pipeline(const RecordingEmbeddings& rec, const WhiteningTransform& wt,
                               const PcaTransform& pca, const PldaModel& plda,
                               const SelfsupOptions& opts) {
  SelfsupResult result;
  result.net = init_from_plda(wt, pca, plda);
  const Matrix& inputs = rec.matrix;

  if (opts.train.outer_iterations > 0) {
    Matrix scores = neural_score_matrix(result.net, inputs);
    int over_count = initial_cluster_count(scores, opts);
    if (opts.stop.kind == StopRule::Kind::TargetCount && over_count < opts.stop.target) {
      std::cerr << "warning: " << rec.recording_id << ": initial cluster count " << over_count
                << " below target " << opts.stop.target << "; using the target\n";
      over_count = opts.stop.target;
    }
    Clustering pseudo = cluster_scores(scores, opts, StopRule::count(over_count));

    for (int iter = 0; iter < opts.train.outer_iterations; ++iter) {
      TargetAdjacency tgt = build_target_adjacency(pseudo, opts.train.balance_pairs,
                                                   derive_seed(opts.train.seed, iter));
      IterationDiag diag;
      diag.loss_trace = train_iteration(result.net, inputs, tgt, opts.train);
      scores = neural_score_matrix(result.net, inputs);
      Clustering next = cluster_scores(scores, opts, StopRule::count(over_count));
      diag.n_clusters = next.n_clusters;
      if (opts.diagnostics_out) {
        for (size_t epoch = 0; epoch < diag.loss_trace.size(); ++epoch)
          (*opts.diagnostics_out) << iter << ' ' << epoch << ' ' << diag.loss_trace[epoch]
                                  << ' ' << next.n_clusters << '\n';
      }
      result.diagnostics.push_back(std::move(diag));
      const bool unchanged = next.assignment == pseudo.assignment;
      pseudo = std::move(next);
      if (unchanged) break;
    }
  }

  Matrix final_scores = neural_score_matrix(result.net, inputs);
  if (opts.temporal.enabled)
    final_scores = temporal_continuity(final_scores, opts.temporal.beta, opts.temporal.n_b);
  result.clustering = cluster_scores(final_scores, opts, opts.stop);
  return result;
}

void save_metricnet(const MetricNet& net, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write: " + path);
  char buf[40];
  auto row = [&](const auto& v) {
    for (int j = 0; j < v.size(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.9g", v(j));
      out << (j ? " " : "") << buf;
    }
    out << '\n';
  };
  out << "METRICNET " << net.in_dim() << ' ' << net.out_dim() << '\n';
  for (int i = 0; i < net.q.rows(); ++i) row(net.q.row(i));
  row(net.q_bias);
  for (int i = 0; i < net.gamma.rows(); ++i) row(net.gamma.row(i));
  for (int i = 0; i < net.v.rows(); ++i) row(net.v.row(i));
  row(net.bias);
  row(net.psi);
  if (!out) throw Error("write failed: " + path);
}

MetricNet load_metricnet(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open: " + path);
  std::string tag;
  int big_d = 0, d = 0;
  if (!(in >> tag >> big_d >> d) || tag != "METRICNET" || big_d < 1 || d < 1)
    throw Error(path + ": not a METRICNET file");
  MetricNet net;
  auto read_into = [&](auto& m) {
    for (int i = 0; i < m.rows(); ++i)
      for (int j = 0; j < m.cols(); ++j)
        if (!(in >> m(i, j))) throw Error(path + ": truncated");
  };
  net.q.resize(big_d, big_d);
  net.q_bias.resize(big_d);
  net.gamma.resize(d, big_d);
  net.v.resize(d, d);
  net.bias.resize(d);
  net.psi.resize(d);
  read_into(net.q);
  read_into(net.q_bias);
  read_into(net.gamma);
  read_into(net.v);
  read_into(net.bias);
  read_into(net.psi);
  return net;
}

}  // namespace picdiar
