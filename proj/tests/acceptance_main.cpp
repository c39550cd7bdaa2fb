// tests/acceptance_main.cpp
//
// End-to-end acceptance suite. Each criterion prints one PASS/FAIL line;
// the process exits nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <climits>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>
#include <unistd.h>
#include <vector>

#include "picdiar/derscore.hpp"
#include "picdiar/io.hpp"
#include "picdiar/pipeline.hpp"
#include "picdiar/rng.hpp"
#include "picdiar/synth.hpp"

using namespace picdiar;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int index, const std::string& name, bool ok, double seconds) {
  std::printf("[%s] criterion %2d: %-58s (%.2fs)\n", ok ? "PASS" : "FAIL", index,
              name.c_str(), seconds);
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

template <typename Fn>
void run(int index, const std::string& name, Fn&& fn) {
  const auto start = std::chrono::steady_clock::now();
  bool ok = false;
  try {
    ok = fn();
  } catch (const std::exception& e) {
    std::printf("       exception: %s\n", e.what());
    ok = false;
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  report(index, name, ok, seconds);
}

// ---- shared helpers -------------------------------------------------------

double oracle_llr(const Vector& psi, const Vector& ui, const Vector& uj) {
  constexpr double kLog2Pi = 1.8378770664093453;
  double log_same = 0.0, log_diff = 0.0;
  for (int k = 0; k < psi.size(); ++k) {
    const double a = psi(k) + 1.0;
    const double c = psi(k);
    const double det = a * a - c * c;
    const double q =
        (a * ui(k) * ui(k) - 2.0 * c * ui(k) * uj(k) + a * uj(k) * uj(k)) / det;
    log_same += -kLog2Pi - 0.5 * std::log(det) - 0.5 * q;
    log_diff += -0.5 * kLog2Pi - 0.5 * std::log(a) - ui(k) * ui(k) / (2.0 * a);
    log_diff += -0.5 * kLog2Pi - 0.5 * std::log(a) - uj(k) * uj(k) / (2.0 * a);
  }
  return log_same - log_diff;
}

double series_conditional(const AffinityGraph& g, const std::vector<int>& a,
                          const std::vector<int>& b, int terms) {
  std::vector<int> nodes(a.begin(), a.end());
  nodes.insert(nodes.end(), b.begin(), b.end());
  std::sort(nodes.begin(), nodes.end());
  const int m = static_cast<int>(nodes.size());
  Matrix sub(m, m);
  for (int r = 0; r < m; ++r)
    for (int c = 0; c < m; ++c) sub(r, c) = g.transition(nodes[r], nodes[c]);
  Vector selector = Vector::Zero(m);
  for (int r = 0; r < m; ++r)
    if (std::find(a.begin(), a.end(), nodes[r]) != a.end()) selector(r) = 1.0;
  Vector power = selector;
  double total = selector.dot(power);
  double discount = 1.0;
  for (int k = 1; k <= terms; ++k) {
    power = sub * power;
    discount *= g.sigma;
    total += discount * selector.dot(power);
  }
  return total / (selector.sum() * selector.sum());
}

Matrix random_scores(int n, Rng& rng, double spread = 2.0) {
  Matrix s(n, n);
  for (int i = 0; i < n; ++i) {
    s(i, i) = spread;
    for (int j = i + 1; j < n; ++j) {
      s(i, j) = rng.normal() * spread;
      s(j, i) = s(i, j);
    }
  }
  return s;
}

SpeakerSegmentation seg(const std::string& id,
                        std::vector<std::tuple<double, double, std::string>> turns) {
  SpeakerSegmentation s;
  s.recording_id = id;
  for (auto& [onset, dur, spk] : turns) s.turns.push_back({{onset, dur}, spk});
  return s;
}

// Synthetic corpus shared by criteria 5 and 6: one ground-truth model, one
// dev set for whitening + PLDA, ten seeded evaluation recordings.
struct Corpus {
  PldaModel truth;
  WhiteningTransform wt;
  PldaModel plda_global;
  std::vector<SynthRecording> recordings;
};

Corpus build_corpus(double psi_value, int n_recordings) {
  const uint64_t master = 20240901;
  Corpus corpus;
  const int dim = 16;
  corpus.truth =
      make_random_plda(dim, Vector::Constant(dim, psi_value), derive_seed(master, 1));
  auto [dev, dev_labels] = sample_generative(corpus.truth, 40, 15, derive_seed(master, 2));
  corpus.wt = fit_whitening(dev);
  corpus.plda_global =
      fit_plda(length_normalize_rows(apply_whitening(corpus.wt, dev)), dev_labels);

  SynthRecordingConfig cfg;
  cfg.n_speakers = 4;
  cfg.n_segments = 200;
  cfg.window = 1.5;
  cfg.shift = 0.75;
  cfg.p_stay = 0.9;
  for (int i = 0; i < n_recordings; ++i)
    corpus.recordings.push_back(synth_recording(
        corpus.truth, "e" + std::to_string(i), cfg, derive_seed(master, 100 + i)));
  return corpus;
}

PipelineConfig corpus_config() {
  PipelineConfig config;
  config.pca = PcaMode::fixed(30);  // capped to the data dimension
  config.graph.knn = 30;
  config.graph.sigma = 0.1;
  config.num_speakers = 4;
  config.initial_threshold = 0.7;
  config.train.initial_cluster_threshold = 0.7;
  config.train.learning_rate = 2e-3;
  config.train.epochs_per_iteration = 40;
  config.train.outer_iterations = 3;
  config.der_collar = 0.25;
  config.der_score_overlap = false;
  return config;
}

// Mean sigmoid score over true same-speaker pairs minus true
// different-speaker pairs.
double contrast(const Matrix& scores, const std::vector<int>& labels) {
  double same = 0.0, diff = 0.0;
  long n_same = 0, n_diff = 0;
  const int n = static_cast<int>(scores.rows());
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      if (labels[i] == labels[j]) {
        same += sigmoid(scores(i, j));
        ++n_same;
      } else {
        diff += sigmoid(scores(i, j));
        ++n_diff;
      }
    }
  return same / n_same - diff / n_diff;
}

bool run_cli(const std::string& args) {
  const std::string command = std::string(PICDIAR_CLI_PATH) + " " + args + " 2>/dev/null";
  return std::system(command.c_str()) == 0;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

// ---- criteria -------------------------------------------------------------

bool criterion_plda_oracle() {
  Rng rng(11);
  for (int trial = 0; trial < 1000; ++trial) {
    const int d = 1 + static_cast<int>(rng.below(8));
    Vector psi(d), ui(d), uj(d);
    for (int k = 0; k < d; ++k) {
      psi(k) = rng.uniform() * 25.0;
      ui(k) = rng.normal() * 3.0;
      uj(k) = rng.normal() * 3.0;
    }
    if (std::abs(plda_llr(psi, ui, uj) - oracle_llr(psi, ui, uj)) >= 1e-8) return false;
  }
  return true;
}

bool criterion_path_integral_oracle() {
  Rng rng(22);
  int instances = 0;
  while (instances < 100) {
    for (double sigma : {0.1, 0.5, 0.9}) {
      const int n = 3 + static_cast<int>(rng.below(6));  // N <= 8
      Matrix s = random_scores(n, rng);
      const int k = 1 + static_cast<int>(rng.below(n - 1));
      AffinityGraph g = build_graph(s, k, sigma, ScoreWeight::Sigmoid);

      std::vector<int> all(n);
      std::iota(all.begin(), all.end(), 0);
      for (size_t i = all.size() - 1; i > 0; --i)
        std::swap(all[i], all[rng.below(i + 1)]);
      const int size_a = 1 + static_cast<int>(rng.below(n - 1));
      const int size_b = 1 + static_cast<int>(rng.below(n - size_a));
      std::vector<int> a(all.begin(), all.begin() + size_a);
      std::vector<int> b(all.begin() + size_a, all.begin() + size_a + size_b);

      if (std::abs(path_integral(g, a) - series_conditional(g, a, {}, 200)) >= 1e-6)
        return false;
      if (std::abs(conditional_path_integral(g, a, b) - series_conditional(g, a, b, 200)) >=
          1e-6)
        return false;
      ++instances;
    }
  }
  return true;
}

bool criterion_greedy_merge_oracle() {
  Rng rng(33);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 4 + static_cast<int>(rng.below(5));  // N <= 8
    Matrix s = random_scores(n, rng);
    const int k = 1 + static_cast<int>(rng.below(n - 1));
    AffinityGraph g = build_graph(s, k, 0.35, ScoreWeight::Sigmoid);
    Clustering c = pic_cluster(g, StopRule::count(1));

    auto clusters = nearest_neighbor_components(g);
    for (const MergeRecord& record : c.merge_log) {
      double best = -std::numeric_limits<double>::infinity();
      std::pair<int, int> best_key{INT_MAX, INT_MAX};
      size_t best_a = 0, best_b = 0;
      for (size_t a = 0; a < clusters.size(); ++a)
        for (size_t b = 0; b < a; ++b) {
          const double value = pic_affinity(g, clusters[a], clusters[b]);
          std::pair<int, int> key{std::min(clusters[a][0], clusters[b][0]),
                                  std::max(clusters[a][0], clusters[b][0])};
          if (value > best || (value == best && key < best_key)) {
            best = value;
            best_key = key;
            best_a = a;
            best_b = b;
          }
        }
      if (record.cluster_a != best_key.first || record.cluster_b != best_key.second)
        return false;
      if (record.affinity != best) return false;

      std::vector<int> merged;
      std::merge(clusters[best_a].begin(), clusters[best_a].end(), clusters[best_b].begin(),
                 clusters[best_b].end(), std::back_inserter(merged));
      clusters.erase(clusters.begin() + static_cast<long>(std::max(best_a, best_b)));
      clusters.erase(clusters.begin() + static_cast<long>(std::min(best_a, best_b)));
      clusters.push_back(std::move(merged));
    }
  }
  return true;
}

bool criterion_gradient_checks() {
  Rng rng(44);
  const int n = 10, dim = 8, reduced = 4;
  for (int toy = 0; toy < 20; ++toy) {
    MetricNet net;
    net.q = Matrix::Zero(dim, dim);
    net.q_bias = Vector::Zero(dim);
    net.gamma = Matrix::Zero(reduced, dim);
    net.v = Matrix::Zero(reduced, reduced);
    net.bias = Vector::Zero(reduced);
    net.psi = Vector::Zero(reduced);
    for (int i = 0; i < dim; ++i) {
      net.q_bias(i) = 0.1 * rng.normal();
      for (int j = 0; j < dim; ++j) net.q(i, j) = rng.normal() * 0.5;
    }
    for (int i = 0; i < reduced; ++i) {
      net.bias(i) = 0.1 * rng.normal();
      net.psi(i) = 0.5 + rng.uniform() * 3.0;
      for (int j = 0; j < dim; ++j) net.gamma(i, j) = rng.normal() * 0.5;
      for (int j = 0; j < reduced; ++j) net.v(i, j) = rng.normal() * 0.5;
    }
    net.length_norm = toy % 2 == 0;

    Matrix x(n, dim);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < dim; ++j) x(i, j) = rng.normal();
    Clustering pseudo;
    pseudo.assignment.resize(n);
    for (int i = 0; i < n; ++i) pseudo.assignment[i] = static_cast<int>(rng.below(3));
    pseudo.n_clusters = 3;
    TargetAdjacency tgt = build_target_adjacency(pseudo);

    NetGradients grads;
    bce_loss(net, x, tgt, &grads);

    const double h = 1e-5;
    auto entry_ok = [&](double* param, double analytic) {
      const double saved = *param;
      *param = saved + h;
      const double up = bce_loss(net, x, tgt);
      *param = saved - h;
      const double down = bce_loss(net, x, tgt);
      *param = saved;
      const double numeric = (up - down) / (2.0 * h);
      return std::abs(numeric - analytic) <=
             1e-4 * std::max(std::abs(numeric), std::abs(analytic)) + 1e-6;
    };

    for (int i = 0; i < dim; ++i) {
      if (!entry_ok(&net.q_bias(i), grads.q_bias(i))) return false;
      for (int j = 0; j < dim; ++j)
        if (!entry_ok(&net.q(i, j), grads.q(i, j))) return false;
    }
    for (int i = 0; i < reduced; ++i) {
      if (!entry_ok(&net.bias(i), grads.bias(i))) return false;
      if (!entry_ok(&net.psi(i), grads.psi(i))) return false;
      for (int j = 0; j < dim; ++j)
        if (!entry_ok(&net.gamma(i, j), grads.gamma(i, j))) return false;
      for (int j = 0; j < reduced; ++j)
        if (!entry_ok(&net.v(i, j), grads.v(i, j))) return false;
    }
  }
  return true;
}

bool criterion_init_equivalence(const Corpus& corpus, const PipelineConfig& config) {
  for (const SynthRecording& synth : corpus.recordings) {
    auto [reduced, pca] = preprocess_recording(synth.rec, corpus.wt, config.pca);
    const PldaModel plda = transform_plda(corpus.plda_global, pca);

    Matrix baseline = score_matrix(plda, project_rows(plda, reduced.matrix));

    SelfsupOptions opts;
    opts.train = config.train;
    opts.train.outer_iterations = 0;
    opts.graph = config.graph;
    opts.stop = StopRule::count(config.num_speakers);
    SelfsupResult result = selfsup_pipeline(synth.rec, corpus.wt, pca, plda, opts);
    Matrix neural = neural_score_matrix(result.net, synth.rec.matrix);

    for (int i = 0; i < baseline.rows(); ++i)
      for (int j = 0; j < baseline.cols(); ++j)
        if (std::abs(sigmoid(neural(i, j)) - sigmoid(baseline(i, j))) >= 1e-6) return false;

    const int knn = std::min(config.graph.knn, reduced.size() - 1);
    AffinityGraph g =
        build_graph(baseline, knn, config.graph.sigma, config.graph.score_to_weight);
    Clustering baseline_clusters = pic_cluster(g, StopRule::count(config.num_speakers));
    if (result.clustering.assignment != baseline_clusters.assignment) return false;
  }
  return true;
}

bool criterion_synthetic_end_to_end(const Corpus& corpus, const PipelineConfig& config) {
  int improved_or_equal = 0;
  for (const SynthRecording& synth : corpus.recordings) {
    PipelineConfig baseline_cfg = config;
    baseline_cfg.mode = PipelineConfig::Mode::Baseline;
    RecordingResult baseline =
        run_recording(synth.rec, corpus.wt, corpus.plda_global, baseline_cfg,
                      &synth.reference);
    if (!baseline.der || !baseline.der->der) return false;
    const double baseline_der = *baseline.der->der;
    if (!(baseline_der < 0.20)) {
      std::printf("       baseline DER %.3f on %s\n", baseline_der,
                  synth.rec.recording_id.c_str());
      return false;
    }

    PipelineConfig selfsup_cfg = config;
    selfsup_cfg.mode = PipelineConfig::Mode::Selfsup;
    RecordingResult selfsup = run_recording(synth.rec, corpus.wt, corpus.plda_global,
                                            selfsup_cfg, &synth.reference);
    const double selfsup_der = *selfsup.der->der;
    if (selfsup_der <= baseline_der + 1e-12) ++improved_or_equal;

    // Score contrast before and after training.
    auto [reduced, pca] = preprocess_recording(synth.rec, corpus.wt, config.pca);
    const PldaModel plda = transform_plda(corpus.plda_global, pca);
    MetricNet init_net = init_from_plda(corpus.wt, pca, plda);
    SelfsupOptions opts;
    opts.train = config.train;
    opts.graph = config.graph;
    opts.stop = StopRule::count(config.num_speakers);
    SelfsupResult trained = selfsup_pipeline(synth.rec, corpus.wt, pca, plda, opts);

    const double contrast_init =
        contrast(neural_score_matrix(init_net, synth.rec.matrix), synth.true_labels);
    const double contrast_after =
        contrast(neural_score_matrix(trained.net, synth.rec.matrix), synth.true_labels);
    if (!(contrast_after >= contrast_init - 1e-12)) {
      std::printf("       contrast regressed on %s: %.4f -> %.4f\n",
                  synth.rec.recording_id.c_str(), contrast_init, contrast_after);
      return false;
    }
  }
  if (improved_or_equal < 8) {
    std::printf("       selfsup <= baseline on only %d of 10 seeds\n", improved_or_equal);
    return false;
  }
  return true;
}

bool criterion_eigen_count() {
  Rng rng(55);
  int correct = 0;
  const int instances = 100;
  for (int trial = 0; trial < instances; ++trial) {
    const int c = 2 + trial % 4;  // 2..5 ground-truth blocks
    const int per = 8 + static_cast<int>(rng.below(5));
    const int n = c * per;
    Matrix w = Matrix::Zero(n, n);
    for (int b = 0; b < c; ++b)
      for (int i = 0; i < per; ++i)
        for (int j = 0; j < per; ++j)
          if (i != j) w(b * per + i, b * per + j) = rng.uniform(0.5, 1.0);
    // Sparse weak cross-block links, weight <= 0.05.
    for (int i = 0; i < n; ++i)
      for (int e = 0; e < 2; ++e) {
        const int j = static_cast<int>(rng.below(n));
        if (j / per != i / per) w(i, j) = rng.uniform() * 0.05;
      }
    AffinityGraph g;
    g.n = n;
    g.weights = w;
    g.transition = w;
    for (int i = 0; i < n; ++i) g.transition.row(i) /= g.transition.row(i).sum();
    g.knn = n - 1;
    g.sigma = 0.5;
    if (estimate_num_clusters(g, 0.7) == c) ++correct;
  }
  if (correct < 95) {
    std::printf("       eigen count correct on %d/100\n", correct);
    return false;
  }
  return true;
}

bool criterion_der_scorer() {
  // Five fixtures, mirroring both evaluation protocols.
  {
    auto ref = seg("r", {{0.0, 4.0, "A"}, {4.5, 3.5, "B"}});
    DerReport r = compute_der(ref, ref, 0.25, false);
    if (std::abs(r.scored_speech - 6.5) > 1e-12 || !r.der || *r.der != 0.0) return false;
  }
  {
    auto ref = seg("r", {{0.0, 4.0, "A"}, {4.0, 4.0, "B"}, {8.0, 2.0, "C"}});
    auto hyp = seg("r", {{0.0, 4.0, "C"}, {4.0, 4.0, "A"}, {8.0, 2.0, "B"}});
    DerReport r = compute_der(ref, hyp, 0.25, false);
    if (!r.der || *r.der != 0.0) return false;
  }
  {
    auto ref = seg("r", {{0.0, 10.0, "A"}});
    DerReport r = compute_der(ref, seg("r", {}), 0.0, true);
    if (std::abs(r.missed_speech - 10.0) > 1e-12 || std::abs(*r.der - 1.0) > 1e-12)
      return false;
  }
  {
    auto ref = seg("r", {{0.0, 6.0, "A"}, {4.0, 5.0, "B"}});
    auto hyp = seg("r", {{0.0, 10.0, "X"}});
    DerReport r = compute_der(ref, hyp, 0.0, true);
    if (std::abs(r.scored_speech - 11.0) > 1e-12) return false;
    if (std::abs(r.missed_speech - 2.0) > 1e-12) return false;
    if (std::abs(r.speaker_confusion - 3.0) > 1e-12) return false;
    if (std::abs(r.false_alarm - 1.0) > 1e-12) return false;
    if (std::abs(*r.der - 6.0 / 11.0) > 1e-12) return false;
  }
  {
    auto ref = seg("r", {{0.0, 6.0, "A"}, {4.0, 6.0, "B"}});
    auto hyp = seg("r", {{0.0, 5.0, "C"}, {5.0, 4.0, "D"}});
    DerReport r = compute_der(ref, hyp, 0.25, false);
    if (std::abs(r.scored_speech - 7.0) > 1e-12) return false;
    if (std::abs(r.missed_speech - 0.75) > 1e-12) return false;
    if (std::abs(*r.der - 0.75 / 7.0) > 1e-12) return false;
  }

  // Relabeling invariance over 100 random permutations.
  Rng rng(66);
  auto ref = seg("r", {{0.0, 3.0, "A"},
                       {2.5, 2.0, "B"},
                       {5.0, 2.0, "C"},
                       {6.5, 2.5, "A"},
                       {9.0, 1.0, "D"}});
  auto hyp = seg("r", {{0.0, 2.8, "h0"},
                       {2.8, 2.4, "h1"},
                       {5.2, 1.6, "h2"},
                       {6.8, 2.2, "h0"},
                       {9.0, 1.2, "h3"}});
  DerReport base = compute_der(ref, hyp, 0.0, true);
  std::vector<std::string> names = {"h0", "h1", "h2", "h3"};
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::string> perm = names;
    for (size_t i = perm.size() - 1; i > 0; --i)
      std::swap(perm[i], perm[rng.below(i + 1)]);
    SpeakerSegmentation relabeled = hyp;
    for (auto& turn : relabeled.turns)
      turn.speaker = perm[static_cast<size_t>(turn.speaker[1] - '0')];
    DerReport r = compute_der(ref, relabeled, 0.0, true);
    if (std::abs(*r.der - *base.der) > 1e-12) return false;
  }
  return true;
}

bool criterion_temporal_continuity() {
  Matrix s = Matrix::Constant(12, 12, 0.8);
  if (std::abs(temporal_continuity(s, 0.9, 5)(0, 2) - 0.648) > 1e-12) return false;
  if (std::abs(temporal_continuity(s, 0.9, 5)(3, 3) - 0.8) > 1e-12) return false;
  if (std::abs(temporal_continuity(s, 0.9, 3)(0, 10) - 0.5832) > 1e-12) return false;

  Rng rng(77);
  Matrix mixed(10, 10);
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j) mixed(i, j) = rng.normal();
  Matrix nearly = temporal_continuity(mixed, 1.0 - 1e-12, 4);
  return (nearly - mixed).cwiseAbs().maxCoeff() < 1e-9;
}

bool criterion_determinism() {
  const fs::path root =
      fs::temp_directory_path() / ("picdiar_accept_" + std::to_string(::getpid()));
  fs::remove_all(root);
  fs::create_directories(root);
  const std::string data = (root / "data").string();

  if (!run_cli("synth --out-dir " + data +
               " --recordings 3 --speakers 3 --segments 80 --dim 12 --psi 4 --seed 7"))
    return false;
  if (!run_cli("preprocess --emb-dir " + data + " --out " + (root / "whiten.txt").string()))
    return false;
  if (!run_cli("plda-train --emb-dir " + data + " --ref-dir " + data + " --whiten " +
               (root / "whiten.txt").string() + " --out " + (root / "plda.txt").string()))
    return false;

  const std::string common =
      " --whiten " + (root / "whiten.txt").string() + " --plda " +
      (root / "plda.txt").string() + " --emb-dir " + data + " --ref-dir " + data +
      " --mode selfsup --stop count:3 --set knn=15 --set sigma=0.1 --set pca=fixed:8"
      " --set epochs=5 --set outer_iterations=2 --set seed=5 --set workers=2";
  if (!run_cli("pipeline" + common + " --out-dir " + (root / "out1").string()))
    return false;
  if (!run_cli("pipeline" + common + " --out-dir " + (root / "out2").string()))
    return false;

  for (const char* name : {"rec000.rttm", "rec001.rttm", "rec002.rttm", "der_report.txt"}) {
    const std::string a = slurp(root / "out1" / name);
    const std::string b = slurp(root / "out2" / name);
    if (a.empty() || a != b) {
      std::printf("       %s differs between runs\n", name);
      return false;
    }
  }
  fs::remove_all(root);
  return true;
}

}  // namespace

int main() {
  std::printf("acceptance suite\n");

  run(1, "PLDA score closed form vs density oracle", criterion_plda_oracle);
  run(2, "path integrals vs truncated power series", criterion_path_integral_oracle);
  run(3, "greedy PIC merges vs brute-force argmax", criterion_greedy_merge_oracle);
  run(4, "BCE gradients vs central finite differences", criterion_gradient_checks);

  Corpus corpus = build_corpus(3.0, 10);
  PipelineConfig config = corpus_config();
  run(5, "initialization equivalence at zero outer iterations",
      [&] { return criterion_init_equivalence(corpus, config); });
  run(6, "synthetic end-to-end: baseline, selfsup, contrast",
      [&] { return criterion_synthetic_end_to_end(corpus, config); });
  run(7, "eigenvalue cluster-count on block graphs", criterion_eigen_count);
  run(8, "DER fixtures and relabeling invariance", criterion_der_scorer);
  run(9, "temporal continuity fixtures and beta->1 identity",
      criterion_temporal_continuity);
  run(10, "byte-identical pipeline outputs across reruns", criterion_determinism);

  if (g_failures > 0) {
    std::printf("%d criterion(s) failed\n", g_failures);
    return 1;
  }
  std::printf("all criteria passed\n");
  return 0;
}
