// picdiar/synth.cpp

#include "picdiar/synth.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <map>

#include "picdiar/derscore.hpp"
#include "picdiar/io.hpp"
#include "picdiar/rng.hpp"

namespace picdiar {

PldaModel make_random_plda(int dim, const Vector& psi, uint64_t seed) {
  if (psi.size() != dim) throw Error("make_random_plda: psi size must equal dim");
  Rng rng(seed);
  Matrix gaussian(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) gaussian(i, j) = rng.normal();
  Eigen::HouseholderQR<Matrix> qr(gaussian);
  Matrix rotation = qr.householderQ();
  Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < dim; ++j)  // make the factorization unique
    if (r(j, j) < 0.0) rotation.col(j) = -rotation.col(j);

  // Mixing A = rotation * diag(scales); the diagonalizer is its inverse.
  Vector scales(dim);
  for (int j = 0; j < dim; ++j) scales(j) = rng.uniform(0.8, 1.25);
  Matrix mixing = rotation * scales.asDiagonal();

  PldaModel model;
  model.dim = dim;
  model.mean.resize(dim);
  for (int j = 0; j < dim; ++j) model.mean(j) = rng.normal();
  model.diagonalizer = mixing.partialPivLu().inverse();
  model.bias = model.diagonalizer * model.mean;
  model.psi = psi;
  return model;
}

SynthRecording synth_recording(const PldaModel& truth, const std::string& recording_id,
                               const SynthRecordingConfig& cfg, uint64_t seed) {
  if (cfg.n_speakers < 1 || cfg.n_segments < 1)
    throw Error("synth_recording: counts must be >= 1");
  if (!(cfg.p_stay > 0.0) || cfg.p_stay > 1.0)
    throw Error("synth_recording: p_stay must be in (0, 1]");

  const double total = cfg.window + (cfg.n_segments - 1) * cfg.shift;
  std::vector<SegmentSpan> spans = uniform_segments(total, cfg.window, cfg.shift);
  if (static_cast<int>(spans.size()) != cfg.n_segments)
    throw Error("synth_recording: unexpected span count");

  Rng rng(seed);
  const int d = truth.dim;
  const Matrix mixing = truth.inverse_diagonalizer();
  const Vector psi_sqrt = truth.psi.cwiseSqrt();

  // Latent speaker identities, drawn up front in speaker order.
  Matrix latents(cfg.n_speakers, d);
  for (int s = 0; s < cfg.n_speakers; ++s)
    for (int k = 0; k < d; ++k) latents(s, k) = psi_sqrt(k) * rng.normal();

  // Sticky Markov chain over speakers.
  std::vector<int> labels(cfg.n_segments);
  labels[0] = static_cast<int>(rng.below(cfg.n_speakers));
  for (int t = 1; t < cfg.n_segments; ++t) {
    if (cfg.n_speakers == 1 || rng.uniform() < cfg.p_stay) {
      labels[t] = labels[t - 1];
    } else {
      int pick = static_cast<int>(rng.below(cfg.n_speakers - 1));
      if (pick >= labels[t - 1]) ++pick;
      labels[t] = pick;
    }
  }

  SynthRecording out;
  out.rec.recording_id = recording_id;
  out.rec.dim = d;
  out.rec.segments = spans;
  out.rec.matrix.resize(cfg.n_segments, d);
  for (int t = 0; t < cfg.n_segments; ++t) {
    Vector u(d);
    for (int k = 0; k < d; ++k) u(k) = latents(labels[t], k) + rng.normal();
    out.rec.matrix.row(t) = (truth.mean + mixing * u).transpose();
  }
  out.true_labels = labels;

  // Dense cluster ids for the reference turns (speakers may go unused).
  std::map<int, int> dense;
  Clustering ref_clusters;
  ref_clusters.assignment.resize(cfg.n_segments);
  for (int t = 0; t < cfg.n_segments; ++t) {
    auto [it, inserted] = dense.try_emplace(labels[t], static_cast<int>(dense.size()));
    ref_clusters.assignment[t] = it->second;
  }
  ref_clusters.n_clusters = static_cast<int>(dense.size());
  out.reference = segments_to_segmentation(ref_clusters, spans, recording_id);
  return out;
}

}  // namespace picdiar
