// picdiar/derscore.cpp

#include "picdiar/derscore.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <vector>

namespace picdiar {

namespace {

// Exact solver for the assignment problem (minimization, square matrix,
// O(n^3) potentials method). Returns row -> column.
std::vector<int> hungarian_min(const Matrix& cost) {
  const int n = static_cast<int>(cost.rows());
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const int i0 = p[j0];
      int j1 = 0;
      double delta = kInf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= n; ++j)
    if (p[j] > 0) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

struct Timeline {
  std::vector<std::string> speakers;              // index -> label
  std::map<std::string, int> speaker_index;
  std::vector<std::vector<SegmentSpan>> turns;    // per speaker

  void add(const Turn& turn) {
    auto [it, inserted] = speaker_index.try_emplace(turn.speaker,
                                                    static_cast<int>(speakers.size()));
    if (inserted) {
      speakers.push_back(turn.speaker);
      turns.emplace_back();
    }
    turns[it->second].push_back(turn.span);
  }

  bool active(int speaker, double t) const {
    for (const SegmentSpan& span : turns[speaker])
      if (span.onset <= t && t < span.offset()) return true;
    return false;
  }
};

}  // namespace

DerReport compute_der(const SpeakerSegmentation& ref, const SpeakerSegmentation& hyp,
                      double collar, bool score_overlap) {
  if (ref.recording_id != hyp.recording_id)
    throw Error("compute_der: recording ids differ ('" + ref.recording_id + "' vs '" +
                hyp.recording_id + "')");
  if (collar < 0.0) throw Error("compute_der: collar must be nonnegative");

  Timeline ref_tl, hyp_tl;
  for (const Turn& t : ref.turns) ref_tl.add(t);
  for (const Turn& t : hyp.turns) hyp_tl.add(t);
  const int n_ref_spk = static_cast<int>(ref_tl.speakers.size());
  const int n_hyp_spk = static_cast<int>(hyp_tl.speakers.size());

  std::vector<double> bounds;
  std::vector<std::pair<double, double>> no_score;
  for (const Turn& t : ref.turns) {
    bounds.push_back(t.span.onset);
    bounds.push_back(t.span.offset());
    if (collar > 0.0) {
      no_score.emplace_back(t.span.onset - collar, t.span.onset + collar);
      no_score.emplace_back(t.span.offset() - collar, t.span.offset() + collar);
    }
  }
  for (const Turn& t : hyp.turns) {
    bounds.push_back(t.span.onset);
    bounds.push_back(t.span.offset());
  }
  for (const auto& [lo, hi] : no_score) {
    bounds.push_back(lo);
    bounds.push_back(hi);
  }
  std::sort(bounds.begin(), bounds.end());
  bounds.erase(std::unique(bounds.begin(), bounds.end()), bounds.end());

  struct Piece {
    double length;
    std::vector<int> ref_active;
    std::vector<int> hyp_active;
  };
  std::vector<Piece> pieces;
  Matrix overlap = Matrix::Zero(std::max(n_ref_spk, 1), std::max(n_hyp_spk, 1));

  for (size_t b = 0; b + 1 < bounds.size(); ++b) {
    const double t0 = bounds[b];
    const double t1 = bounds[b + 1];
    const double mid = 0.5 * (t0 + t1);
    const double len = t1 - t0;
    if (!(len > 0.0)) continue;

    bool excluded = false;
    for (const auto& [lo, hi] : no_score)
      if (lo <= mid && mid < hi) {
        excluded = true;
        break;
      }
    if (excluded) continue;

    Piece piece;
    piece.length = len;
    for (int r = 0; r < n_ref_spk; ++r)
      if (ref_tl.active(r, mid)) piece.ref_active.push_back(r);
    if (!score_overlap && piece.ref_active.size() >= 2) continue;
    for (int h = 0; h < n_hyp_spk; ++h)
      if (hyp_tl.active(h, mid)) piece.hyp_active.push_back(h);
    if (piece.ref_active.empty() && piece.hyp_active.empty()) continue;

    for (int r : piece.ref_active)
      for (int h : piece.hyp_active) overlap(r, h) += len;
    pieces.push_back(std::move(piece));
  }

  // Optimal one-to-one speaker mapping by total overlapped duration.
  std::vector<int> ref_to_hyp(n_ref_spk, -1);
  if (n_ref_spk > 0 && n_hyp_spk > 0) {
    const int m = std::max(n_ref_spk, n_hyp_spk);
    Matrix cost = Matrix::Zero(m, m);
    cost.block(0, 0, n_ref_spk, n_hyp_spk) = -overlap;
    std::vector<int> match = hungarian_min(cost);
    for (int r = 0; r < n_ref_spk; ++r)
      if (match[r] < n_hyp_spk) ref_to_hyp[r] = match[r];
  }

  DerReport report;
  for (const Piece& piece : pieces) {
    const int n_ref = static_cast<int>(piece.ref_active.size());
    const int n_hyp = static_cast<int>(piece.hyp_active.size());
    int n_correct = 0;
    for (int r : piece.ref_active) {
      const int mapped = ref_to_hyp[r];
      if (mapped >= 0 &&
          std::find(piece.hyp_active.begin(), piece.hyp_active.end(), mapped) !=
              piece.hyp_active.end())
        ++n_correct;
    }
    report.scored_speech += n_ref * piece.length;
    report.missed_speech += std::max(0, n_ref - n_hyp) * piece.length;
    report.false_alarm += std::max(0, n_hyp - n_ref) * piece.length;
    report.speaker_confusion += (std::min(n_ref, n_hyp) - n_correct) * piece.length;
  }
  if (report.scored_speech > 0.0)
    report.der = report.error_total() / report.scored_speech;
  return report;
}

SpeakerSegmentation segments_to_segmentation(const Clustering& assignment,
                                             const std::vector<SegmentSpan>& spans,
                                             const std::string& recording_id) {
  if (assignment.assignment.size() != spans.size())
    throw Error("segments_to_segmentation: assignment length does not match span count");

  SpeakerSegmentation seg;
  seg.recording_id = recording_id;
  if (spans.empty()) return seg;

  auto label = [&](int i) { return "spk" + std::to_string(assignment.assignment[i]); };

  std::string cur_label = label(0);
  double cur_start = spans[0].onset;
  double cur_end = spans[0].offset();
  for (size_t i = 1; i < spans.size(); ++i) {
    const std::string lbl = label(static_cast<int>(i));
    const double onset = spans[i].onset;
    const double offset = spans[i].offset();
    if (lbl == cur_label && onset <= cur_end) {
      cur_end = std::max(cur_end, offset);
      continue;
    }
    double boundary = cur_end;
    double next_start = onset;
    if (lbl != cur_label && onset < cur_end) {
      boundary = 0.5 * (onset + cur_end);  // midpoint of the overlap
      next_start = boundary;
    }
    if (boundary > cur_start)
      seg.turns.push_back({{cur_start, boundary - cur_start}, cur_label});
    cur_label = lbl;
    cur_start = next_start;
    cur_end = std::max(offset, next_start);
  }
  if (cur_end > cur_start)
    seg.turns.push_back({{cur_start, cur_end - cur_start}, cur_label});
  return seg;
}

}  // namespace picdiar
