// picdiar/io.cpp

#include "picdiar/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

namespace picdiar {

namespace {

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> fields;
  std::istringstream iss(line);
  std::string tok;
  while (iss >> tok) fields.push_back(tok);
  return fields;
}

double parse_double(const std::string& tok, const std::string& path, int lineno) {
  try {
    size_t pos = 0;
    double v = std::stod(tok, &pos);
    if (pos != tok.size()) throw Error("");
    return v;
  } catch (const std::exception&) {
    throw Error(path + ":" + std::to_string(lineno) + ": not a number: '" + tok + "'");
  }
}

std::string format_g9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::string format_time(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

}  // namespace

void validate_and_sort(RecordingEmbeddings& rec) {
  const int n = rec.size();
  if (rec.matrix.rows() != n)
    throw Error("recording '" + rec.recording_id + "': " + std::to_string(n) +
                " segments but " + std::to_string(rec.matrix.rows()) + " matrix rows");
  if (rec.matrix.cols() != rec.dim)
    throw Error("recording '" + rec.recording_id + "': dim mismatch");
  if (!rec.matrix.allFinite())
    throw Error("recording '" + rec.recording_id + "': non-finite embedding entry");

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (rec.segments[a].onset != rec.segments[b].onset)
      return rec.segments[a].onset < rec.segments[b].onset;
    return rec.segments[a].duration < rec.segments[b].duration;
  });
  bool sorted = std::is_sorted(order.begin(), order.end());
  if (sorted) return;

  std::vector<SegmentSpan> segs(n);
  Matrix mat(n, rec.dim);
  for (int i = 0; i < n; ++i) {
    segs[i] = rec.segments[order[i]];
    mat.row(i) = rec.matrix.row(order[i]);
  }
  rec.segments = std::move(segs);
  rec.matrix = std::move(mat);
}

RecordingEmbeddings read_embeddings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open embedding file: " + path);

  RecordingEmbeddings rec;
  rec.recording_id = recording_id_from_path(path);

  std::vector<SegmentSpan> segments;
  std::vector<std::vector<double>> rows;
  int dim = -1;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    auto fields = split_ws(line);
    if (fields.empty()) continue;
    if (fields.size() < 3)
      throw Error(path + ":" + std::to_string(lineno) +
                  ": expected '<onset> <duration> <v1> ...', got " +
                  std::to_string(fields.size()) + " fields");
    const int row_dim = static_cast<int>(fields.size()) - 2;
    if (dim < 0) {
      dim = row_dim;
    } else if (row_dim != dim) {
      throw Error(path + ":" + std::to_string(lineno) + ": dimension mismatch: got " +
                  std::to_string(row_dim) + ", expected " + std::to_string(dim));
    }
    SegmentSpan span;
    span.onset = parse_double(fields[0], path, lineno);
    span.duration = parse_double(fields[1], path, lineno);
    if (span.onset < 0.0)
      throw Error(path + ":" + std::to_string(lineno) + ": negative onset");
    if (!(span.duration > 0.0))
      throw Error(path + ":" + std::to_string(lineno) + ": duration must be positive");
    std::vector<double> row(dim);
    for (int k = 0; k < dim; ++k) {
      row[k] = parse_double(fields[k + 2], path, lineno);
      if (!std::isfinite(row[k]))
        throw Error(path + ":" + std::to_string(lineno) + ": non-finite value");
    }
    segments.push_back(span);
    rows.push_back(std::move(row));
  }
  if (segments.empty()) throw Error(path + ": no segments (empty recording rejected)");

  rec.dim = dim;
  rec.segments = std::move(segments);
  rec.matrix.resize(static_cast<int>(rows.size()), dim);
  for (size_t i = 0; i < rows.size(); ++i)
    for (int k = 0; k < dim; ++k) rec.matrix(static_cast<int>(i), k) = rows[i][k];

  validate_and_sort(rec);
  return rec;
}

void write_embeddings(const RecordingEmbeddings& rec, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write embedding file: " + path);
  for (int i = 0; i < rec.size(); ++i) {
    out << format_g9(rec.segments[i].onset) << ' ' << format_g9(rec.segments[i].duration);
    for (int k = 0; k < rec.dim; ++k) out << ' ' << format_g9(rec.matrix(i, k));
    out << '\n';
  }
  if (!out) throw Error("write failed: " + path);
}

SpeakerSegmentation read_rttm(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open RTTM file: " + path);

  SpeakerSegmentation seg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    auto fields = split_ws(line);
    if (fields.empty()) continue;
    if (fields[0] != "SPEAKER") {
      std::cerr << "warning: " << path << ":" << lineno << ": skipping record type '"
                << fields[0] << "'\n";
      continue;
    }
    if (fields.size() != 9 && fields.size() != 10)
      throw Error(path + ":" + std::to_string(lineno) + ": malformed RTTM line (" +
                  std::to_string(fields.size()) + " fields)");
    const std::string& rec_id = fields[1];
    if (seg.recording_id.empty()) seg.recording_id = rec_id;
    else if (seg.recording_id != rec_id)
      throw Error(path + ":" + std::to_string(lineno) +
                  ": multiple recording ids in one RTTM file ('" + seg.recording_id +
                  "' vs '" + rec_id + "')");
    Turn turn;
    turn.span.onset = parse_double(fields[3], path, lineno);
    turn.span.duration = parse_double(fields[4], path, lineno);
    turn.speaker = fields[7];
    if (turn.speaker.empty() || turn.speaker == "<NA>")
      throw Error(path + ":" + std::to_string(lineno) + ": missing speaker label");
    seg.turns.push_back(std::move(turn));
  }
  std::stable_sort(seg.turns.begin(), seg.turns.end(), [](const Turn& a, const Turn& b) {
    return a.span.onset < b.span.onset;
  });
  return seg;
}

std::string format_rttm(const SpeakerSegmentation& seg) {
  std::ostringstream out;
  for (const Turn& turn : seg.turns) {
    out << "SPEAKER " << seg.recording_id << " 1 " << format_time(turn.span.onset) << ' '
        << format_time(turn.span.duration) << " <NA> <NA> " << turn.speaker
        << " <NA> <NA>\n";
  }
  return out.str();
}

void write_rttm(const SpeakerSegmentation& seg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write RTTM file: " + path);
  out << format_rttm(seg);
  if (!out) throw Error("write failed: " + path);
}

std::vector<SegmentSpan> uniform_segments(double total_duration, double window,
                                          double shift) {
  if (!(window > 0.0) || !(shift > 0.0))
    throw Error("uniform_segments: window and shift must be positive");
  if (total_duration < window)
    throw Error("uniform_segments: total duration shorter than one window");

  constexpr double kEps = 1e-9;
  std::vector<SegmentSpan> spans;
  for (int k = 0;; ++k) {
    const double onset = k * shift;
    if (onset >= total_duration - kEps) break;
    const double duration = std::min(window, total_duration - onset);
    const bool truncated = duration < window - kEps;
    if (truncated && duration < shift - kEps) break;
    spans.push_back({onset, duration});
    if (onset + duration >= total_duration - kEps) break;
  }
  return spans;
}

std::string recording_id_from_path(const std::string& path) {
  return std::filesystem::path(path).stem().string();
}

}  // namespace picdiar
