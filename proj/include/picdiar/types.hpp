// picdiar/types.hpp
//
// Core data model shared by all modules: segment timelines, per-recording
// embedding matrices and speaker segmentations.

#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace picdiar {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Half-open time span [onset, onset + duration).
struct SegmentSpan {
  double onset = 0.0;
  double duration = 0.0;

  double offset() const { return onset + duration; }
};

// One recording's segment timeline plus an N x D embedding matrix,
// row i holding the embedding of segments[i].
struct RecordingEmbeddings {
  std::string recording_id;
  int dim = 0;
  std::vector<SegmentSpan> segments;
  Matrix matrix;

  int size() const { return static_cast<int>(segments.size()); }
};

struct Turn {
  SegmentSpan span;
  std::string speaker;
};

// Reference or hypothesis diarization for one recording.
struct SpeakerSegmentation {
  std::string recording_id;
  std::vector<Turn> turns;
};

// Sorts segments ascending by onset (ties by duration ascending) and
// permutes matrix rows to match. Throws on shape mismatch or non-finite
// entries.
void validate_and_sort(RecordingEmbeddings& rec);

}  // namespace picdiar
