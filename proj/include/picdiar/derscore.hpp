// picdiar/derscore.hpp
//
// Diarization error rate with exact optimal speaker mapping, collar handling
// around reference boundaries, and optional exclusion of reference overlap
// regions.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "picdiar/graphclust.hpp"
#include "picdiar/types.hpp"

namespace picdiar {

struct DerReport {
  double missed_speech = 0.0;
  double false_alarm = 0.0;
  double speaker_confusion = 0.0;
  double scored_speech = 0.0;
  std::optional<double> der;  // absent when scored_speech == 0

  double error_total() const { return missed_speech + false_alarm + speaker_confusion; }
};

// Scores `hyp` against `ref`. Time within +/- collar of every reference turn
// boundary is excluded; when score_overlap is false, regions where two or
// more reference speakers are simultaneously active are excluded as well.
// The reference-to-hypothesis speaker mapping is the exact assignment
// maximizing overlapped duration inside the scored regions. Concurrent
// speakers count individually toward miss/false-alarm/confusion.
DerReport compute_der(const SpeakerSegmentation& ref, const SpeakerSegmentation& hyp,
                      double collar, bool score_overlap);

// Converts a clustering over analysis windows into speaker turns. Adjacent
// or overlapping same-speaker windows merge; where consecutive overlapping
// windows disagree the boundary sits at the midpoint of their overlap.
SpeakerSegmentation segments_to_segmentation(const Clustering& assignment,
                                             const std::vector<SegmentSpan>& spans,
                                             const std::string& recording_id);

}  // namespace picdiar
