// picdiar/io.hpp
//
// Text file formats: per-segment embeddings, RTTM speaker turns, and the
// uniform segmentation rule used when synthesizing recordings.
//
// Embedding file, one segment per line:
//   <onset> <duration> <v1> <v2> ... <vD>
// whitespace separated, '#'-prefixed comment lines ignored, first data line
// fixes D. Numbers are written with 9 significant digits.
//
// RTTM line:
//   SPEAKER <recording_id> 1 <onset> <duration> <NA> <NA> <speaker> <NA> <NA>
// with times printed to exactly 3 decimals.

#pragma once

#include <string>
#include <vector>

#include "picdiar/types.hpp"

namespace picdiar {

RecordingEmbeddings read_embeddings(const std::string& path);
void write_embeddings(const RecordingEmbeddings& rec, const std::string& path);

SpeakerSegmentation read_rttm(const std::string& path);
std::string format_rttm(const SpeakerSegmentation& seg);
void write_rttm(const SpeakerSegmentation& seg, const std::string& path);

// Windows of size `window` starting at multiples of `shift`. A last window
// that would overrun is truncated to end at total_duration and kept only if
// it still spans at least `shift`. Generation stops once a window reaches
// the end of the recording.
std::vector<SegmentSpan> uniform_segments(double total_duration, double window,
                                          double shift);

// Derives a recording id from a file path: basename without extension.
std::string recording_id_from_path(const std::string& path);

}  // namespace picdiar
