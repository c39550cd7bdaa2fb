// picdiar/pipeline.hpp
//
// End-to-end orchestration shared by the CLI and the Python bindings:
// configuration with presets, per-recording baseline/self-supervised runs,
// DER reporting and atomic output files.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "picdiar/derscore.hpp"
#include "picdiar/selfsup.hpp"

namespace picdiar {

struct PipelineConfig {
  enum class Mode { Baseline, Selfsup };

  std::string preset = "custom";  // meeting | dihard | custom
  Mode mode = Mode::Baseline;
  Clusterer clusterer = Clusterer::Pic;
  GraphParams graph;
  TemporalParams temporal;
  PcaMode pca = PcaMode::fixed(30);
  double ahc_threshold = 0.0;
  double eigen_threshold = 0.7;
  int num_speakers = 0;  // 0 = unknown, stop by threshold
  InitialClusterMode initial_mode = InitialClusterMode::EigenThreshold;
  double initial_threshold = 0.7;
  TrainingConfig train;
  double der_collar = 0.25;
  bool der_score_overlap = false;
  uint64_t seed = 0;
  int workers = 1;
};

// Expands a named preset into its hyperparameter values; "custom" leaves the
// config untouched.
void apply_preset(PipelineConfig& config, const std::string& name);

// Line-based `key = value` files, '#' comments. Unknown keys are errors.
PipelineConfig load_config_file(const std::string& path);
void apply_config_entry(PipelineConfig& config, const std::string& key,
                        const std::string& value);

StopRule final_stop_rule(const PipelineConfig& config);

struct RecordingResult {
  std::string recording_id;
  SpeakerSegmentation hypothesis;
  Clustering clustering;
  std::optional<DerReport> der;
  std::optional<MetricNet> net;  // selfsup mode only
  std::string diagnostics;       // `iter epoch loss n_clusters` lines
};

// Preprocess -> per-recording PLDA -> score/cluster (baseline) or the
// self-supervision loop, then turn conversion and optional scoring.
RecordingResult run_recording(const RecordingEmbeddings& raw, const WhiteningTransform& wt,
                              const PldaModel& plda_global, const PipelineConfig& config,
                              const SpeakerSegmentation* reference = nullptr);

// Runs recordings through a worker pool; results keep input order. Throws
// with the recording id and stage on the first failure.
std::vector<RecordingResult> run_recordings(const std::vector<RecordingEmbeddings>& recs,
                                            const WhiteningTransform& wt,
                                            const PldaModel& plda_global,
                                            const PipelineConfig& config,
                                            const std::vector<const SpeakerSegmentation*>& refs);

// One `<id> <scored> <miss> <fa> <conf> <der%>` line per recording plus a
// TOTAL line aggregating durations before the division.
std::string format_der_report(const std::vector<std::pair<std::string, DerReport>>& rows);

// Write-temp-then-rename so readers never observe partial files.
void atomic_write_file(const std::string& path, const std::string& content);

// Labels each segment of `rec` with the reference speaker of maximal
// temporal overlap; segments without any overlap get an empty label.
std::vector<std::string> label_segments_from_reference(const RecordingEmbeddings& rec,
                                                       const SpeakerSegmentation& ref);

}  // namespace picdiar
