// picdiar/pipeline.cpp

#include "picdiar/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

namespace picdiar {

void apply_preset(PipelineConfig& config, const std::string& name) {
  if (name == "custom") {
    config.preset = name;
    return;
  }
  if (name == "meeting") {
    config.graph.knn = 30;
    config.graph.sigma = 0.1;
    config.pca = PcaMode::fixed(30);
    config.ahc_threshold = 0.0;
    config.eigen_threshold = 0.7;
    config.initial_mode = InitialClusterMode::EigenThreshold;
    config.initial_threshold = 0.7;
    config.der_collar = 0.25;
    config.der_score_overlap = false;
  } else if (name == "dihard") {
    config.graph.knn = 40;
    config.graph.sigma = 0.5;
    config.pca = PcaMode::variance(0.30);
    config.ahc_threshold = -0.7;
    config.eigen_threshold = 0.7;
    config.initial_mode = InitialClusterMode::AhcThreshold;
    config.initial_threshold = -0.7;
    config.der_collar = 0.0;
    config.der_score_overlap = true;
  } else {
    throw Error("unknown preset '" + name + "' (expected meeting|dihard|custom)");
  }
  config.preset = name;
  config.train.initial_cluster_threshold = config.initial_threshold;
}

namespace {

bool parse_bool(const std::string& value, const std::string& key) {
  if (value == "true" || value == "on" || value == "1") return true;
  if (value == "false" || value == "off" || value == "0") return false;
  throw Error("config key '" + key + "': expected boolean, got '" + value + "'");
}

double parse_num(const std::string& value, const std::string& key) {
  try {
    size_t pos = 0;
    double v = std::stod(value, &pos);
    if (pos != value.size()) throw Error("");
    return v;
  } catch (const std::exception&) {
    throw Error("config key '" + key + "': expected number, got '" + value + "'");
  }
}

}  // namespace

void apply_config_entry(PipelineConfig& config, const std::string& key,
                        const std::string& value) {
  if (key == "preset") {
    apply_preset(config, value);
  } else if (key == "mode") {
    if (value == "baseline") config.mode = PipelineConfig::Mode::Baseline;
    else if (value == "selfsup") config.mode = PipelineConfig::Mode::Selfsup;
    else throw Error("config key 'mode': expected baseline|selfsup");
  } else if (key == "clusterer") {
    if (value == "pic") config.clusterer = Clusterer::Pic;
    else if (value == "ahc") config.clusterer = Clusterer::Ahc;
    else throw Error("config key 'clusterer': expected pic|ahc");
  } else if (key == "knn") {
    config.graph.knn = static_cast<int>(parse_num(value, key));
  } else if (key == "sigma") {
    config.graph.sigma = parse_num(value, key);
  } else if (key == "score_weight") {
    if (value == "sigmoid") config.graph.score_to_weight = ScoreWeight::Sigmoid;
    else if (value == "cosine") config.graph.score_to_weight = ScoreWeight::ShiftedCosine;
    else throw Error("config key 'score_weight': expected sigmoid|cosine");
  } else if (key == "temporal") {
    config.temporal.enabled = parse_bool(value, key);
  } else if (key == "beta") {
    config.temporal.beta = parse_num(value, key);
  } else if (key == "nb") {
    config.temporal.n_b = static_cast<int>(parse_num(value, key));
  } else if (key == "pca") {
    // fixed:<dims> or variance:<fraction>
    const auto colon = value.find(':');
    if (colon == std::string::npos) throw Error("config key 'pca': expected fixed:<d>|variance:<f>");
    const std::string kind = value.substr(0, colon);
    const std::string arg = value.substr(colon + 1);
    if (kind == "fixed") config.pca = PcaMode::fixed(static_cast<int>(parse_num(arg, key)));
    else if (kind == "variance") config.pca = PcaMode::variance(parse_num(arg, key));
    else throw Error("config key 'pca': expected fixed:<d>|variance:<f>");
  } else if (key == "ahc_threshold") {
    config.ahc_threshold = parse_num(value, key);
  } else if (key == "eigen_threshold") {
    config.eigen_threshold = parse_num(value, key);
  } else if (key == "num_speakers") {
    config.num_speakers = static_cast<int>(parse_num(value, key));
  } else if (key == "initial_mode") {
    if (value == "eigen") config.initial_mode = InitialClusterMode::EigenThreshold;
    else if (value == "ahc") config.initial_mode = InitialClusterMode::AhcThreshold;
    else throw Error("config key 'initial_mode': expected eigen|ahc");
  } else if (key == "initial_threshold") {
    config.initial_threshold = parse_num(value, key);
    config.train.initial_cluster_threshold = config.initial_threshold;
  } else if (key == "learning_rate") {
    config.train.learning_rate = parse_num(value, key);
  } else if (key == "epochs") {
    config.train.epochs_per_iteration = static_cast<int>(parse_num(value, key));
  } else if (key == "outer_iterations") {
    config.train.outer_iterations = static_cast<int>(parse_num(value, key));
  } else if (key == "balance_pairs") {
    config.train.balance_pairs = parse_bool(value, key);
  } else if (key == "der_collar") {
    config.der_collar = parse_num(value, key);
  } else if (key == "der_overlap") {
    config.der_score_overlap = parse_bool(value, key);
  } else if (key == "seed") {
    config.seed = static_cast<uint64_t>(parse_num(value, key));
    config.train.seed = config.seed;
  } else if (key == "workers") {
    config.workers = static_cast<int>(parse_num(value, key));
  } else {
    throw Error("unknown config key '" + key + "'");
  }
}

PipelineConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file: " + path);
  PipelineConfig config;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      if (line.find_first_not_of(" \t\r") != std::string::npos)
        throw Error(path + ":" + std::to_string(lineno) + ": expected 'key = value'");
      continue;
    }
    auto trim = [](std::string s) {
      const auto first = s.find_first_not_of(" \t\r");
      const auto last = s.find_last_not_of(" \t\r");
      return first == std::string::npos ? std::string() : s.substr(first, last - first + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw Error(path + ":" + std::to_string(lineno) + ": expected 'key = value'");
    apply_config_entry(config, key, value);
  }
  return config;
}

StopRule final_stop_rule(const PipelineConfig& config) {
  if (config.num_speakers > 0) return StopRule::count(config.num_speakers);
  if (config.clusterer == Clusterer::Pic) return StopRule::eigen(config.eigen_threshold);
  return StopRule::score(config.ahc_threshold);
}

namespace {

SelfsupOptions selfsup_options(const PipelineConfig& config, std::ostream* diagnostics) {
  SelfsupOptions opts;
  opts.train = config.train;
  opts.train.initial_cluster_threshold = config.initial_threshold;
  opts.train.seed = config.seed;
  opts.graph = config.graph;
  opts.temporal = config.temporal;
  opts.clusterer = config.clusterer;
  opts.initial_mode = config.initial_mode;
  opts.stop = final_stop_rule(config);
  opts.diagnostics_out = diagnostics;
  return opts;
}

}  // namespace

RecordingResult run_recording(const RecordingEmbeddings& raw, const WhiteningTransform& wt,
                              const PldaModel& plda_global, const PipelineConfig& config,
                              const SpeakerSegmentation* reference) {
  std::string stage = "preprocess";
  try {
    auto [reduced, pca] = preprocess_recording(raw, wt, config.pca);
    stage = "plda";
    const PldaModel plda = transform_plda(plda_global, pca);

    RecordingResult result;
    result.recording_id = raw.recording_id;
    if (config.mode == PipelineConfig::Mode::Baseline) {
      stage = "score";
      Matrix scores = score_matrix(plda, project_rows(plda, reduced.matrix));
      if (config.temporal.enabled)
        scores = temporal_continuity(scores, config.temporal.beta, config.temporal.n_b);
      stage = "cluster";
      const StopRule stop = final_stop_rule(config);
      if (config.clusterer == Clusterer::Pic) {
        const int knn = std::min(config.graph.knn, reduced.size() - 1);
        AffinityGraph g =
            build_graph(scores, knn, config.graph.sigma, config.graph.score_to_weight);
        result.clustering = pic_cluster(g, stop);
      } else {
        result.clustering = ahc_cluster(scores, stop);
      }
    } else {
      stage = "selfsup";
      std::ostringstream diagnostics;
      SelfsupResult selfsup =
          selfsup_pipeline(raw, wt, pca, plda, selfsup_options(config, &diagnostics));
      result.clustering = std::move(selfsup.clustering);
      result.net = std::move(selfsup.net);
      result.diagnostics = diagnostics.str();
    }

    stage = "segmentation";
    result.hypothesis =
        segments_to_segmentation(result.clustering, raw.segments, raw.recording_id);
    if (reference) {
      stage = "der";
      result.der = compute_der(*reference, result.hypothesis, config.der_collar,
                               config.der_score_overlap);
    }
    return result;
  } catch (const Error& e) {
    throw Error("recording '" + raw.recording_id + "', stage " + stage + ": " + e.what());
  }
}

std::vector<RecordingResult> run_recordings(const std::vector<RecordingEmbeddings>& recs,
                                            const WhiteningTransform& wt,
                                            const PldaModel& plda_global,
                                            const PipelineConfig& config,
                                            const std::vector<const SpeakerSegmentation*>& refs) {
  if (!refs.empty() && refs.size() != recs.size())
    throw Error("run_recordings: reference list size mismatch");
  std::vector<RecordingResult> results(recs.size());
  std::vector<std::string> errors(recs.size());

  const int workers =
      std::max(1, std::min<int>(config.workers, static_cast<int>(recs.size())));
  auto work = [&](size_t index) {
    try {
      const SpeakerSegmentation* ref = refs.empty() ? nullptr : refs[index];
      results[index] = run_recording(recs[index], wt, plda_global, config, ref);
    } catch (const std::exception& e) {
      errors[index] = e.what();
    }
  };

  if (workers == 1) {
    for (size_t i = 0; i < recs.size(); ++i) work(i);
  } else {
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (size_t i = next.fetch_add(1); i < recs.size(); i = next.fetch_add(1)) work(i);
      });
    for (auto& t : pool) t.join();
  }

  for (size_t i = 0; i < recs.size(); ++i)
    if (!errors[i].empty()) throw Error(errors[i]);
  return results;
}

std::string format_der_report(const std::vector<std::pair<std::string, DerReport>>& rows) {
  std::ostringstream out;
  auto line = [&out](const std::string& id, const DerReport& report) {
    char der_field[40];
    if (report.der)
      std::snprintf(der_field, sizeof(der_field), "%.2f", *report.der * 100.0);
    else
      std::snprintf(der_field, sizeof(der_field), "NA");
    char buf[200];
    std::snprintf(buf, sizeof(buf), "%s %.3f %.3f %.3f %.3f %s\n", id.c_str(),
                  report.scored_speech, report.missed_speech, report.false_alarm,
                  report.speaker_confusion, der_field);
    out << buf;
  };

  DerReport total;
  for (const auto& [id, report] : rows) {
    total.missed_speech += report.missed_speech;
    total.false_alarm += report.false_alarm;
    total.speaker_confusion += report.speaker_confusion;
    total.scored_speech += report.scored_speech;
    line(id, report);
  }
  if (total.scored_speech > 0.0) total.der = total.error_total() / total.scored_speech;
  line("TOTAL", total);
  return out.str();
}

void atomic_write_file(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write: " + tmp);
    out << content;
    if (!out) throw Error("write failed: " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error("rename failed: " + tmp + " -> " + path + ": " + ec.message());
}

std::vector<std::string> label_segments_from_reference(const RecordingEmbeddings& rec,
                                                       const SpeakerSegmentation& ref) {
  std::vector<std::string> labels(rec.segments.size());
  for (size_t i = 0; i < rec.segments.size(); ++i) {
    const SegmentSpan& span = rec.segments[i];
    double best = 0.0;
    for (const Turn& turn : ref.turns) {
      const double lo = std::max(span.onset, turn.span.onset);
      const double hi = std::min(span.offset(), turn.span.offset());
      if (hi - lo > best) {
        best = hi - lo;
        labels[i] = turn.speaker;
      }
    }
  }
  return labels;
}

}  // namespace picdiar
