// picdiar/tools/picdiar_main.cpp
//
// Command line front end. Subcommands: synth, preprocess, plda-train,
// cluster, selfsup, pipeline, score.

#include <CLI11.hpp>
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "picdiar/io.hpp"
#include "picdiar/pipeline.hpp"
#include "picdiar/rng.hpp"
#include "picdiar/synth.hpp"

namespace fs = std::filesystem;
using namespace picdiar;

namespace {

std::vector<std::string> expand_inputs(const std::vector<std::string>& paths,
                                       const std::string& dir, const std::string& ext) {
  std::vector<std::string> files = paths;
  if (!dir.empty()) {
    for (const auto& entry : fs::directory_iterator(dir))
      if (entry.is_regular_file() && entry.path().extension() == ext)
        files.push_back(entry.path().string());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error("no input files given");
  return files;
}

std::vector<RecordingEmbeddings> load_recordings(const std::vector<std::string>& files) {
  std::vector<RecordingEmbeddings> recs;
  recs.reserve(files.size());
  for (const auto& file : files) recs.push_back(read_embeddings(file));
  return recs;
}

StopRule parse_stop(const std::string& text) {
  const auto colon = text.find(':');
  if (colon != std::string::npos) {
    const std::string kind = text.substr(0, colon);
    const std::string arg = text.substr(colon + 1);
    if (kind == "count") return StopRule::count(std::stoi(arg));
    if (kind == "eigen") return StopRule::eigen(std::stod(arg));
    if (kind == "ahc") return StopRule::score(std::stod(arg));
  }
  throw Error("bad --stop value '" + text + "' (expected count:N | eigen:th | ahc:th)");
}

void apply_stop(PipelineConfig& config, const std::string& text) {
  const StopRule stop = parse_stop(text);
  switch (stop.kind) {
    case StopRule::Kind::TargetCount:
      config.num_speakers = stop.target;
      break;
    case StopRule::Kind::EigenThreshold:
      config.num_speakers = 0;
      config.clusterer = Clusterer::Pic;
      config.eigen_threshold = stop.threshold;
      break;
    case StopRule::Kind::ScoreThreshold:
      config.num_speakers = 0;
      config.clusterer = Clusterer::Ahc;
      config.ahc_threshold = stop.threshold;
      break;
  }
}

// Shared flags for cluster/selfsup/pipeline.
struct RunArgs {
  std::string config_file;
  std::string preset;
  std::string whiten_path;
  std::string plda_path;
  std::vector<std::string> embeddings;
  std::string emb_dir;
  std::string ref_dir;
  std::string out_dir;
  std::string net_dir;
  std::string stop;
  std::vector<std::string> flag_overrides;  // key=value collected from flags
  std::vector<std::string> overrides;       // key=value from --set
};

void add_run_options(CLI::App* cmd, RunArgs& args) {
  cmd->add_option("--config", args.config_file, "config file (key = value lines)");
  cmd->add_option("--preset", args.preset, "meeting|dihard|custom");
  cmd->add_option("--whiten", args.whiten_path, "whitening transform file")->required();
  cmd->add_option("--plda", args.plda_path, "PLDA model file")->required();
  cmd->add_option("--embeddings", args.embeddings, "embedding files");
  cmd->add_option("--emb-dir", args.emb_dir, "directory of .emb files");
  cmd->add_option("--ref-dir", args.ref_dir, "directory of reference .rttm files");
  cmd->add_option("--out-dir", args.out_dir, "output directory")->required();
  cmd->add_option("--save-net-dir", args.net_dir, "write metric-net checkpoints here");
  cmd->add_option("--stop", args.stop, "count:N | eigen:th | ahc:th");
  cmd->add_option("--set", args.overrides, "config override key=value");

  // Flags mirroring the config keys; kept as key=value pairs so precedence
  // stays config file < flags < --set.
  auto mirror = [cmd, &args](const std::string& flag, const std::string& key,
                             const std::string& help) {
    cmd->add_option_function<std::string>(
        flag, [&args, key](const std::string& v) { args.flag_overrides.push_back(key + "=" + v); },
        help);
  };
  mirror("--knn", "knn", "K nearest neighbors kept per row");
  mirror("--sigma", "sigma", "path discount factor in (0,1)");
  mirror("--score-weight", "score_weight", "sigmoid|cosine");
  mirror("--beta", "beta", "temporal continuity decay");
  mirror("--nb", "nb", "temporal continuity lag clamp");
  mirror("--temporal", "temporal", "apply temporal continuity (on|off)");
  mirror("--clusterer", "clusterer", "pic|ahc");
  mirror("--workers", "workers", "worker pool size");
  mirror("--seed", "seed", "run seed");
}

int run_pipeline_command(const RunArgs& args, PipelineConfig::Mode mode) {
  PipelineConfig config;
  if (!args.config_file.empty()) config = load_config_file(args.config_file);
  if (!args.preset.empty()) apply_preset(config, args.preset);
  config.mode = mode;
  auto apply_entries = [&config](const std::vector<std::string>& entries) {
    for (const auto& entry : entries) {
      const auto eq = entry.find('=');
      if (eq == std::string::npos) throw Error("bad override entry '" + entry + "'");
      apply_config_entry(config, entry.substr(0, eq), entry.substr(eq + 1));
    }
  };
  apply_entries(args.flag_overrides);
  apply_entries(args.overrides);
  if (!args.stop.empty()) apply_stop(config, args.stop);

  const auto files = expand_inputs(args.embeddings, args.emb_dir, ".emb");
  const WhiteningTransform wt = load_whitening(args.whiten_path);
  const PldaModel plda = load_plda(args.plda_path);
  const auto recs = load_recordings(files);

  std::vector<SpeakerSegmentation> refs;
  std::vector<const SpeakerSegmentation*> ref_ptrs;
  if (!args.ref_dir.empty()) {
    refs.reserve(recs.size());
    for (const auto& rec : recs) {
      const fs::path ref_path = fs::path(args.ref_dir) / (rec.recording_id + ".rttm");
      if (!fs::exists(ref_path))
        throw Error("missing reference RTTM for recording '" + rec.recording_id + "'");
      refs.push_back(read_rttm(ref_path.string()));
    }
    for (const auto& ref : refs) ref_ptrs.push_back(&ref);
  }

  fs::create_directories(args.out_dir);
  if (!args.net_dir.empty()) fs::create_directories(args.net_dir);
  const auto results = run_recordings(recs, wt, plda, config, ref_ptrs);

  for (const auto& result : results) {
    std::cerr << result.diagnostics;
    atomic_write_file((fs::path(args.out_dir) / (result.recording_id + ".rttm")).string(),
                      format_rttm(result.hypothesis));
    if (!args.net_dir.empty() && result.net)
      save_metricnet(*result.net,
                     (fs::path(args.net_dir) / (result.recording_id + ".net")).string());
  }

  if (!args.ref_dir.empty()) {
    std::vector<std::pair<std::string, DerReport>> rows;
    for (const auto& result : results)
      rows.emplace_back(result.recording_id, *result.der);
    const std::string report = format_der_report(rows);
    atomic_write_file((fs::path(args.out_dir) / "der_report.txt").string(), report);
    std::cerr << report;
  }
  return 0;
}

int cmd_synth(const std::string& out_dir, int n_recordings, int n_speakers, int n_segments,
              int dim, double psi_value, double window, double shift, double p_stay,
              uint64_t seed, const std::string& prefix, const std::string& model_out) {
  fs::create_directories(out_dir);
  const PldaModel truth =
      make_random_plda(dim, Vector::Constant(dim, psi_value), derive_seed(seed, 0));
  if (!model_out.empty()) save_plda(truth, model_out);

  SynthRecordingConfig cfg;
  cfg.n_speakers = n_speakers;
  cfg.n_segments = n_segments;
  cfg.window = window;
  cfg.shift = shift;
  cfg.p_stay = p_stay;

  for (int i = 0; i < n_recordings; ++i) {
    char name[64];
    std::snprintf(name, sizeof(name), "%s%03d", prefix.c_str(), i);
    const SynthRecording synth =
        synth_recording(truth, name, cfg, derive_seed(seed, 1000 + i));
    write_embeddings(synth.rec, (fs::path(out_dir) / (std::string(name) + ".emb")).string());
    write_rttm(synth.reference,
               (fs::path(out_dir) / (std::string(name) + ".rttm")).string());
  }
  return 0;
}

int cmd_preprocess(const std::vector<std::string>& embeddings, const std::string& emb_dir,
                   const std::string& dev_list, const std::string& out_path) {
  std::vector<std::string> files = embeddings;
  if (!dev_list.empty()) {
    std::ifstream in(dev_list);
    if (!in) throw Error("cannot open dev list: " + dev_list);
    std::string line;
    while (std::getline(in, line))
      if (!line.empty() && line[0] != '#') files.push_back(line);
  }
  files = expand_inputs(files, emb_dir, ".emb");

  std::vector<Matrix> blocks;
  int dim = -1;
  long total_rows = 0;
  for (const auto& file : files) {
    RecordingEmbeddings rec = read_embeddings(file);
    if (dim < 0) dim = rec.dim;
    if (rec.dim != dim) throw Error("dev set dimension mismatch at " + file);
    total_rows += rec.size();
    blocks.push_back(std::move(rec.matrix));
  }
  Matrix pooled(total_rows, dim);
  long row = 0;
  for (const auto& block : blocks) {
    pooled.middleRows(row, block.rows()) = block;
    row += block.rows();
  }
  save_whitening(fit_whitening(pooled), out_path);
  std::cerr << "fitted whitening on " << total_rows << " vectors of dim " << dim << '\n';
  return 0;
}

int cmd_plda_train(const std::vector<std::string>& embeddings, const std::string& emb_dir,
                   const std::string& ref_dir, const std::string& whiten_path,
                   const std::string& out_path) {
  const auto files = expand_inputs(embeddings, emb_dir, ".emb");
  const WhiteningTransform wt = load_whitening(whiten_path);

  std::vector<Matrix> blocks;
  std::vector<std::string> labels;
  long total_rows = 0;
  for (const auto& file : files) {
    RecordingEmbeddings rec = read_embeddings(file);
    const fs::path ref_path = fs::path(ref_dir) / (rec.recording_id + ".rttm");
    if (!fs::exists(ref_path))
      throw Error("missing reference RTTM for recording '" + rec.recording_id + "'");
    const SpeakerSegmentation ref = read_rttm(ref_path.string());
    const auto seg_labels = label_segments_from_reference(rec, ref);

    // Whiten + length-normalize; PLDA is trained in this global space and
    // projected through each recording's PCA at scoring time.
    Matrix conditioned = length_normalize_rows(apply_whitening(wt, rec.matrix));
    for (int i = 0; i < rec.size(); ++i) {
      if (seg_labels[i].empty()) continue;  // segment not covered by the reference
      blocks.push_back(conditioned.row(i));
      labels.push_back(rec.recording_id + "/" + seg_labels[i]);
      ++total_rows;
    }
  }
  if (total_rows == 0) throw Error("no labeled segments found");
  Matrix pooled(total_rows, blocks.front().cols());
  for (long i = 0; i < total_rows; ++i) pooled.row(i) = blocks[i];

  save_plda(fit_plda(pooled, labels), out_path);
  std::cerr << "trained PLDA on " << total_rows << " segments\n";
  return 0;
}

int cmd_score(const std::string& ref_dir, const std::string& hyp_dir, double collar,
              bool score_overlap, bool allow_missing, const std::string& out_path) {
  std::vector<std::string> ref_files;
  for (const auto& entry : fs::directory_iterator(ref_dir))
    if (entry.is_regular_file() && entry.path().extension() == ".rttm")
      ref_files.push_back(entry.path().string());
  std::sort(ref_files.begin(), ref_files.end());
  if (ref_files.empty()) throw Error("no reference RTTM files in " + ref_dir);

  std::vector<std::pair<std::string, DerReport>> rows;
  std::vector<std::string> missing;
  for (const auto& ref_file : ref_files) {
    const std::string id = recording_id_from_path(ref_file);
    const fs::path hyp_path = fs::path(hyp_dir) / (id + ".rttm");
    if (!fs::exists(hyp_path)) {
      missing.push_back(id);
      continue;
    }
    const SpeakerSegmentation ref = read_rttm(ref_file);
    const SpeakerSegmentation hyp = read_rttm(hyp_path.string());
    rows.emplace_back(id, compute_der(ref, hyp, collar, score_overlap));
  }

  const std::string report = format_der_report(rows);
  std::cout << report;
  if (!out_path.empty()) atomic_write_file(out_path, report);

  if (!missing.empty()) {
    std::cerr << "missing hypotheses for:";
    for (const auto& id : missing) std::cerr << ' ' << id;
    std::cerr << '\n';
    if (!allow_missing) return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"speaker diarization clustering toolkit"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "generate synthetic recordings");
  std::string synth_out, synth_prefix = "rec", synth_model_out;
  int synth_recordings = 1, synth_speakers = 4, synth_segments = 200, synth_dim = 16;
  double synth_psi = 3.0, synth_window = 1.5, synth_shift = 0.75, synth_p_stay = 0.9;
  uint64_t synth_seed = 1;
  synth->add_option("--out-dir", synth_out)->required();
  synth->add_option("--recordings", synth_recordings);
  synth->add_option("--speakers", synth_speakers);
  synth->add_option("--segments", synth_segments);
  synth->add_option("--dim", synth_dim);
  synth->add_option("--psi", synth_psi, "between/within variance ratio");
  synth->add_option("--window", synth_window);
  synth->add_option("--shift", synth_shift);
  synth->add_option("--p-stay", synth_p_stay);
  synth->add_option("--seed", synth_seed);
  synth->add_option("--prefix", synth_prefix);
  synth->add_option("--save-model", synth_model_out, "write the ground-truth PLDA");

  // preprocess
  auto* preprocess = app.add_subcommand("preprocess", "fit the whitening transform");
  std::vector<std::string> pre_embeddings;
  std::string pre_emb_dir, pre_dev_list, pre_out;
  preprocess->add_option("--embeddings", pre_embeddings);
  preprocess->add_option("--emb-dir", pre_emb_dir);
  preprocess->add_option("--dev-list", pre_dev_list, "file listing embedding paths");
  preprocess->add_option("--out", pre_out)->required();

  // plda-train
  auto* plda_train = app.add_subcommand("plda-train", "train the PLDA model");
  std::vector<std::string> plda_embeddings;
  std::string plda_emb_dir, plda_ref_dir, plda_whiten, plda_out;
  plda_train->add_option("--embeddings", plda_embeddings);
  plda_train->add_option("--emb-dir", plda_emb_dir);
  plda_train->add_option("--ref-dir", plda_ref_dir)->required();
  plda_train->add_option("--whiten", plda_whiten)->required();
  plda_train->add_option("--out", plda_out)->required();

  // cluster / selfsup / pipeline
  RunArgs cluster_args, selfsup_args, pipeline_args;
  auto* cluster = app.add_subcommand("cluster", "baseline scoring + clustering");
  add_run_options(cluster, cluster_args);
  auto* selfsup = app.add_subcommand("selfsup", "self-supervised metric learning run");
  add_run_options(selfsup, selfsup_args);
  auto* pipeline = app.add_subcommand("pipeline", "full pipeline per config");
  add_run_options(pipeline, pipeline_args);
  std::string pipeline_mode = "baseline";
  pipeline->add_option("--mode", pipeline_mode, "baseline|selfsup");

  // score
  auto* score = app.add_subcommand("score", "DER scoring of hypothesis RTTMs");
  std::string score_ref, score_hyp, score_out;
  double score_collar = 0.0;
  bool score_overlap = false, score_ignore_overlap = false, score_allow_missing = false;
  score->add_option("--ref-dir", score_ref)->required();
  score->add_option("--hyp-dir", score_hyp)->required();
  score->add_option("--collar", score_collar);
  score->add_flag("--overlap", score_overlap, "score overlap regions");
  score->add_flag("--ignore-overlap", score_ignore_overlap, "exclude overlap regions");
  score->add_flag("--allow-missing", score_allow_missing);
  score->add_option("--out", score_out);

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed())
      return cmd_synth(synth_out, synth_recordings, synth_speakers, synth_segments,
                       synth_dim, synth_psi, synth_window, synth_shift, synth_p_stay,
                       synth_seed, synth_prefix, synth_model_out);
    if (preprocess->parsed())
      return cmd_preprocess(pre_embeddings, pre_emb_dir, pre_dev_list, pre_out);
    if (plda_train->parsed())
      return cmd_plda_train(plda_embeddings, plda_emb_dir, plda_ref_dir, plda_whiten,
                            plda_out);
    if (cluster->parsed())
      return run_pipeline_command(cluster_args, PipelineConfig::Mode::Baseline);
    if (selfsup->parsed())
      return run_pipeline_command(selfsup_args, PipelineConfig::Mode::Selfsup);
    if (pipeline->parsed()) {
      if (pipeline_mode != "baseline" && pipeline_mode != "selfsup")
        throw Error("--mode must be baseline or selfsup");
      return run_pipeline_command(pipeline_args, pipeline_mode == "selfsup"
                                                     ? PipelineConfig::Mode::Selfsup
                                                     : PipelineConfig::Mode::Baseline);
    }
    if (score->parsed()) {
      if (score_overlap && score_ignore_overlap)
        throw Error("--overlap and --ignore-overlap are mutually exclusive");
      return cmd_score(score_ref, score_hyp, score_collar, score_overlap,
                       score_allow_missing, score_out);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
