// picdiar/bindings/module.cpp
//
// Python interface to the main operations: preprocessing, PLDA training and
// scoring, graph clustering, DER scoring and synthetic data.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "picdiar/derscore.hpp"
#include "picdiar/io.hpp"
#include "picdiar/pipeline.hpp"
#include "picdiar/synth.hpp"

namespace py = pybind11;
using namespace picdiar;

namespace {

ScoreWeight parse_weight(const std::string& name) {
  if (name == "sigmoid") return ScoreWeight::Sigmoid;
  if (name == "cosine") return ScoreWeight::ShiftedCosine;
  throw Error("score weight must be 'sigmoid' or 'cosine'");
}

SpeakerSegmentation make_segmentation(
    const std::string& recording_id,
    const std::vector<std::tuple<double, double, std::string>>& turns) {
  SpeakerSegmentation seg;
  seg.recording_id = recording_id;
  for (const auto& [onset, duration, speaker] : turns)
    seg.turns.push_back({{onset, duration}, speaker});
  return seg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "speaker diarization clustering toolkit";

  py::register_exception<Error>(m, "PicdiarError");

  py::class_<WhiteningTransform>(m, "WhiteningTransform")
      .def_readonly("mean", &WhiteningTransform::mean)
      .def_readonly("transform", &WhiteningTransform::transform);

  py::class_<PcaTransform>(m, "PcaTransform")
      .def_readonly("mean", &PcaTransform::mean)
      .def_readonly("basis", &PcaTransform::basis)
      .def_readonly("explained_variance", &PcaTransform::explained_variance);

  py::class_<PldaModel>(m, "PldaModel")
      .def_readonly("dim", &PldaModel::dim)
      .def_readonly("mean", &PldaModel::mean)
      .def_readonly("diagonalizer", &PldaModel::diagonalizer)
      .def_readonly("bias", &PldaModel::bias)
      .def_readonly("psi", &PldaModel::psi);

  py::class_<DerReport>(m, "DerReport")
      .def_readonly("missed_speech", &DerReport::missed_speech)
      .def_readonly("false_alarm", &DerReport::false_alarm)
      .def_readonly("speaker_confusion", &DerReport::speaker_confusion)
      .def_readonly("scored_speech", &DerReport::scored_speech)
      .def_property_readonly("der",
                             [](const DerReport& r) -> py::object {
                               return r.der ? py::cast(*r.der) : py::none();
                             });

  m.def("fit_whitening", &fit_whitening, py::arg("data"));
  m.def("apply_whitening", &apply_whitening, py::arg("transform"), py::arg("rows"));
  m.def("length_normalize_rows", &length_normalize_rows, py::arg("rows"));
  m.def(
      "fit_recording_pca",
      [](const Matrix& rows, int fixed_dims, double variance_fraction) {
        const PcaMode mode = fixed_dims > 0 ? PcaMode::fixed(fixed_dims)
                                            : PcaMode::variance(variance_fraction);
        return fit_recording_pca(rows, mode);
      },
      py::arg("rows"), py::arg("fixed_dims") = 0, py::arg("variance_fraction") = 0.0);
  m.def("apply_pca", &apply_pca, py::arg("transform"), py::arg("rows"));

  m.def("fit_plda", &fit_plda, py::arg("data"), py::arg("labels"));
  m.def("project_rows", &project_rows, py::arg("model"), py::arg("rows"));
  m.def("plda_llr", &plda_llr, py::arg("psi"), py::arg("ui"), py::arg("uj"));
  m.def("score_matrix", &score_matrix, py::arg("model"), py::arg("projected"));
  m.def("sample_generative", &sample_generative, py::arg("model"), py::arg("n_speakers"),
        py::arg("n_segments_per_speaker"), py::arg("seed"));
  m.def("make_random_plda", &make_random_plda, py::arg("dim"), py::arg("psi"),
        py::arg("seed"));

  m.def(
      "pic_cluster",
      [](const Matrix& scores, int knn, double sigma, const std::string& weight,
         int num_clusters, double eigen_threshold) {
        const int n = static_cast<int>(scores.rows());
        AffinityGraph g =
            build_graph(scores, std::min(knn, n - 1), sigma, parse_weight(weight));
        const StopRule stop = num_clusters > 0 ? StopRule::count(num_clusters)
                                               : StopRule::eigen(eigen_threshold);
        return pic_cluster(g, stop).assignment;
      },
      py::arg("scores"), py::arg("knn") = 30, py::arg("sigma") = 0.1,
      py::arg("weight") = "sigmoid", py::arg("num_clusters") = 0,
      py::arg("eigen_threshold") = 0.7);
  m.def(
      "ahc_cluster",
      [](const Matrix& scores, int num_clusters, double threshold) {
        const StopRule stop =
            num_clusters > 0 ? StopRule::count(num_clusters) : StopRule::score(threshold);
        return ahc_cluster(scores, stop).assignment;
      },
      py::arg("scores"), py::arg("num_clusters") = 0, py::arg("threshold") = 0.0);
  m.def(
      "estimate_num_clusters",
      [](const Matrix& scores, int knn, double sigma, const std::string& weight, double th) {
        const int n = static_cast<int>(scores.rows());
        AffinityGraph g =
            build_graph(scores, std::min(knn, n - 1), sigma, parse_weight(weight));
        return estimate_num_clusters(g, th);
      },
      py::arg("scores"), py::arg("knn") = 30, py::arg("sigma") = 0.1,
      py::arg("weight") = "sigmoid", py::arg("threshold") = 0.7);
  m.def("temporal_continuity", &temporal_continuity, py::arg("scores"), py::arg("beta"),
        py::arg("n_b"));

  m.def(
      "compute_der",
      [](const std::string& recording_id,
         const std::vector<std::tuple<double, double, std::string>>& ref,
         const std::vector<std::tuple<double, double, std::string>>& hyp, double collar,
         bool score_overlap) {
        return compute_der(make_segmentation(recording_id, ref),
                           make_segmentation(recording_id, hyp), collar, score_overlap);
      },
      py::arg("recording_id"), py::arg("ref"), py::arg("hyp"), py::arg("collar") = 0.0,
      py::arg("score_overlap") = true);

  m.def(
      "selfsup_cluster",
      [](const Matrix& inputs, const WhiteningTransform& wt, const PldaModel& plda_global,
         int num_clusters, int pca_dims, int knn, double sigma, double learning_rate,
         int epochs, int outer_iterations, double initial_threshold, uint64_t seed) {
        RecordingEmbeddings rec;
        rec.recording_id = "memory";
        rec.dim = static_cast<int>(inputs.cols());
        rec.matrix = inputs;
        rec.segments.resize(inputs.rows());
        for (int i = 0; i < inputs.rows(); ++i) rec.segments[i] = {0.75 * i, 1.5};

        auto [reduced, pca] = preprocess_recording(rec, wt, PcaMode::fixed(pca_dims));
        (void)reduced;
        const PldaModel plda = transform_plda(plda_global, pca);

        SelfsupOptions opts;
        opts.train.learning_rate = learning_rate;
        opts.train.epochs_per_iteration = epochs;
        opts.train.outer_iterations = outer_iterations;
        opts.train.initial_cluster_threshold = initial_threshold;
        opts.train.seed = seed;
        opts.graph.knn = knn;
        opts.graph.sigma = sigma;
        opts.stop = num_clusters > 0 ? StopRule::count(num_clusters)
                                     : StopRule::eigen(initial_threshold);
        return selfsup_pipeline(rec, wt, pca, plda, opts).clustering.assignment;
      },
      py::arg("inputs"), py::arg("whitening"), py::arg("plda"), py::arg("num_clusters") = 0,
      py::arg("pca_dims") = 30, py::arg("knn") = 30, py::arg("sigma") = 0.1,
      py::arg("learning_rate") = 1e-3, py::arg("epochs") = 20,
      py::arg("outer_iterations") = 3, py::arg("initial_threshold") = 0.7,
      py::arg("seed") = 0);

  m.def("uniform_segments", [](double total, double window, double shift) {
    std::vector<std::pair<double, double>> out;
    for (const SegmentSpan& span : uniform_segments(total, window, shift))
      out.emplace_back(span.onset, span.duration);
    return out;
  });

  m.def(
      "synth_recording",
      [](const PldaModel& truth, int n_speakers, int n_segments, double p_stay,
         uint64_t seed) {
        SynthRecordingConfig cfg;
        cfg.n_speakers = n_speakers;
        cfg.n_segments = n_segments;
        cfg.p_stay = p_stay;
        const SynthRecording out = synth_recording(truth, "synth", cfg, seed);
        return std::make_pair(out.rec.matrix, out.true_labels);
      },
      py::arg("truth"), py::arg("n_speakers"), py::arg("n_segments"),
      py::arg("p_stay") = 0.9, py::arg("seed") = 0);
}
