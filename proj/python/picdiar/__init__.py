"""Speaker diarization clustering toolkit.

PLDA scoring, path integral clustering, self-supervised metric learning and
DER evaluation over precomputed speaker embeddings.
"""

from ._core import (
    DerReport,
    PcaTransform,
    PicdiarError,
    PldaModel,
    WhiteningTransform,
    ahc_cluster,
    apply_pca,
    apply_whitening,
    compute_der,
    estimate_num_clusters,
    fit_plda,
    fit_recording_pca,
    fit_whitening,
    length_normalize_rows,
    make_random_plda,
    pic_cluster,
    plda_llr,
    project_rows,
    sample_generative,
    score_matrix,
    selfsup_cluster,
    synth_recording,
    temporal_continuity,
    uniform_segments,
)

__all__ = [
    "DerReport",
    "PcaTransform",
    "PicdiarError",
    "PldaModel",
    "WhiteningTransform",
    "ahc_cluster",
    "apply_pca",
    "apply_whitening",
    "compute_der",
    "estimate_num_clusters",
    "fit_plda",
    "fit_recording_pca",
    "fit_whitening",
    "length_normalize_rows",
    "make_random_plda",
    "pic_cluster",
    "plda_llr",
    "project_rows",
    "sample_generative",
    "score_matrix",
    "selfsup_cluster",
    "synth_recording",
    "temporal_continuity",
    "uniform_segments",
]
