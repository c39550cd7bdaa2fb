"""Smoke tests for the picdiar Python module."""

import math

import numpy as np
import pytest

import picdiar


def numpy_llr(psi, ui, uj):
    """Reference LLR via explicit Gaussian densities."""
    total = 0.0
    for p, a, b in zip(psi, ui, uj):
        cov = np.array([[p + 1.0, p], [p, p + 1.0]])
        x = np.array([a, b])
        log_same = -math.log(2 * math.pi) - 0.5 * math.log(np.linalg.det(cov)) \
            - 0.5 * x @ np.linalg.solve(cov, x)
        log_diff = sum(
            -0.5 * math.log(2 * math.pi) - 0.5 * math.log(p + 1.0) - v * v / (2 * (p + 1.0))
            for v in x
        )
        total += log_same - log_diff
    return total


def test_plda_llr_matches_numpy():
    rng = np.random.default_rng(0)
    for _ in range(50):
        d = rng.integers(1, 6)
        psi = rng.uniform(0.0, 10.0, d)
        ui = rng.normal(size=d)
        uj = rng.normal(size=d)
        assert picdiar.plda_llr(psi, ui, uj) == pytest.approx(
            numpy_llr(psi, ui, uj), abs=1e-9
        )


def test_plda_fit_project_score_roundtrip():
    truth = picdiar.make_random_plda(4, np.full(4, 6.0), seed=3)
    data, labels = picdiar.sample_generative(truth, 30, 12, seed=4)
    model = picdiar.fit_plda(data, labels)
    assert model.psi.shape == (4,)
    assert np.all(model.psi >= 0.0)
    projected = picdiar.project_rows(model, data)
    scores = picdiar.score_matrix(model, projected)
    assert np.allclose(scores, scores.T)
    # Same-speaker pairs should outscore different-speaker pairs on average.
    labels = np.asarray(labels)
    same = scores[np.ix_(labels == "spk0", labels == "spk0")]
    diff = scores[np.ix_(labels == "spk0", labels == "spk1")]
    assert same.mean() > diff.mean()


def test_pic_cluster_separates_blobs():
    rng = np.random.default_rng(1)
    pts = np.vstack([rng.normal(0, 0.3, (12, 2)), rng.normal(8, 0.3, (12, 2))])
    scores = 4.0 - np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=2)
    labels = picdiar.pic_cluster(scores, knn=6, sigma=0.2, num_clusters=2)
    labels = np.asarray(labels)
    assert len(set(labels[:12])) == 1
    assert len(set(labels[12:])) == 1
    assert labels[0] != labels[12]
    assert picdiar.estimate_num_clusters(scores, knn=6, sigma=0.2, threshold=0.7) == 2


def test_ahc_threshold_modes():
    scores = np.array([[0.0, 0.5], [0.5, 0.0]])
    assert len(set(picdiar.ahc_cluster(scores, threshold=0.0))) == 1
    scores[0, 1] = scores[1, 0] = -0.5
    assert len(set(picdiar.ahc_cluster(scores, threshold=0.0))) == 2


def test_temporal_continuity_values():
    scores = np.full((12, 12), 0.8)
    out = picdiar.temporal_continuity(scores, 0.9, 5)
    assert out[0, 2] == pytest.approx(0.648, abs=1e-12)
    assert out[3, 3] == pytest.approx(0.8, abs=1e-15)


def test_compute_der_fixture():
    ref = [(0.0, 4.0, "A"), (4.0, 4.0, "B")]
    hyp = [(0.0, 8.0, "X")]
    report = picdiar.compute_der("rec", ref, hyp, collar=0.0, score_overlap=True)
    assert report.scored_speech == pytest.approx(8.0)
    assert report.der == pytest.approx(0.5)
    perfect = picdiar.compute_der("rec", ref, ref, collar=0.25, score_overlap=False)
    assert perfect.der == 0.0


def test_preprocess_chain():
    rng = np.random.default_rng(5)
    data = rng.normal(size=(200, 6)) * np.array([3.0, 2.0, 1.0, 1.0, 0.5, 0.2])
    wt = picdiar.fit_whitening(data)
    white = picdiar.apply_whitening(wt, data)
    cov = np.cov(white, rowvar=False)
    assert np.allclose(cov, np.eye(6), atol=1e-6)
    pca = picdiar.fit_recording_pca(white, fixed_dims=3)
    assert pca.basis.shape == (3, 6)
    assert np.allclose(pca.basis @ pca.basis.T, np.eye(3), atol=1e-8)


def test_sample_generative_deterministic():
    truth = picdiar.make_random_plda(3, np.array([5.0, 2.0, 1.0]), seed=11)
    a, la = picdiar.sample_generative(truth, 4, 5, seed=7)
    b, lb = picdiar.sample_generative(truth, 4, 5, seed=7)
    assert np.array_equal(a, b)
    assert la == lb


def test_selfsup_cluster_end_to_end():
    truth = picdiar.make_random_plda(10, np.full(10, 5.0), seed=21)
    dev, dev_labels = picdiar.sample_generative(truth, 25, 10, seed=22)
    wt = picdiar.fit_whitening(dev)
    conditioned = picdiar.length_normalize_rows(picdiar.apply_whitening(wt, dev))
    plda = picdiar.fit_plda(conditioned, dev_labels)

    x, true_labels = picdiar.synth_recording(truth, n_speakers=3, n_segments=60, seed=23)
    labels = np.asarray(
        picdiar.selfsup_cluster(
            x, wt, plda, num_clusters=3, pca_dims=8, knn=15,
            epochs=10, outer_iterations=1, seed=24,
        )
    )
    assert labels.shape == (60,)
    assert len(set(labels.tolist())) == 3
    # Clustering should align with the ground truth up to relabeling.
    true_labels = np.asarray(true_labels)
    agreement = sum(
        max(np.sum(true_labels[labels == c] == t) for t in range(3))
        for c in range(3)
    )
    assert agreement / 60.0 > 0.9


def test_errors_surface_as_python_exceptions():
    with pytest.raises(picdiar.PicdiarError):
        picdiar.uniform_segments(1.0, 1.5, 0.75)
    spans = picdiar.uniform_segments(4.0, 1.5, 0.75)
    assert [s[0] for s in spans] == pytest.approx([0.0, 0.75, 1.5, 2.25, 3.0])
