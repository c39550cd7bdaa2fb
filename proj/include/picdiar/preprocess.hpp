// picdiar/preprocess.hpp
//
// Embedding conditioning chain: mean normalization + whitening fitted on a
// development set, length normalization, and recording-level PCA.

#pragma once

#include <string>
#include <utility>

#include "picdiar/types.hpp"

namespace picdiar {

// y = transform * (x - mean). Fitted so the fitting set becomes white.
struct WhiteningTransform {
  Vector mean;
  Matrix transform;  // D x D

  int dim() const { return static_cast<int>(mean.size()); }
};

// z = basis * (y - mean); basis rows orthonormal, variances nonincreasing.
struct PcaTransform {
  Vector mean;                // D
  Matrix basis;               // d x D
  Vector explained_variance;  // d

  int in_dim() const { return static_cast<int>(mean.size()); }
  int out_dim() const { return static_cast<int>(basis.rows()); }
};

struct PcaMode {
  enum class Kind { FixedDims, VarianceFraction };
  Kind kind = Kind::FixedDims;
  int dims = 0;
  double fraction = 0.0;

  static PcaMode fixed(int d) { return {Kind::FixedDims, d, 0.0}; }
  static PcaMode variance(double f) { return {Kind::VarianceFraction, 0, f}; }
};

// ZCA-style whitening: transform = Lambda^{-1/2} U^T from the eigendecomposition
// of the sample covariance (unbiased, n-1), eigenvalues floored at
// 1e-8 * lambda_max. Eigenvector signs fixed so the largest-magnitude entry
// of each is positive. Rows of `data` are the fitting vectors.
WhiteningTransform fit_whitening(const Matrix& data);

Vector length_normalize(const Vector& x);
Matrix length_normalize_rows(const Matrix& rows);

// Recording-level PCA about the recording mean. The retained dimension is
// capped at min(N_r - 1, D) in both modes.
PcaTransform fit_recording_pca(const Matrix& rows, const PcaMode& mode);

Matrix apply_whitening(const WhiteningTransform& wt, const Matrix& rows);
Matrix apply_pca(const PcaTransform& pca, const Matrix& rows);

// Full chain in fixed order: whiten, length-normalize, fit + apply
// recording-level PCA. Returns the reduced recording and the fitted PCA.
std::pair<RecordingEmbeddings, PcaTransform> preprocess_recording(
    const RecordingEmbeddings& rec, const WhiteningTransform& wt, const PcaMode& mode);

// Persistence: `WHITEN <D>` / `PCA <d> <D>` header, mean row, matrix rows;
// PCA files carry the explained-variance row last.
void save_whitening(const WhiteningTransform& wt, const std::string& path);
WhiteningTransform load_whitening(const std::string& path);
void save_pca(const PcaTransform& pca, const std::string& path);
PcaTransform load_pca(const std::string& path);

}  // namespace picdiar
