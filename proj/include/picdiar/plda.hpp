// picdiar/plda.hpp
//
// Two-covariance PLDA. The model holds the diagonalizing transform V with
// V Phi_w V^T = I and V Phi_b V^T = diag(psi); embeddings are scored in the
// projected space u = V x - b where every dimension is independent, the
// within-class variance is 1 and the between-class variance is psi[k].

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "picdiar/preprocess.hpp"
#include "picdiar/types.hpp"

namespace picdiar {

struct PldaModel {
  int dim = 0;
  Vector mean;           // m
  Matrix diagonalizer;   // V, invertible
  Vector bias;           // b = V m
  Vector psi;            // diagonal between-class variance, >= 0, nonincreasing

  Matrix inverse_diagonalizer() const;  // A = V^{-1}, the generative mixing matrix
};

// Trains from labeled vectors (rows of `data`). Within-class scatter is the
// pooled covariance about speaker means; between-class scatter the
// count-weighted covariance of speaker means about the global mean. V is the
// simultaneous diagonalizer, psi is clamped at 0 and sorted nonincreasing.
PldaModel fit_plda(const Matrix& data, const std::vector<std::string>& labels);

// u = V x - b.
Vector project(const PldaModel& model, const Vector& x);
Matrix project_rows(const PldaModel& model, const Matrix& rows);

// Log-likelihood ratio of same-speaker vs different-speaker hypotheses for a
// pair of projected embeddings: per dimension the same-speaker joint
// covariance is [[psi+1, psi], [psi, psi+1]] and the different-speaker
// hypothesis is two independent N(0, psi+1) variables.
double plda_llr(const Vector& psi, const Vector& ui, const Vector& uj);

double score_pair(const PldaModel& model, const Vector& ui, const Vector& uj);

// S[i][j] = score_pair(u_i, u_j) over the rows of `projected`; symmetric.
Matrix score_matrix(const PldaModel& model, const Matrix& projected);

// Samples Eq-style generative data: v ~ N(0, diag(psi)) per speaker,
// u ~ N(v, I) per segment, x = m + V^{-1} u. Labels are "spk<index>".
std::pair<Matrix, std::vector<std::string>> sample_generative(
    const PldaModel& model, int n_speakers, int n_segments_per_speaker, uint64_t seed);

// Re-expresses the model in a PCA-projected space: the implied covariances
// are mapped through the basis and re-diagonalized.
PldaModel transform_plda(const PldaModel& model, const PcaTransform& pca);

// Persistence: header `PLDA <d>`, then m, V rows, psi.
void save_plda(const PldaModel& model, const std::string& path);
PldaModel load_plda(const std::string& path);

}  // namespace picdiar
