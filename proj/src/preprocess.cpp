// picdiar/preprocess.cpp

#include "picdiar/preprocess.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace picdiar {

namespace {

constexpr double kEigFloorRel = 1e-8;

// Flips eigenvector signs so each column's largest-magnitude entry is
// positive; removes the sign ambiguity of eigendecompositions.
void fix_column_signs(Matrix& vectors) {
  for (int j = 0; j < vectors.cols(); ++j) {
    int argmax = 0;
    vectors.col(j).cwiseAbs().maxCoeff(&argmax);
    if (vectors(argmax, j) < 0.0) vectors.col(j) = -vectors.col(j);
  }
}

// Symmetric eigendecomposition with eigenvalues sorted descending and the
// sign convention applied. Returns (eigenvalues, eigenvectors-as-columns).
std::pair<Vector, Matrix> eigh_descending(const Matrix& sym) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
  if (solver.info() != Eigen::Success)
    throw Error("eigendecomposition failed");
  const int d = static_cast<int>(sym.rows());
  Vector values(d);
  Matrix vectors(d, d);
  for (int j = 0; j < d; ++j) {  // Eigen sorts ascending; reverse
    values(j) = solver.eigenvalues()(d - 1 - j);
    vectors.col(j) = solver.eigenvectors().col(d - 1 - j);
  }
  fix_column_signs(vectors);
  return {values, vectors};
}

Matrix sample_covariance(const Matrix& rows, const Vector& mean) {
  const int n = static_cast<int>(rows.rows());
  Matrix centered = rows.rowwise() - mean.transpose();
  return centered.transpose() * centered / static_cast<double>(n - 1);
}

void write_matrix_rows(std::ofstream& out, const Matrix& m) {
  char buf[40];
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.9g", m(i, j));
      out << (j ? " " : "") << buf;
    }
    out << '\n';
  }
}

Vector read_vector_line(std::ifstream& in, int n, const std::string& path) {
  std::string line;
  do {
    if (!std::getline(in, line)) throw Error(path + ": truncated file");
  } while (line.empty() || line[0] == '#');
  std::istringstream iss(line);
  Vector v(n);
  for (int j = 0; j < n; ++j)
    if (!(iss >> v(j))) throw Error(path + ": truncated row");
  return v;
}

}  // namespace

WhiteningTransform fit_whitening(const Matrix& data) {
  const int n = static_cast<int>(data.rows());
  const int d = static_cast<int>(data.cols());
  if (n < 2) throw Error("fit_whitening: need at least 2 vectors");
  if (!data.allFinite()) throw Error("fit_whitening: non-finite input");

  WhiteningTransform wt;
  wt.mean = data.colwise().mean();
  Matrix cov = sample_covariance(data, wt.mean);

  auto [values, vectors] = eigh_descending(cov);
  const double floor = kEigFloorRel * values(0);
  if (!(floor > 0.0)) throw Error("fit_whitening: degenerate covariance (all points identical)");
  Vector inv_sqrt(d);
  for (int j = 0; j < d; ++j) inv_sqrt(j) = 1.0 / std::sqrt(std::max(values(j), floor));
  wt.transform = inv_sqrt.asDiagonal() * vectors.transpose();
  return wt;
}

Vector length_normalize(const Vector& x) {
  const double norm = x.norm();
  if (norm == 0.0) return x;
  return x / norm;
}

Matrix length_normalize_rows(const Matrix& rows) {
  Matrix out = rows;
  for (int i = 0; i < out.rows(); ++i) {
    const double norm = out.row(i).norm();
    if (norm != 0.0) out.row(i) /= norm;
  }
  return out;
}

PcaTransform fit_recording_pca(const Matrix& rows, const PcaMode& mode) {
  const int n = static_cast<int>(rows.rows());
  const int d = static_cast<int>(rows.cols());
  if (n < 2) throw Error("fit_recording_pca: need at least 2 segments");

  PcaTransform pca;
  pca.mean = rows.colwise().mean();
  Matrix cov = sample_covariance(rows, pca.mean);
  auto [values, vectors] = eigh_descending(cov);
  values = values.cwiseMax(0.0);

  const int rank_cap = std::min(n - 1, d);
  int keep = 0;
  if (mode.kind == PcaMode::Kind::FixedDims) {
    if (mode.dims < 1) throw Error("fit_recording_pca: fixed dims must be >= 1");
    keep = std::min(mode.dims, rank_cap);
  } else {
    if (!(mode.fraction > 0.0) || mode.fraction > 1.0)
      throw Error("fit_recording_pca: variance fraction must be in (0, 1]");
    const double total = values.sum();
    double cum = 0.0;
    keep = rank_cap;
    for (int j = 0; j < rank_cap; ++j) {
      cum += values(j);
      if (cum >= mode.fraction * total) {
        keep = j + 1;
        break;
      }
    }
  }
  keep = std::max(keep, 1);

  pca.basis = vectors.leftCols(keep).transpose();
  pca.explained_variance = values.head(keep);
  return pca;
}

Matrix apply_whitening(const WhiteningTransform& wt, const Matrix& rows) {
  if (rows.cols() != wt.dim())
    throw Error("apply_whitening: dimension mismatch (" + std::to_string(rows.cols()) +
                " vs " + std::to_string(wt.dim()) + ")");
  return (rows.rowwise() - wt.mean.transpose()) * wt.transform.transpose();
}

Matrix apply_pca(const PcaTransform& pca, const Matrix& rows) {
  if (rows.cols() != pca.in_dim()) throw Error("apply_pca: dimension mismatch");
  return (rows.rowwise() - pca.mean.transpose()) * pca.basis.transpose();
}

std::pair<RecordingEmbeddings, PcaTransform> preprocess_recording(
    const RecordingEmbeddings& rec, const WhiteningTransform& wt, const PcaMode& mode) {
  Matrix whitened = apply_whitening(wt, rec.matrix);
  Matrix normalized = length_normalize_rows(whitened);
  PcaTransform pca = fit_recording_pca(normalized, mode);

  RecordingEmbeddings out;
  out.recording_id = rec.recording_id;
  out.segments = rec.segments;
  out.matrix = apply_pca(pca, normalized);
  out.dim = static_cast<int>(out.matrix.cols());
  return {std::move(out), std::move(pca)};
}

void save_whitening(const WhiteningTransform& wt, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write: " + path);
  out << "WHITEN " << wt.dim() << '\n';
  write_matrix_rows(out, wt.mean.transpose());
  write_matrix_rows(out, wt.transform);
  if (!out) throw Error("write failed: " + path);
}

WhiteningTransform load_whitening(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open: " + path);
  std::string tag;
  int d = 0;
  if (!(in >> tag >> d) || tag != "WHITEN" || d < 1)
    throw Error(path + ": not a WHITEN file");
  std::string rest;
  std::getline(in, rest);
  WhiteningTransform wt;
  wt.mean = read_vector_line(in, d, path);
  wt.transform.resize(d, d);
  for (int i = 0; i < d; ++i) wt.transform.row(i) = read_vector_line(in, d, path);
  return wt;
}

void save_pca(const PcaTransform& pca, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write: " + path);
  out << "PCA " << pca.out_dim() << ' ' << pca.in_dim() << '\n';
  write_matrix_rows(out, pca.mean.transpose());
  write_matrix_rows(out, pca.basis);
  write_matrix_rows(out, pca.explained_variance.transpose());
  if (!out) throw Error("write failed: " + path);
}

PcaTransform load_pca(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open: " + path);
  std::string tag;
  int d = 0, big_d = 0;
  if (!(in >> tag >> d >> big_d) || tag != "PCA" || d < 1 || big_d < d)
    throw Error(path + ": not a PCA file");
  std::string rest;
  std::getline(in, rest);
  PcaTransform pca;
  pca.mean = read_vector_line(in, big_d, path);
  pca.basis.resize(d, big_d);
  for (int i = 0; i < d; ++i) pca.basis.row(i) = read_vector_line(in, big_d, path);
  pca.explained_variance = read_vector_line(in, d, path);
  return pca;
}

}  // namespace picdiar
