// picdiar/plda.cpp

#include "picdiar/plda.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "picdiar/rng.hpp"

namespace picdiar {

namespace {

constexpr double kEigFloorRel = 1e-8;

void fix_column_signs(Matrix& vectors) {
  for (int j = 0; j < vectors.cols(); ++j) {
    int argmax = 0;
    vectors.col(j).cwiseAbs().maxCoeff(&argmax);
    if (vectors(argmax, j) < 0.0) vectors.col(j) = -vectors.col(j);
  }
}

std::pair<Vector, Matrix> eigh_descending(const Matrix& sym) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
  if (solver.info() != Eigen::Success) throw Error("eigendecomposition failed");
  const int d = static_cast<int>(sym.rows());
  Vector values(d);
  Matrix vectors(d, d);
  for (int j = 0; j < d; ++j) {
    values(j) = solver.eigenvalues()(d - 1 - j);
    vectors.col(j) = solver.eigenvectors().col(d - 1 - j);
  }
  fix_column_signs(vectors);
  return {values, vectors};
}

// V from scatter matrices: whiten Phi_w, then rotate to diagonalize the
// whitened Phi_b. Psi comes out sorted descending.
PldaModel diagonalize(const Vector& mean, const Matrix& phi_w, const Matrix& phi_b) {
  const int d = static_cast<int>(mean.size());

  auto [w_values, w_vectors] = eigh_descending(phi_w);
  const double floor = kEigFloorRel * w_values(0);
  if (!(floor > 0.0))
    throw Error("fit_plda: within-class scatter is singular");
  Vector inv_sqrt(d);
  for (int j = 0; j < d; ++j) inv_sqrt(j) = 1.0 / std::sqrt(std::max(w_values(j), floor));
  Matrix whitener = inv_sqrt.asDiagonal() * w_vectors.transpose();

  Matrix b_white = whitener * phi_b * whitener.transpose();
  b_white = 0.5 * (b_white + b_white.transpose());  // symmetrize roundoff
  auto [psi, rotation] = eigh_descending(b_white);

  PldaModel model;
  model.dim = d;
  model.mean = mean;
  model.diagonalizer = rotation.transpose() * whitener;
  model.bias = model.diagonalizer * mean;
  model.psi = psi.cwiseMax(0.0);
  return model;
}

}  // namespace

Matrix PldaModel::inverse_diagonalizer() const {
  return diagonalizer.partialPivLu().inverse();
}

PldaModel fit_plda(const Matrix& data, const std::vector<std::string>& labels) {
  const int n = static_cast<int>(data.rows());
  const int d = static_cast<int>(data.cols());
  if (static_cast<int>(labels.size()) != n)
    throw Error("fit_plda: label count does not match row count");

  std::map<std::string, std::vector<int>> by_speaker;
  for (int i = 0; i < n; ++i) by_speaker[labels[i]].push_back(i);
  const int n_speakers = static_cast<int>(by_speaker.size());
  if (n_speakers < 2) throw Error("fit_plda: need at least 2 speakers");
  for (const auto& [label, members] : by_speaker)
    if (members.size() < 2)
      throw Error("fit_plda: speaker '" + label + "' has fewer than 2 examples");

  const Vector global_mean = data.colwise().mean();
  Matrix phi_w = Matrix::Zero(d, d);
  Matrix phi_b = Matrix::Zero(d, d);
  for (const auto& [label, members] : by_speaker) {
    Vector speaker_mean = Vector::Zero(d);
    for (int i : members) speaker_mean += data.row(i).transpose();
    speaker_mean /= static_cast<double>(members.size());
    for (int i : members) {
      Vector delta = data.row(i).transpose() - speaker_mean;
      phi_w += delta * delta.transpose();
    }
    Vector offset = speaker_mean - global_mean;
    phi_b += static_cast<double>(members.size()) * offset * offset.transpose();
  }
  phi_w /= static_cast<double>(n - n_speakers);
  phi_b /= static_cast<double>(n);

  return diagonalize(global_mean, phi_w, phi_b);
}

Vector project(const PldaModel& model, const Vector& x) {
  if (x.size() != model.dim) throw Error("project: dimension mismatch");
  if (!x.allFinite()) throw Error("project: non-finite input");
  return model.diagonalizer * x - model.bias;
}

Matrix project_rows(const PldaModel& model, const Matrix& rows) {
  if (rows.cols() != model.dim) throw Error("project: dimension mismatch");
  return (rows * model.diagonalizer.transpose()).rowwise() - model.bias.transpose();
}

double plda_llr(const Vector& psi, const Vector& ui, const Vector& uj) {
  if (ui.size() != psi.size() || uj.size() != psi.size())
    throw Error("plda_llr: dimension mismatch");
  double score = 0.0;
  for (int k = 0; k < psi.size(); ++k) {
    const double p = psi(k);
    const double a = p + 1.0;       // marginal variance
    const double det2 = 2.0 * p + 1.0;  // determinant of the 2x2 same-speaker covariance
    const double sq = ui(k) * ui(k) + uj(k) * uj(k);
    const double cross = ui(k) * uj(k);
    score += -0.5 * std::log(det2) + std::log(a) -
             (a * sq - 2.0 * p * cross) / (2.0 * det2) + sq / (2.0 * a);
  }
  return score;
}

double score_pair(const PldaModel& model, const Vector& ui, const Vector& uj) {
  if (!ui.allFinite() || !uj.allFinite()) throw Error("score_pair: non-finite input");
  return plda_llr(model.psi, ui, uj);
}

Matrix score_matrix(const PldaModel& model, const Matrix& projected) {
  const int n = static_cast<int>(projected.rows());
  if (n < 2) throw Error("score_matrix: need at least 2 embeddings");
  Matrix scores(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      const double s = score_pair(model, projected.row(i), projected.row(j));
      scores(i, j) = s;
      scores(j, i) = s;
    }
  }
  return scores;
}

std::pair<Matrix, std::vector<std::string>> sample_generative(
    const PldaModel& model, int n_speakers, int n_segments_per_speaker, uint64_t seed) {
  if (n_speakers < 1 || n_segments_per_speaker < 1)
    throw Error("sample_generative: counts must be >= 1");
  Rng rng(seed);
  const int d = model.dim;
  const Matrix mixing = model.inverse_diagonalizer();
  Matrix out(n_speakers * n_segments_per_speaker, d);
  std::vector<std::string> labels(out.rows());
  Vector psi_sqrt = model.psi.cwiseSqrt();
  int row = 0;
  for (int s = 0; s < n_speakers; ++s) {
    Vector v(d);
    for (int k = 0; k < d; ++k) v(k) = psi_sqrt(k) * rng.normal();
    for (int t = 0; t < n_segments_per_speaker; ++t, ++row) {
      Vector u(d);
      for (int k = 0; k < d; ++k) u(k) = v(k) + rng.normal();
      out.row(row) = (model.mean + mixing * u).transpose();
      labels[row] = "spk" + std::to_string(s);
    }
  }
  return {std::move(out), std::move(labels)};
}

PldaModel transform_plda(const PldaModel& model, const PcaTransform& pca) {
  if (pca.in_dim() != model.dim) throw Error("transform_plda: dimension mismatch");
  const Matrix mixing = model.inverse_diagonalizer();
  const Matrix phi_w = mixing * mixing.transpose();
  const Matrix phi_b = mixing * model.psi.asDiagonal() * mixing.transpose();
  const Vector mean = pca.basis * (model.mean - pca.mean);
  const Matrix phi_w_p = pca.basis * phi_w * pca.basis.transpose();
  const Matrix phi_b_p = pca.basis * phi_b * pca.basis.transpose();
  return diagonalize(mean, phi_w_p, phi_b_p);
}

void save_plda(const PldaModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write: " + path);
  char buf[40];
  auto row = [&](const Vector& v) {
    for (int j = 0; j < v.size(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.9g", v(j));
      out << (j ? " " : "") << buf;
    }
    out << '\n';
  };
  out << "PLDA " << model.dim << '\n';
  row(model.mean);
  for (int i = 0; i < model.dim; ++i) row(model.diagonalizer.row(i));
  row(model.psi);
  if (!out) throw Error("write failed: " + path);
}

PldaModel load_plda(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open: " + path);
  std::string tag;
  int d = 0;
  if (!(in >> tag >> d) || tag != "PLDA" || d < 1) throw Error(path + ": not a PLDA file");
  PldaModel model;
  model.dim = d;
  model.mean.resize(d);
  model.diagonalizer.resize(d, d);
  model.psi.resize(d);
  for (int j = 0; j < d; ++j)
    if (!(in >> model.mean(j))) throw Error(path + ": truncated");
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      if (!(in >> model.diagonalizer(i, j))) throw Error(path + ": truncated");
  for (int j = 0; j < d; ++j)
    if (!(in >> model.psi(j))) throw Error(path + ": truncated");
  model.bias = model.diagonalizer * model.mean;
  return model;
}

}  // namespace picdiar
