#pragma once

#include "dataset.hpp"
#include "dual_geometry.hpp"
#include "io.hpp"
#include "solvers.hpp"

#include <cmath>
#include <string>
#include <utility>
#include <vector>

namespace dualmargin {

/// N inputs (rows of `inputs`) with labels in {1, ..., k}.
struct MulticlassProblem {
  Matrix inputs;
  std::vector<int> labels;
  int k = 2;

  std::size_t size() const { return static_cast<std::size_t>(inputs.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(inputs.cols()); }

  void validate() const {
    if (inputs.rows() < 1 || inputs.cols() < 1) throw DataError("multiclass problem needs at least one example");
    if (k < 2) throw DataError("multiclass problem needs k >= 2");
    if (labels.size() != size()) throw DataError("label count does not match input count");
    if (!inputs.allFinite()) throw DataError("multiclass inputs contain non-finite values");
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] < 1 || labels[i] > k)
        throw DataError("example " + std::to_string(i) + " has label " + std::to_string(labels[i]) + " outside 1.." +
                        std::to_string(k));
  }
};

/// Weight matrices are d x k; the flattening is column-major, so entry (r, c)
/// sits at flat index c * d + r.
using WeightMatrix = Eigen::MatrixXd;

inline Vector flatten(const WeightMatrix& u) { return Eigen::Map<const Vector>(u.data(), u.size()); }

inline WeightMatrix unflatten(const Vector& w, std::size_t d, int k) {
  if (static_cast<std::size_t>(w.size()) != d * static_cast<std::size_t>(k))
    throw DataError("flat weight has length " + std::to_string(w.size()) + ", expected d*k");
  return Eigen::Map<const WeightMatrix>(w.data(), static_cast<Eigen::Index>(d), k);
}

/// Binary problem whose row pi(i, j) is the flattening of
/// x_i (e_j - e_{c_i})^T / sqrt(2) for every wrong label j != c_i; rows are
/// ordered by example, then by ascending wrong label.
struct FlattenedReduction {
  Dataset binary;
  std::vector<std::pair<std::size_t, int>> index_map;  // row -> (example, wrong label)
  std::size_t d = 0;
  int k = 2;

  std::size_t row_of(std::size_t example, int wrong_label, int correct_label) const {
    const int offset = wrong_label < correct_label ? wrong_label - 1 : wrong_label - 2;
    return example * static_cast<std::size_t>(k - 1) + static_cast<std::size_t>(offset);
  }
};

inline FlattenedReduction reduce(const MulticlassProblem& problem) {
  problem.validate();
  const std::size_t d = problem.dim();
  const int k = problem.k;
  const std::size_t rows = problem.size() * static_cast<std::size_t>(k - 1);
  for (Eigen::Index i = 0; i < problem.inputs.rows(); ++i)
    if (problem.inputs.row(i).norm() > 1.0 + kRowNormSlack)
      throw DataError("multiclass input " + std::to_string(i) + " has norm > 1; normalize first");

  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  Matrix z = Matrix::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(d) * k);
  std::vector<std::pair<std::size_t, int>> index_map;
  index_map.reserve(rows);
  for (std::size_t i = 0; i < problem.size(); ++i) {
    const int c = problem.labels[i];
    const auto x = problem.inputs.row(static_cast<Eigen::Index>(i));
    for (int j = 1; j <= k; ++j) {
      if (j == c) continue;
      const auto r = static_cast<Eigen::Index>(index_map.size());
      z.block(r, static_cast<Eigen::Index>(j - 1) * static_cast<Eigen::Index>(d), 1, static_cast<Eigen::Index>(d)) =
          inv_sqrt2 * x;
      z.block(r, static_cast<Eigen::Index>(c - 1) * static_cast<Eigen::Index>(d), 1, static_cast<Eigen::Index>(d)) =
          -inv_sqrt2 * x;
      index_map.emplace_back(i, j);
    }
  }
  return {Dataset::from_rows(std::move(z)), std::move(index_map), d, k};
}

/// min_i min_{c != c_i} (x_i^T U e_{c_i} - x_i^T U e_c) / ||U||_F, and 0 for U = 0.
inline double multiclass_margin(const WeightMatrix& u, const MulticlassProblem& problem) {
  if (static_cast<std::size_t>(u.rows()) != problem.dim() || u.cols() != problem.k)
    throw DataError("weight matrix shape does not match the problem");
  const double norm = u.norm();
  if (norm == 0.0) return 0.0;
  const Eigen::MatrixXd scores = problem.inputs * u;
  double worst = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    const int c = problem.labels[static_cast<std::size_t>(i)] - 1;
    for (Eigen::Index j = 0; j < scores.cols(); ++j)
      if (j != c) worst = std::min(worst, scores(i, c) - scores(i, j));
  }
  return worst / norm;
}

/// coeffs -= step * unflatten(z_row), touching only the columns of the wrong
/// label and the correct label of the sampled example.
inline void sparse_column_update(WeightMatrix& coeffs, const MulticlassProblem& problem,
                                 const FlattenedReduction& reduction, std::size_t row, double step) {
  const auto [example, wrong] = reduction.index_map.at(row);
  const int correct = problem.labels[example];
  const double scaled = step / std::sqrt(2.0);
  const auto x = problem.inputs.row(static_cast<Eigen::Index>(example)).transpose();
  coeffs.col(wrong - 1) -= scaled * x;
  coeffs.col(correct - 1) += scaled * x;
}

/// Adaptive sampling on the reduction without materializing rows of Z: the
/// scores X U are kept per class, and each sample touches two columns (plus
/// the dense momentum term when beta_t > 0).
class MulticlassSampler {
 public:
  MulticlassSampler(const MulticlassProblem& problem, const FlattenedReduction& reduction, Schedule sched,
                    std::uint64_t seed)
      : problem_(problem),
        reduction_(reduction),
        sched_(std::move(sched)),
        rng_(seed),
        u_(WeightMatrix::Zero(static_cast<Eigen::Index>(problem.dim()), problem.k)),
        g_(u_),
        scores_(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(problem.size()), problem.k)) {}

  /// Binary potentials <F(U), z_pi(i,j)> = (x_i^T u_j - x_i^T u_{c_i}) / sqrt(2).
  Vector potentials() const {
    Vector p(static_cast<Eigen::Index>(reduction_.index_map.size()));
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    for (std::size_t r = 0; r < reduction_.index_map.size(); ++r) {
      const auto [i, j] = reduction_.index_map[r];
      const auto ii = static_cast<Eigen::Index>(i);
      p[static_cast<Eigen::Index>(r)] = (scores_(ii, j - 1) - scores_(ii, problem_.labels[i] - 1)) * inv_sqrt2;
    }
    return p;
  }

  void step() {
    const Vector q = grad_psi(potentials(), Loss::exponential());
    const std::size_t row = sample_categorical(q, rng_.uniform());
    const double beta = sched_.beta(t_);
    const double theta = sched_.theta(t_) / sched_.rho;

    // g_t = beta (g_{t-1} + z)
    if (beta != 1.0) g_ *= beta;
    sparse_column_update(g_, problem_, reduction_, row, -beta);
    // w_{t+1} = w_t - theta g_t - theta z
    if ((g_.array() != 0.0).any()) {
      u_ -= theta * g_;
      scores_ -= theta * (problem_.inputs * g_);
    }
    const auto [example, wrong] = reduction_.index_map[row];
    const int correct = problem_.labels[example];
    sparse_column_update(u_, problem_, reduction_, row, theta);
    const Vector xx = problem_.inputs * problem_.inputs.row(static_cast<Eigen::Index>(example)).transpose();
    const double scaled = theta / std::sqrt(2.0);
    scores_.col(wrong - 1) -= scaled * xx;
    scores_.col(correct - 1) += scaled * xx;
    last_row_ = row;
    ++t_;
  }

  const WeightMatrix& weights() const { return u_; }
  const WeightMatrix& momentum() const { return g_; }
  std::size_t t() const { return t_; }
  std::size_t last_row() const { return last_row_; }

 private:
  const MulticlassProblem& problem_;
  const FlattenedReduction& reduction_;
  Schedule sched_;
  Rng rng_;
  WeightMatrix u_;
  WeightMatrix g_;
  Eigen::MatrixXd scores_;  // X U
  std::size_t t_ = 0;
  std::size_t last_row_ = 0;
};

/// Reads the sparse text format with labels in {1..k}; k is the largest label
/// unless given. With `normalize`, inputs are divided by max(1, max ||x_i||).
inline MulticlassProblem load_multiclass_sparse_text(const std::string& path, bool normalize, int k = 0) {
  auto in = open_or_throw(path);
  const SparseFile file = parse_sparse_text(in);
  if (file.records.empty()) throw DataError("empty input");
  MulticlassProblem problem;
  const std::size_t d = std::max<std::size_t>(file.dimension, 1);
  problem.inputs = Matrix::Zero(static_cast<Eigen::Index>(file.records.size()), static_cast<Eigen::Index>(d));
  int max_label = 0;
  for (std::size_t i = 0; i < file.records.size(); ++i) {
    const auto& rec = file.records[i];
    if (rec.label < 1) throw DataError("multiclass label must be >= 1", rec.line);
    if (k > 0 && rec.label > k) throw DataError("label exceeds class count " + std::to_string(k), rec.line);
    max_label = std::max(max_label, rec.label);
    for (const auto& [idx, v] : rec.features)
      problem.inputs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(idx)) = v;
    problem.labels.push_back(rec.label);
  }
  problem.k = k > 0 ? k : std::max(max_label, 2);
  if (normalize) {
    const double s = std::max(1.0, problem.inputs.rowwise().norm().maxCoeff());
    problem.inputs /= s;
  }
  problem.validate();
  return problem;
}

}  // namespace dualmargin
