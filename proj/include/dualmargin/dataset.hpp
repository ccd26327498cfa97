#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dualmargin {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Raised for malformed or inconsistent input data. `line()` is 1-based when
/// the error came from a file, and empty otherwise.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what, std::optional<std::size_t> line = std::nullopt)
      : std::runtime_error(line ? "line " + std::to_string(*line) + ": " + what : what), line_(line) {}

  std::optional<std::size_t> line() const { return line_; }

 private:
  std::optional<std::size_t> line_;
};

/// Raised for invalid solver or CLI configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr double kRowNormSlack = 1e-12;

struct LabeledInput {
  Vector x;
  int y = 1;
};

/// The signed-example matrix Z with rows z_i = -y_i x_i / s.
///
/// Immutable after construction. Every row has Euclidean norm at most
/// 1 + 1e-12, and `scale_factor()` records the global divisor s applied to
/// the raw inputs (margins of the raw problem are margins of Z times s).
class Dataset {
 public:
  static Dataset from_rows(Matrix z, double scale_factor = 1.0) {
    if (z.rows() < 1 || z.cols() < 1)
      throw DataError("dataset needs at least one row and one column");
    if (!(scale_factor > 0.0) || !std::isfinite(scale_factor))
      throw DataError("scale factor must be positive and finite");
    if (!z.allFinite())
      throw DataError("dataset contains non-finite values");
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
      if (z.row(i).norm() > 1.0 + kRowNormSlack)
        throw DataError("row " + std::to_string(i) + " has norm " + std::to_string(z.row(i).norm()) + " > 1");
    }
    return Dataset(std::move(z), scale_factor);
  }

  const Matrix& z() const { return z_; }
  auto row(std::size_t i) const { return z_.row(static_cast<Eigen::Index>(i)); }
  std::size_t n() const { return static_cast<std::size_t>(z_.rows()); }
  std::size_t d() const { return static_cast<std::size_t>(z_.cols()); }
  double scale_factor() const { return scale_factor_; }

 private:
  Dataset(Matrix z, double scale) : z_(std::move(z)), scale_factor_(scale) {}

  Matrix z_;
  double scale_factor_;
};

/// Builds Z from labeled examples. With `normalize`, every input is divided by
/// the single factor max(1, max_i ||x_i||); otherwise inputs must already lie in
/// the unit ball.
inline Dataset build_dataset(std::span<const LabeledInput> examples, bool normalize) {
  if (examples.empty()) throw DataError("empty input");
  const Eigen::Index d = examples.front().x.size();
  if (d < 1) throw DataError("examples must have at least one feature");

  double max_norm = 0.0;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto& ex = examples[i];
    if (ex.x.size() != d)
      throw DataError("example " + std::to_string(i) + " has dimension " + std::to_string(ex.x.size()) +
                      ", expected " + std::to_string(d));
    if (!ex.x.allFinite()) throw DataError("example " + std::to_string(i) + " has non-finite features");
    if (ex.y != 1 && ex.y != -1) throw DataError("example " + std::to_string(i) + " has label outside {-1,+1}");
    max_norm = std::max(max_norm, ex.x.norm());
  }

  double scale = 1.0;
  if (normalize) {
    scale = std::max(1.0, max_norm);
  } else if (max_norm > 1.0 + kRowNormSlack) {
    throw DataError("input norm " + std::to_string(max_norm) + " exceeds 1 and normalization is off");
  }

  Matrix z(static_cast<Eigen::Index>(examples.size()), d);
  for (std::size_t i = 0; i < examples.size(); ++i)
    z.row(static_cast<Eigen::Index>(i)) = (-static_cast<double>(examples[i].y) / scale) * examples[i].x.transpose();
  return Dataset::from_rows(std::move(z), scale);
}

inline Dataset build_dataset(const std::vector<LabeledInput>& examples, bool normalize) {
  return build_dataset(std::span<const LabeledInput>(examples), normalize);
}

/// Normalized margin -max_i <w, z_i> / ||w||; exactly 0 for w = 0.
inline double margin(const Vector& w, const Dataset& ds) {
  if (static_cast<std::size_t>(w.size()) != ds.d())
    throw DataError("weight dimension " + std::to_string(w.size()) + " does not match dataset dimension " +
                    std::to_string(ds.d()));
  if (!w.allFinite()) throw DataError("weight vector has non-finite entries");
  const double norm = w.norm();
  if (norm == 0.0) return 0.0;
  return -(ds.z() * w).maxCoeff() / norm;
}

}  // namespace dualmargin
