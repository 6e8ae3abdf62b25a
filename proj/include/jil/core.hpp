#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace jil {

enum class ErrorKind {
  InvalidData,
  DegenerateTreatment,
  InvalidPenalty,
  GridTooLarge,
  EmptySegment,
  DimensionMismatch,
  BadFoldCount,
  DegeneratePartition,
  InsufficientData,
  BadSpec,
  MissingTruth,
  SchemaMismatch,
  IoError,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Raised by validate_dataset. `row` is empty for whole-field violations
// such as a length mismatch.
class InvalidDataError : public Error {
 public:
  InvalidDataError(std::string field, std::optional<std::size_t> row,
                   const std::string& detail);
  const std::string& field() const noexcept { return field_; }
  std::optional<std::size_t> row() const noexcept { return row_; }

 private:
  std::string field_;
  std::optional<std::size_t> row_;
};

/// n observations of (covariates, treatment, outcome). Covariates are stored
/// row-major, n rows of p values.
struct Dataset {
  std::vector<double> covariates;
  std::vector<double> treatments;
  std::vector<double> outcomes;
  std::size_t n = 0;
  std::size_t p = 0;

  std::span<const double> row(std::size_t i) const {
    return {covariates.data() + i * p, p};
  }

  Dataset subset(std::span<const std::size_t> rows) const;
};

/// Grid-aligned interval [lo/m, hi/m), closed on the right only when hi == m.
struct Interval {
  int lo = 0;
  int hi = 1;
  int m = 1;

  Interval() = default;
  Interval(int lo_, int hi_, int m_);

  double left() const { return static_cast<double>(lo) / m; }
  double right() const { return static_cast<double>(hi) / m; }
  double length() const { return static_cast<double>(hi - lo) / m; }
  bool contains(double a) const;

  friend bool operator==(const Interval&, const Interval&) = default;
};

/// Grid cell index of a treatment value in [0, 1]; a == 1 maps to cell m - 1.
int grid_cell(double a, int m);

class Partition {
 public:
  Partition() = default;
  explicit Partition(std::vector<Interval> intervals);

  /// Builds a partition of the m-grid from sorted interior boundaries.
  static Partition from_boundaries(int m, std::span<const int> interior);
  static Partition whole(int m) { return Partition({Interval(0, m, m)}); }

  const std::vector<Interval>& intervals() const { return intervals_; }
  std::size_t size() const { return intervals_.size(); }
  int m() const { return intervals_.empty() ? 0 : intervals_.front().m; }
  const Interval& operator[](std::size_t k) const { return intervals_[k]; }

  /// Index of the unique interval containing a.
  std::size_t locate(double a) const;
  std::vector<int> interior_boundaries() const;

  friend bool operator==(const Partition&, const Partition&) = default;

 private:
  std::vector<Interval> intervals_;
};

struct LinearModel {
  std::vector<double> theta;  // intercept first
};

/// Feed-forward ReLU network [p, h1, ..., hL, 1]; identity on the output.
/// Training and evaluation live in mlp.hpp.
struct MlpModel {
  std::vector<std::size_t> layer_sizes;
  std::vector<std::vector<double>> weights;  // layer l: out x in, row-major
  std::vector<std::vector<double>> biases;
};

using SegmentModel = std::variant<LinearModel, MlpModel>;

/// Prediction of a single segment model at covariate row x.
double predict(const SegmentModel& model, std::span<const double> x);

enum class Method { Linear, Deep };

struct JilFit {
  Partition partition;
  std::vector<SegmentModel> models;
  int m = 1;
  double lambda = 0.0;
  double gamma = 0.0;
  double objective = 0.0;
  Method method = Method::Linear;
};

/// m = max(1, floor(n / c)).
int make_grid(std::size_t n, double c);

/// Min-max normalization of raw treatments onto [0, 1].
std::vector<double> normalize_treatment(std::span<const double> raw);

void validate_dataset(const Dataset& d);

}  // namespace jil
