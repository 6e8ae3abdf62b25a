#include "jil/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "jil/mlp.hpp"

namespace jil {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidData: return "InvalidData";
    case ErrorKind::DegenerateTreatment: return "DegenerateTreatment";
    case ErrorKind::InvalidPenalty: return "InvalidPenalty";
    case ErrorKind::GridTooLarge: return "GridTooLarge";
    case ErrorKind::EmptySegment: return "EmptySegment";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::BadFoldCount: return "BadFoldCount";
    case ErrorKind::DegeneratePartition: return "DegeneratePartition";
    case ErrorKind::InsufficientData: return "InsufficientData";
    case ErrorKind::BadSpec: return "BadSpec";
    case ErrorKind::MissingTruth: return "MissingTruth";
    case ErrorKind::SchemaMismatch: return "SchemaMismatch";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

namespace {

std::string describe_invalid(const std::string& field,
                             std::optional<std::size_t> row,
                             const std::string& detail) {
  std::ostringstream os;
  os << "invalid " << field;
  if (row) os << " at row " << *row;
  if (!detail.empty()) os << ": " << detail;
  return os.str();
}

}  // namespace

InvalidDataError::InvalidDataError(std::string field,
                                   std::optional<std::size_t> row,
                                   const std::string& detail)
    : Error(ErrorKind::InvalidData, describe_invalid(field, row, detail)),
      field_(std::move(field)),
      row_(row) {}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out;
  out.n = rows.size();
  out.p = p;
  out.covariates.reserve(rows.size() * p);
  out.treatments.reserve(rows.size());
  out.outcomes.reserve(rows.size());
  for (std::size_t i : rows) {
    auto x = row(i);
    out.covariates.insert(out.covariates.end(), x.begin(), x.end());
    out.treatments.push_back(treatments[i]);
    out.outcomes.push_back(outcomes[i]);
  }
  return out;
}

Interval::Interval(int lo_, int hi_, int m_) : lo(lo_), hi(hi_), m(m_) {
  if (m < 1 || lo < 0 || hi <= lo || hi > m) {
    std::ostringstream os;
    os << "bad interval indices lo=" << lo << " hi=" << hi << " m=" << m;
    throw std::invalid_argument(os.str());
  }
}

int grid_cell(double a, int m) {
  // Integer comparisons against a * m keep the half-open rule exact for
  // boundaries that are representable, and floor handles the rest.
  if (a >= 1.0) return m - 1;
  if (a <= 0.0) return 0;
  int cell = static_cast<int>(std::floor(a * m));
  // Guard the rare case where a * m rounds up across a boundary.
  while (cell > 0 && a < static_cast<double>(cell) / m) --cell;
  while (cell + 1 < m && a >= static_cast<double>(cell + 1) / m) ++cell;
  return std::clamp(cell, 0, m - 1);
}

bool Interval::contains(double a) const {
  if (a < 0.0 || a > 1.0) return false;
  int cell = grid_cell(a, m);
  return cell >= lo && cell < hi;
}

Partition::Partition(std::vector<Interval> intervals)
    : intervals_(std::move(intervals)) {
  if (intervals_.empty()) {
    throw Error(ErrorKind::DegeneratePartition, "partition has no intervals");
  }
  const int m = intervals_.front().m;
  if (intervals_.front().lo != 0 || intervals_.back().hi != m) {
    throw std::invalid_argument("partition does not cover [0, 1]");
  }
  for (std::size_t k = 1; k < intervals_.size(); ++k) {
    if (intervals_[k].m != m || intervals_[k].lo != intervals_[k - 1].hi) {
      throw std::invalid_argument("partition intervals do not abut");
    }
  }
}

Partition Partition::from_boundaries(int m, std::span<const int> interior) {
  std::vector<Interval> out;
  out.reserve(interior.size() + 1);
  int lo = 0;
  for (int b : interior) {
    out.emplace_back(lo, b, m);
    lo = b;
  }
  out.emplace_back(lo, m, m);
  return Partition(std::move(out));
}

std::size_t Partition::locate(double a) const {
  const int cell = grid_cell(a, m());
  auto it = std::upper_bound(
      intervals_.begin(), intervals_.end(), cell,
      [](int c, const Interval& iv) { return c < iv.hi; });
  return static_cast<std::size_t>(it - intervals_.begin());
}

std::vector<int> Partition::interior_boundaries() const {
  std::vector<int> out;
  for (std::size_t k = 1; k < intervals_.size(); ++k) {
    out.push_back(intervals_[k].lo);
  }
  return out;
}

double predict(const SegmentModel& model, std::span<const double> x) {
  if (const auto* lin = std::get_if<LinearModel>(&model)) {
    if (lin->theta.size() != x.size() + 1) {
      throw Error(ErrorKind::DimensionMismatch,
                  "covariate length does not match linear model");
    }
    double q = lin->theta[0];
    for (std::size_t j = 0; j < x.size(); ++j) q += lin->theta[j + 1] * x[j];
    return q;
  }
  return mlp_predict(std::get<MlpModel>(model), x);
}

int make_grid(std::size_t n, double c) {
  if (n < 1 || !(c > 0.0)) {
    throw std::invalid_argument("make_grid requires n >= 1 and c > 0");
  }
  const double m = std::floor(static_cast<double>(n) / c);
  return std::max(1, static_cast<int>(m));
}

std::vector<double> normalize_treatment(std::span<const double> raw) {
  if (raw.empty()) {
    throw Error(ErrorKind::DegenerateTreatment, "no treatment values");
  }
  for (double a : raw) {
    if (!std::isfinite(a)) {
      throw Error(ErrorKind::DegenerateTreatment, "non-finite treatment value");
    }
  }
  const auto [lo_it, hi_it] = std::minmax_element(raw.begin(), raw.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (hi == lo) {
    throw Error(ErrorKind::DegenerateTreatment, "treatment range is zero");
  }
  std::vector<double> out(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    out[i] = (raw[i] - lo) / (hi - lo);
  }
  // min and max map exactly onto the endpoints
  out[lo_it - raw.begin()] = 0.0;
  out[hi_it - raw.begin()] = 1.0;
  return out;
}

void validate_dataset(const Dataset& d) {
  if (d.n < 1) throw InvalidDataError("n", std::nullopt, "need n >= 1");
  if (d.covariates.size() != d.n * d.p) {
    throw InvalidDataError("covariates", std::nullopt, "size is not n * p");
  }
  if (d.treatments.size() != d.n) {
    throw InvalidDataError("treatments", std::nullopt, "length is not n");
  }
  if (d.outcomes.size() != d.n) {
    throw InvalidDataError("outcomes", std::nullopt, "length is not n");
  }
  for (std::size_t i = 0; i < d.n; ++i) {
    for (double v : d.row(i)) {
      if (!std::isfinite(v)) {
        throw InvalidDataError("covariates", i, "non-finite value");
      }
    }
    const double a = d.treatments[i];
    if (!std::isfinite(a) || a < 0.0 || a > 1.0) {
      throw InvalidDataError("treatments", i, "outside [0, 1]");
    }
    if (!std::isfinite(d.outcomes[i])) {
      throw InvalidDataError("outcomes", i, "non-finite value");
    }
  }
}

}  // namespace jil
