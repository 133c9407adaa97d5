#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace ltce {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using IntVector = Eigen::VectorXi;
using IndicatorMatrix = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

// One outcome stage over all units. An empty optional is a missing value.
using OutcomeColumn = std::vector<std::optional<double>>;

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public DataError {
 public:
  ParseError(const std::string& what, std::size_t row, std::string column)
      : DataError(what), row_(row), column_(std::move(column)) {}
  std::size_t row() const { return row_; }
  const std::string& column() const { return column_; }

 private:
  std::size_t row_;
  std::string column_;
};

// Stages are 1-based throughout the public API: stage t in [1, T], stage T is
// the long-term outcome.
struct MonotoneViolation {
  Index unit;
  int stage;        // R[unit, stage] == 0
  int later_stage;  // R[unit, later_stage] == 1
};

class MonotoneViolationError : public DataError {
 public:
  explicit MonotoneViolationError(MonotoneViolation v);
  const MonotoneViolation& violation() const { return v_; }

 private:
  MonotoneViolation v_;
};

class ShapeError : public DataError {
 public:
  using DataError::DataError;
};

class PresenceError : public DataError {
 public:
  PresenceError(const std::string& what, Index unit, int stage)
      : DataError(what), unit_(unit), stage_(stage) {}
  Index unit() const { return unit_; }
  int stage() const { return stage_; }

 private:
  Index unit_;
  int stage_;
};

// Returns nullopt when every row of R is non-increasing, otherwise the first
// offending (unit, t, t') in row-major scan order.
std::optional<MonotoneViolation> validate_monotone(const IndicatorMatrix& R);

// Observed panel: covariates, binary treatment, T outcome stages with explicit
// absence, and the observation indicators. Immutable once built; create()
// enforces monotone missingness and presence consistency.
class LongTermDataset {
 public:
  static LongTermDataset create(Matrix covariates, IntVector treatment,
                                std::vector<OutcomeColumn> outcomes, IndicatorMatrix observed);

  // Convenience: indicators derived from outcome presence.
  static LongTermDataset from_outcomes(Matrix covariates, IntVector treatment,
                                       std::vector<OutcomeColumn> outcomes);

  Index size() const { return x_.rows(); }
  Index num_covariates() const { return x_.cols(); }
  int stages() const { return static_cast<int>(outcomes_.size()); }
  int short_term_stages() const { return stages() - 1; }

  const Matrix& covariates() const { return x_; }
  const IntVector& treatment() const { return a_; }
  const IndicatorMatrix& observed() const { return r_; }
  const OutcomeColumn& outcome(int stage) const;
  const OutcomeColumn& long_term() const { return outcomes_.back(); }
  bool is_observed(Index unit, int stage) const { return r_(unit, stage - 1) != 0; }

  // Value of stage `stage` for `unit`; throws if absent.
  double value(Index unit, int stage) const;

  // Returns a copy with outcomes masked wherever `observed` is 0. Every entry
  // with observed == 1 must already be present.
  LongTermDataset with_observed(const IndicatorMatrix& observed) const;

  // Rows `units`, in the given order.
  LongTermDataset subset(const std::vector<Index>& units) const;

  bool operator==(const LongTermDataset& other) const;

 private:
  LongTermDataset() = default;
  Matrix x_;
  IntVector a_;
  std::vector<OutcomeColumn> outcomes_;
  IndicatorMatrix r_;
};

// Units with R[i, stage] == 1, ascending.
std::vector<Index> observed_subset(const LongTermDataset& ds, int stage);

// Potential outcomes for a synthetic panel. short_term[t-1] is n x 2 with
// column a holding S_t(a).
struct GroundTruth {
  std::vector<Matrix> short_term;
  Matrix long_term;  // n x 2
  double tau = 0.0;
  Vector tau_x;
};

// Column layout of the wide CSV format.
struct CsvSchema {
  std::vector<std::string> covariates;
  std::string treatment = "a";
  std::vector<std::string> short_term;
  std::string long_term = "y";
  std::vector<std::string> observed;

  // x1..xp, a, s1..s{T-1}, y, r1..rT
  static CsvSchema standard(Index p, int stages);
  // Builds the standard schema from the x* / s* / r* columns of a header.
  static CsvSchema infer(const std::vector<std::string>& header);
};

LongTermDataset load_csv(const std::string& path, const CsvSchema& schema);
LongTermDataset load_csv(const std::string& path);
void write_csv(const LongTermDataset& ds, const std::string& path);

// Covariate-only CSV (header row, every column numeric).
Matrix load_covariates_csv(const std::string& path);

// y0,y1,tau_x
void write_ground_truth_csv(const GroundTruth& gt, const std::string& path);

}  // namespace ltce
