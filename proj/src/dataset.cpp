#include "ltce/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

namespace ltce {

namespace {

std::string describe(const MonotoneViolation& v) {
  std::ostringstream os;
  os << "monotone missingness violated for unit " << v.unit << ": R[" << v.stage
     << "] = 0 but R[" << v.later_stage << "] = 1";
  return os.str();
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) {
    auto b = cell.find_first_not_of(" \t\r");
    auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& cell, std::size_t row, const std::string& column) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = first + cell.size();
  if (!cell.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (cell.empty() || ec != std::errc() || ptr != last || !std::isfinite(v)) {
    throw ParseError("cannot parse '" + cell + "' as a finite number at row " +
                         std::to_string(row) + ", column '" + column + "'",
                     row, column);
  }
  return v;
}

int parse_binary(const std::string& cell, std::size_t row, const std::string& column) {
  double v = parse_number(cell, row, column);
  if (v != 0.0 && v != 1.0) {
    throw ParseError("expected 0 or 1 at row " + std::to_string(row) + ", column '" + column + "'",
                     row, column);
  }
  return static_cast<int>(v);
}

void write_double(std::ostream& os, double v) {
  os << std::setprecision(17) << v;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

CsvTable read_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw ParseError("missing header row in '" + path + "'", 0, "");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  t.header = split_line(line);
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto cells = split_line(line);
    if (cells.size() != t.header.size()) {
      throw ParseError("row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                           " cells, header has " + std::to_string(t.header.size()),
                       row, "");
    }
    t.rows.push_back(std::move(cells));
  }
  return t;
}

std::size_t column_index(const CsvTable& t, const std::string& name) {
  auto it = std::find(t.header.begin(), t.header.end(), name);
  if (it == t.header.end()) throw ParseError("header lacks column '" + name + "'", 0, name);
  return static_cast<std::size_t>(it - t.header.begin());
}

}  // namespace

MonotoneViolationError::MonotoneViolationError(MonotoneViolation v)
    : DataError(describe(v)), v_(v) {}

std::optional<MonotoneViolation> validate_monotone(const IndicatorMatrix& R) {
  for (Index i = 0; i < R.rows(); ++i) {
    for (Index t = 0; t < R.cols(); ++t) {
      if (R(i, t) != 0) continue;
      for (Index u = t + 1; u < R.cols(); ++u) {
        if (R(i, u) != 0) {
          return MonotoneViolation{i, static_cast<int>(t + 1), static_cast<int>(u + 1)};
        }
      }
      break;
    }
  }
  return std::nullopt;
}

LongTermDataset LongTermDataset::create(Matrix covariates, IntVector treatment,
                                        std::vector<OutcomeColumn> outcomes,
                                        IndicatorMatrix observed) {
  const Index n = covariates.rows();
  if (outcomes.size() < 2) throw ShapeError("need at least two outcome stages (T >= 2)");
  if (treatment.size() != n) throw ShapeError("treatment length does not match covariate rows");
  if (observed.rows() != n || observed.cols() != static_cast<Index>(outcomes.size())) {
    throw ShapeError("observation matrix must be n x T");
  }
  if (!covariates.allFinite()) throw DataError("covariates must be finite");
  for (Index i = 0; i < n; ++i) {
    if (treatment(i) != 0 && treatment(i) != 1) throw DataError("treatment must be binary");
  }
  for (std::size_t t = 0; t < outcomes.size(); ++t) {
    if (static_cast<Index>(outcomes[t].size()) != n) {
      throw ShapeError("outcome stage " + std::to_string(t + 1) + " has wrong length");
    }
    for (Index i = 0; i < n; ++i) {
      const auto r = observed(i, static_cast<Index>(t));
      if (r > 1) throw DataError("observation indicators must be binary");
      const bool present = outcomes[t][static_cast<std::size_t>(i)].has_value();
      if (present != (r == 1)) {
        throw PresenceError("outcome presence disagrees with R for unit " + std::to_string(i) +
                                " at stage " + std::to_string(t + 1),
                            i, static_cast<int>(t + 1));
      }
      if (present && !std::isfinite(*outcomes[t][static_cast<std::size_t>(i)])) {
        throw DataError("outcomes must be finite");
      }
    }
  }
  if (auto v = validate_monotone(observed)) throw MonotoneViolationError(*v);

  LongTermDataset ds;
  ds.x_ = std::move(covariates);
  ds.a_ = std::move(treatment);
  ds.outcomes_ = std::move(outcomes);
  ds.r_ = std::move(observed);
  return ds;
}

LongTermDataset LongTermDataset::from_outcomes(Matrix covariates, IntVector treatment,
                                               std::vector<OutcomeColumn> outcomes) {
  const Index n = covariates.rows();
  IndicatorMatrix r(n, static_cast<Index>(outcomes.size()));
  for (std::size_t t = 0; t < outcomes.size(); ++t) {
    if (static_cast<Index>(outcomes[t].size()) != n) throw ShapeError("outcome length mismatch");
    for (Index i = 0; i < n; ++i) {
      r(i, static_cast<Index>(t)) = outcomes[t][static_cast<std::size_t>(i)].has_value() ? 1 : 0;
    }
  }
  return create(std::move(covariates), std::move(treatment), std::move(outcomes), std::move(r));
}

const OutcomeColumn& LongTermDataset::outcome(int stage) const {
  if (stage < 1 || stage > stages()) throw std::out_of_range("stage out of range");
  return outcomes_[static_cast<std::size_t>(stage - 1)];
}

double LongTermDataset::value(Index unit, int stage) const {
  const auto& v = outcome(stage)[static_cast<std::size_t>(unit)];
  if (!v) throw DataError("outcome is missing");
  return *v;
}

LongTermDataset LongTermDataset::with_observed(const IndicatorMatrix& observed) const {
  if (observed.rows() != size() || observed.cols() != stages()) {
    throw ShapeError("observation matrix must be n x T");
  }
  auto outcomes = outcomes_;
  for (std::size_t t = 0; t < outcomes.size(); ++t) {
    for (Index i = 0; i < size(); ++i) {
      if (observed(i, static_cast<Index>(t)) == 0) outcomes[t][static_cast<std::size_t>(i)].reset();
    }
  }
  return create(x_, a_, std::move(outcomes), observed);
}

LongTermDataset LongTermDataset::subset(const std::vector<Index>& units) const {
  const Index m = static_cast<Index>(units.size());
  Matrix x(m, num_covariates());
  IntVector a(m);
  IndicatorMatrix r(m, stages());
  std::vector<OutcomeColumn> outcomes(outcomes_.size(), OutcomeColumn(units.size()));
  for (Index k = 0; k < m; ++k) {
    const Index i = units[static_cast<std::size_t>(k)];
    x.row(k) = x_.row(i);
    a(k) = a_(i);
    r.row(k) = r_.row(i);
    for (std::size_t t = 0; t < outcomes_.size(); ++t) {
      outcomes[t][static_cast<std::size_t>(k)] = outcomes_[t][static_cast<std::size_t>(i)];
    }
  }
  return create(std::move(x), std::move(a), std::move(outcomes), std::move(r));
}

bool LongTermDataset::operator==(const LongTermDataset& o) const {
  return x_.rows() == o.x_.rows() && x_.cols() == o.x_.cols() && x_ == o.x_ && a_ == o.a_ &&
         r_ == o.r_ && outcomes_ == o.outcomes_;
}

std::vector<Index> observed_subset(const LongTermDataset& ds, int stage) {
  if (stage < 1 || stage > ds.stages()) throw std::out_of_range("stage out of range");
  std::vector<Index> out;
  for (Index i = 0; i < ds.size(); ++i) {
    if (ds.is_observed(i, stage)) out.push_back(i);
  }
  return out;
}

CsvSchema CsvSchema::standard(Index p, int stages) {
  CsvSchema s;
  for (Index j = 1; j <= p; ++j) s.covariates.push_back("x" + std::to_string(j));
  for (int t = 1; t < stages; ++t) s.short_term.push_back("s" + std::to_string(t));
  for (int t = 1; t <= stages; ++t) s.observed.push_back("r" + std::to_string(t));
  return s;
}

CsvSchema CsvSchema::infer(const std::vector<std::string>& header) {
  auto count = [&](char prefix) {
    Index k = 0;
    while (std::find(header.begin(), header.end(), prefix + std::to_string(k + 1)) != header.end()) ++k;
    return k;
  };
  const Index p = count('x');
  const Index t0 = count('s');
  if (p == 0) throw ParseError("header has no x1 column", 0, "x1");
  if (t0 == 0) throw ParseError("header has no s1 column", 0, "s1");
  return standard(p, static_cast<int>(t0 + 1));
}

LongTermDataset load_csv(const std::string& path, const CsvSchema& schema) {
  const CsvTable t = read_table(path);
  if (schema.observed.size() != schema.short_term.size() + 1) {
    throw ShapeError("schema must list T observation columns for T-1 short-term columns");
  }
  const Index n = static_cast<Index>(t.rows.size());
  const Index p = static_cast<Index>(schema.covariates.size());
  const int stages = static_cast<int>(schema.observed.size());

  std::vector<std::size_t> xc, oc, rc;
  for (const auto& c : schema.covariates) xc.push_back(column_index(t, c));
  for (const auto& c : schema.short_term) oc.push_back(column_index(t, c));
  oc.push_back(column_index(t, schema.long_term));
  for (const auto& c : schema.observed) rc.push_back(column_index(t, c));
  const std::size_t ac = column_index(t, schema.treatment);

  Matrix x(n, p);
  IntVector a(n);
  IndicatorMatrix r(n, stages);
  std::vector<OutcomeColumn> outcomes(static_cast<std::size_t>(stages),
                                      OutcomeColumn(static_cast<std::size_t>(n)));
  for (Index i = 0; i < n; ++i) {
    const auto& row = t.rows[static_cast<std::size_t>(i)];
    const std::size_t line = static_cast<std::size_t>(i) + 1;
    for (Index j = 0; j < p; ++j) {
      x(i, j) = parse_number(row[xc[static_cast<std::size_t>(j)]], line,
                             schema.covariates[static_cast<std::size_t>(j)]);
    }
    a(i) = parse_binary(row[ac], line, schema.treatment);
    for (int s = 0; s < stages; ++s) {
      const auto& name = t.header[rc[static_cast<std::size_t>(s)]];
      r(i, s) = static_cast<std::uint8_t>(parse_binary(row[rc[static_cast<std::size_t>(s)]], line, name));
      const auto& cell = row[oc[static_cast<std::size_t>(s)]];
      if (!cell.empty()) {
        outcomes[static_cast<std::size_t>(s)][static_cast<std::size_t>(i)] =
            parse_number(cell, line, t.header[oc[static_cast<std::size_t>(s)]]);
      }
    }
  }
  return LongTermDataset::create(std::move(x), std::move(a), std::move(outcomes), std::move(r));
}

LongTermDataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw ParseError("missing header row in '" + path + "'", 0, "");
  return load_csv(path, CsvSchema::infer(split_line(line)));
}

void write_csv(const LongTermDataset& ds, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot write '" + path + "'");
  const auto schema = CsvSchema::standard(ds.num_covariates(), ds.stages());
  std::vector<std::string> cols = schema.covariates;
  cols.push_back(schema.treatment);
  cols.insert(cols.end(), schema.short_term.begin(), schema.short_term.end());
  cols.push_back(schema.long_term);
  cols.insert(cols.end(), schema.observed.begin(), schema.observed.end());
  for (std::size_t k = 0; k < cols.size(); ++k) os << (k ? "," : "") << cols[k];
  os << '\n';
  for (Index i = 0; i < ds.size(); ++i) {
    for (Index j = 0; j < ds.num_covariates(); ++j) {
      if (j) os << ',';
      write_double(os, ds.covariates()(i, j));
    }
    os << ',' << ds.treatment()(i);
    for (int t = 1; t <= ds.stages(); ++t) {
      os << ',';
      if (const auto& v = ds.outcome(t)[static_cast<std::size_t>(i)]) write_double(os, *v);
    }
    for (int t = 1; t <= ds.stages(); ++t) os << ',' << static_cast<int>(ds.observed()(i, t - 1));
    os << '\n';
  }
  if (!os) throw DataError("write failed for '" + path + "'");
}

Matrix load_covariates_csv(const std::string& path) {
  const CsvTable t = read_table(path);
  Matrix x(static_cast<Index>(t.rows.size()), static_cast<Index>(t.header.size()));
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    for (std::size_t j = 0; j < t.header.size(); ++j) {
      x(static_cast<Index>(i), static_cast<Index>(j)) = parse_number(t.rows[i][j], i + 1, t.header[j]);
    }
  }
  return x;
}

void write_ground_truth_csv(const GroundTruth& gt, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot write '" + path + "'");
  os << "y0,y1,tau_x\n";
  for (Index i = 0; i < gt.long_term.rows(); ++i) {
    write_double(os, gt.long_term(i, 0));
    os << ',';
    write_double(os, gt.long_term(i, 1));
    os << ',';
    write_double(os, gt.tau_x(i));
    os << '\n';
  }
}

}  // namespace ltce
