#pragma once

#include <vector>

#include "ltce/dataset.hpp"
#include "ltce/logistic.hpp"

namespace ltce {

struct NuisanceConfig {
  double clip = 0.01;
  LogisticOptions logistic;

  void validate() const;
};

// Selection scores built from stagewise logistic fits:
//   r_t(i) = prod_{u <= t} P(R_u = 1 | X, A, S_1..S_{u-1}, R_{u-1} = 1).
// Stage t is defined for unit i exactly when R_{t-1}(i) = 1 (all units at t = 1).
struct SelectionScores {
  std::vector<OutcomeColumn> factor;
  std::vector<OutcomeColumn> product;
  std::vector<Index> fit_rows;   // rows each stage model was fit on
  std::vector<bool> degenerate;  // stage had a single class among its rows
  std::vector<LogisticModel> models;

  int stages() const { return static_cast<int>(product.size()); }
  // r_stage for `unit`; throws when undefined.
  double at(Index unit, int stage) const;
};

struct NuisanceScores {
  Vector propensity;  // P(A = 1 | X), clipped
  SelectionScores selection;

  double propensity_of(Index unit, int arm) const {
    return arm == 1 ? propensity(unit) : 1.0 - propensity(unit);
  }
};

// Inputs of the stage-`stage` selection model: X, A, S_1..S_{stage-1}.
Matrix selection_features(const LongTermDataset& ds, int stage, const std::vector<Index>& rows);

Vector estimate_propensity(const LongTermDataset& ds, const NuisanceConfig& cfg = {});
SelectionScores estimate_selection_scores(const LongTermDataset& ds, const NuisanceConfig& cfg = {});
NuisanceScores estimate_nuisances(const LongTermDataset& ds, const NuisanceConfig& cfg = {});

// Wraps externally known scores (e.g. the simulator's true probabilities).
NuisanceScores known_nuisances(Vector propensity, std::vector<OutcomeColumn> selection);

}  // namespace ltce
