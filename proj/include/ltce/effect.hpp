#pragma once

#include <map>
#include <string>

#include "ltce/dataset.hpp"

namespace ltce {

struct EffectEstimate {
  std::string method;
  double tau_hat = 0.0;
  Vector cate_hat;  // per-unit CATE estimate
  std::map<std::string, double> diagnostics;
  std::string model_json;  // parameter dump for the network-balancing methods
};

}  // namespace ltce
