#pragma once

#include <string>
#include <vector>

#include "twistres/config.hpp"

namespace twistres {

struct PropertyCheck {
  std::string name;
  bool pass = false;
  double measured = 0;
  double tolerance = 0;
  std::string detail;
};

// Invariant suite behind `twistres validate`: orthonormality, coupling
// antisymmetry, Parseval monotonicity, w(i alpha) purely imaginary, and the
// Cauchy-integral analyticity checks, all at their stated tolerances.
std::vector<PropertyCheck> run_validation(const RunConfig& cfg);

bool all_passed(const std::vector<PropertyCheck>& checks);

}  // namespace twistres
