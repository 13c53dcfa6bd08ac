#pragma once

#include <string>
#include <vector>

namespace peat {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

// Formula-oracle and gradient-check suites: hand-arithmetic oracles for the
// channel/accuracy formulas, polynomial anchors, finite-difference gradient
// validation for every network and head, recursive-vs-explicit GAE
// equivalence, probability normalization (enumeration and quadrature), and
// randomized invariant fuzzing of the system step. All oracles are computed
// through routes independent of the implementation under test.
std::vector<CheckResult> run_selfcheck();

bool all_passed(const std::vector<CheckResult>& results);

}  // namespace peat
