#pragma once

// The twelve acceptance criteria, each evaluated against tolerances pinned in
// acceptance.cpp and reported as one pass/fail line.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "bwlab/scenario.hpp"

namespace bwlab {

struct CriterionResult {
  int id = 0;
  std::string title;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

struct AcceptanceOptions {
  Scenario scenario = default_scenario();
  std::uint64_t seed = 20240607;  // random draws of criteria 4, 7 and 11
  int threads = 1;
  std::optional<std::filesystem::path> out;  // sweep artifacts of criteria 8-10
  std::vector<int> only;                     // empty: all criteria
};

using CriterionCallback = std::function<void(const CriterionResult&)>;

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opt,
                                            const CriterionCallback& on_result = {});

/// "[PASS] 3  kernel identities ...  (0.41 s)".
std::string format_result(const CriterionResult& r);

// Individually callable criteria that need no shared state.
CriterionResult criterion_ground_state_1d();
CriterionResult criterion_ground_state_2d();
CriterionResult criterion_kernel_identities();
CriterionResult criterion_pseudoconformal_identity(std::uint64_t seed);
CriterionResult criterion_round_trip(std::uint64_t seed);
CriterionResult criterion_coercivity(std::uint64_t seed);

}  // namespace bwlab
