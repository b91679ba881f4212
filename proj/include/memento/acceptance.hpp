#pragma once

#include <functional>
#include <string>
#include <vector>

#include "memento/parallel.hpp"

namespace memento {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0;
  double limit_seconds = 0;
};

struct AcceptanceOptions {
  Execution execution = Execution::kParallel;
  /// Criteria to run (empty: all). Criterion 9 audits whatever ran before it.
  std::vector<int> only;
};

CriterionResult check_one_sided_bound();       // 1
CriterionResult check_sampled_guarantee(Execution ex);  // 2
CriterionResult check_hhh_coverage(Execution ex);       // 3
CriterionResult check_planner();               // 4
CriterionResult check_detection_curve();       // 5
CriterionResult check_staleness(Execution ex);  // 6
CriterionResult check_flood_ordering(Execution ex);     // 7
CriterionResult check_throughput();            // 8
CriterionResult check_space_time_audit();      // 9

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opts,
                                            const std::function<void(const CriterionResult&)>& on_result = {});

/// "[PASS] 4 planner ...": one line per criterion.
std::string format_result(const CriterionResult& r);

}  // namespace memento
