#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace byzsgd::checks {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string details;
  double seconds = 0.0;
};

/// The acceptance criteria, in order. `full` runs the stated scales; the fast
/// variants shrink trial counts but keep every threshold.
CheckResult check_union_nonemptiness(bool full);
CheckResult check_f0_reduction(bool full);
CheckResult check_bound_soundness(bool full);
CheckResult check_hypergeometric_oracle(bool full);
CheckResult check_gradient_correctness(bool full);
CheckResult check_convergence_shape(bool full);
CheckResult check_proposition1_bound(bool full);
CheckResult check_robustness_ordering(bool full);
CheckResult check_decentralized_agreement(bool full);
CheckResult check_message_complexity(bool full);
CheckResult check_attack_bracket(bool full);

/// Fault injection: verifies that the non-emptiness detector actually fires
/// when the union threshold is patched up by N_c.
CheckResult check_union_detector_sensitivity(bool full);

std::vector<CheckResult> run_acceptance(bool full, std::ostream& log);
std::vector<CheckResult> run_verify_suite(bool full, std::ostream& log);

}  // namespace byzsgd::checks
