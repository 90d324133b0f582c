#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "byzsgd/adversary/adversary.hpp"
#include "byzsgd/types.hpp"

namespace byzsgd::orch {

enum class Rule { Average, Krum, TrimmedMean, Holdout };

struct StepSchedule {
  enum class Kind { Constant, InverseT };
  Kind kind = Kind::Constant;
  double value = 0.1;  // constant step, or alpha for the 1/(2 alpha t) schedule

  double eta(int t) const {
    return kind == Kind::Constant ? value : 1.0 / (2.0 * value * static_cast<double>(t));
  }

  static StepSchedule constant(double c) { return {Kind::Constant, c}; }
  static StepSchedule inverse(double alpha) { return {Kind::InverseT, alpha}; }
};

struct AttackConfig {
  enum class Mode { None, GammaFixed, GammaSearch };
  Mode mode = Mode::None;
  double gamma = 1.75;
  double gamma_hi = 100.0;
  double gamma_tol = 1e-3;
  bool coalition_voting = true;
  adversary::EquivocationMode equivocation = adversary::EquivocationMode::Consistent;
};

struct RunConfig {
  int T = 0;
  int N_p = 0;
  int N_c = 0;
  double f = 0.0;  // protocol parameter (assumed Byzantine fraction)
  int B = 0;
  int m_c = 0;
  StepSchedule step;
  Rule rule = Rule::Holdout;
  AttackConfig attack;
  uint64_t seed = 0;
  bool record_trajectory = false;
};

struct EpochRecord {
  int t = 0;
  double train_loss = 0.0;
  double test_loss = 0.0;
  double test_acc = std::nan("");  // NaN for non-classifiers
  int uc_size = 0;
  int byz_in_uc = 0;
  double gamma_used = 0.0;
  double wall_time = 0.0;
  uint64_t messages_sent = 0;
};

struct MessageCounts {
  uint64_t proposals = 0;
  uint64_t ballots = 0;
  uint64_t proposal_forwards = 0;  // server -> voter fan-out, tracked separately
};

struct RunResult {
  ParamVector final_w;
  std::vector<EpochRecord> records;
  std::vector<ParamVector> trajectory;  // w_1 .. w_{T+1} when recorded
  MessageCounts messages;
  std::vector<int> byz_majority_epochs;  // epochs where a drawn committee had a
                                         // Byzantine majority (ground truth)
};

}  // namespace byzsgd::orch
