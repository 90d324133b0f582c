#pragma once

#include <optional>
#include <span>

#include "byzsgd/committee/committee.hpp"
#include "byzsgd/learn/dataset.hpp"
#include "byzsgd/learn/loss_model.hpp"
#include "byzsgd/net/network.hpp"
#include "byzsgd/orch/config.hpp"

namespace byzsgd::decent {

struct DecentConfig {
  int T = 0;
  double q1 = 1.0;  // proposer sortition probability
  double q2 = 1.0;  // voter sortition probability
  double q3 = 1.0;  // consensus-committee sortition probability
  double f = 1.0 / 3.0;
  int B = 0;
  int m_c = 0;
  orch::StepSchedule step;
  orch::AttackConfig attack;
  uint64_t seed = 0;
  int max_retries = 8;
  bool record_trajectory = false;
  std::ostream* trace = nullptr;
};

/// Sortition probability giving an expected committee of the requested size.
double q_for_expected_size(int n, int expected);

struct DecentEpochInfo {
  int t = 0;
  int proposers = 0;
  int voters = 0;
  int cons_committee = 0;
  int retries = 0;
  bool consensus_failed = false;
  bool honest_agreement = true;
  uint64_t messages = 0;           // network counter delta for this epoch
  uint64_t expected_messages = 0;  // n * (proposers + voters + cons_committee)
};

struct DecentResult {
  ParamVector final_w;
  std::vector<orch::EpochRecord> records;
  std::vector<DecentEpochInfo> epoch_info;
  std::vector<ParamVector> trajectory;
  int consensus_failures = 0;
  int aborted_attempts = 0;
  bool agreement_every_epoch = true;
};

struct ConsensusDecision {
  bool ok = false;
  ParamVector winner;
};

/// Single-shot committee decision over full candidate vectors: the candidate
/// whose hash is held by > 2/3 of the committee wins; failing that, the
/// lexicographically smallest hash among those held by > 1/3; otherwise the
/// round fails. Deterministic in the candidate multiset.
ConsensusDecision consensus_round(std::span<const ParamVector> candidates);

/// Fully decentralized HoldOut SGD over a simulated authenticated broadcast
/// network: sortition-based roles, holdout voting over verified proposals,
/// per-node union-consensus candidates and a consensus round that leaves all
/// honest nodes with bitwise-identical parameters each epoch.
DecentResult run_decentralized(const committee::Population& pop, const learn::Dataset& data,
                               const std::vector<learn::Shard>& shards,
                               const learn::LossModel& model, const learn::Dataset* eval_data,
                               const ParamVector& w1, const DecentConfig& config);

}  // namespace byzsgd::decent
