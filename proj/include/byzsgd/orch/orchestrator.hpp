#pragma once

#include "byzsgd/committee/committee.hpp"
#include "byzsgd/learn/dataset.hpp"
#include "byzsgd/learn/loss_model.hpp"
#include "byzsgd/orch/config.hpp"

namespace byzsgd::orch {

/// Everything a central run needs besides the RunConfig.
struct RunEnv {
  const committee::Population* population = nullptr;
  const learn::Dataset* data = nullptr;
  const std::vector<learn::Shard>* shards = nullptr;
  const learn::LossModel* model = nullptr;
  const learn::Dataset* eval_data = nullptr;  // optional
  ParamVector w1;
};

void validate_config(const RunConfig& config, const RunEnv& env);

/// Parameter-server SGD with a pluggable aggregation rule
/// (average | krum | trimmed_mean). Byzantine proposers substitute attack
/// vectors when the attack is enabled. Deterministic per (config, seed).
RunResult run_distributed_sgd(const RunConfig& config, const RunEnv& env);

/// HoldOut SGD: independent proposer and voter committees per epoch, holdout
/// voting, union-consensus update. Shares the proposer-side RNG streams with
/// run_distributed_sgd so the f=0 case reduces to it bitwise.
RunResult run_holdout_sgd(const RunConfig& config, const RunEnv& env);

RunResult run(const RunConfig& config, const RunEnv& env);  // dispatch on rule

/// Mean loss and, for classifiers, argmax accuracy over an evaluation set.
std::pair<double, double> evaluate(const learn::LossModel& model, const ParamVector& w,
                                   const learn::Batch& eval_set);

struct Prop1EpochStat {
  int t = 0;
  double eta = 0.0;
  double mean_inner = 0.0;   // mean of grad_j . grad_c over voted pairs
  double stderr_inner = 0.0; // standard error over repetition means
  double rhs = 0.0;          // ||grad L(w_t)||^2 - beta G^2 eta_t / 2
  double margin = 0.0;       // mean_inner - rhs
  bool ok_3sigma = false;
  int skipped_byz_majority = 0;
};

struct Prop1Report {
  std::vector<Prop1EpochStat> epochs;
  double violation_rate = 0.0;
  int repetitions = 0;
};

/// Empirical check of the gradient-tolerance bound on a quadratic model:
/// at each sampled epoch of a holdout trajectory, the mean voted inner
/// product must be at least ||grad L||^2 - beta G^2 eta_t / 2 within
/// 3 standard errors over `repetitions` fresh committee/batch draws.
Prop1Report check_proposition1(const RunConfig& config, const RunEnv& env,
                               const std::vector<int>& sample_epochs, int repetitions);

}  // namespace byzsgd::orch
