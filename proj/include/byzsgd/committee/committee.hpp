#pragma once

#include <random>
#include <vector>

#include "byzsgd/types.hpp"

namespace byzsgd::committee {

/// Worker population with a fixed Byzantine subset.
struct Population {
  int n = 0;
  std::vector<bool> byzantine;  // size n
  int byz_count = 0;

  static Population with_fraction(int n, double f, uint64_t seed);
  static Population with_byz_count(int n, int byz, uint64_t seed);

  bool is_byzantine(int id) const { return byzantine[id]; }
  double fraction() const { return n == 0 ? 0.0 : static_cast<double>(byz_count) / n; }
};

enum class Role { Proposer, Voter, Consensus };

struct CommitteeDraw {
  int epoch = 0;
  Role role = Role::Proposer;
  std::vector<int> members;  // distinct node ids

  int size() const { return static_cast<int>(members.size()); }
};

/// Uniform sample of N nodes without replacement. Proposer and voter draws
/// in one epoch use independent streams; overlap between them is allowed.
CommitteeDraw draw_committee(const Population& pop, int N, Role role, int epoch,
                             std::mt19937_64& rng);

int count_byzantine(const Population& pop, const CommitteeDraw& draw);

/// Closed-form committee size N(T, delta) = ceil(2 (1+2f)/(1-2f)^2 ln(T/delta))
/// guaranteeing an honest majority in all T draws with probability >= 1-delta.
int committee_size_bound(int T, double delta, double f);

/// Exact P(X >= N/2) for X ~ Hypergeometric(n, K, N), computed with exact
/// big-integer rationals. Ties (X == N/2) count as a Byzantine majority.
double byz_majority_prob_exact(int n, int K, int N);

/// Monte-Carlo estimate of the same probability over `trials` fresh draws.
double byz_majority_prob_mc(const Population& pop, int N, int trials, uint64_t seed);

/// Chernoff tail bound e^{-(1-2f)^2/(1+2f) * N/2} on the per-draw majority
/// probability.
double byz_majority_chernoff_bound(double f, int N);

}  // namespace byzsgd::committee
