#pragma once

#include <span>
#include <vector>

#include "byzsgd/learn/loss_model.hpp"
#include "byzsgd/types.hpp"

namespace byzsgd::agg {

/// Gradient submitted by one proposer for the current epoch.
struct GradientProposal {
  int proposer = -1;
  ParamVector grad;
};

/// One committee member's endorsements: distinct indices into the epoch's
/// proposal list, exactly k = ceil(N_p (1-f)) of them for honest voters.
struct VoteBallot {
  int voter = -1;
  std::vector<int> endorsed;
};

struct ConsensusOutcome {
  ParamVector update;              // mean of the union-consensus members' gradients
  std::vector<int> members;        // proposal indices with tally >= tau, ascending
  std::vector<int> vote_counts;    // tally per proposal
  std::vector<int> rejected_voters;  // voters whose ballots failed validation
  int tau = 0;
  int ballot_cardinality = 0;
};

/// floor(f*n) and ceil(f*n) with a snap to the nearest integer when f*n is
/// within 1e-9 of one. Fractions like 1/3 are not representable in binary,
/// so 30*(1/3) lands at 9.999...; the committee arithmetic means the exact
/// rational value.
int floor_frac(double f, int n);
int ceil_frac(double f, int n);

/// k: endorsements per honest ballot.
int honest_ballot_size(int n_proposals, double f);
/// tau: minimum tally for union-consensus membership, ceil(N_c * k / N_p).
int union_threshold(int n_ballots, int k, int n_proposals);

ParamVector aggregate_average(std::span<const GradientProposal> proposals);

/// Index selected by Krum: argmin over proposals of the summed squared
/// distances to the N_p - ceil(f N_p) - 2 nearest other proposals; ties go
/// to the lowest index.
int krum_select(std::span<const GradientProposal> proposals, double f);
ParamVector aggregate_krum(std::span<const GradientProposal> proposals, double f);

/// Coordinate-wise mean after discarding the floor(f N_p) largest and
/// smallest values per coordinate.
ParamVector aggregate_trimmed_mean(std::span<const GradientProposal> proposals, double f);

/// Holdout voting: score every proposal j by the voter's loss at
/// w - eta * g_j over its holdout batch and endorse the k best. Ties break
/// by lower loss, then lower proposal index.
VoteBallot holdout_votes(std::span<const GradientProposal> proposals, const ParamVector& w,
                         double eta, const learn::LossModel& voter_model,
                         const learn::Batch& voter_batch, double f, int voter_id);

struct UnionOptions {
  int tau_offset = 0;  // fault-injection hook for detector-sensitivity checks
};

/// Tallies ballots and averages the proposals endorsed by at least tau of
/// them. Malformed ballots (wrong cardinality, duplicate or out-of-range
/// indices) are rejected and recorded, never repaired; tau still counts all
/// submitted ballots.
ConsensusOutcome union_consensus(std::span<const VoteBallot> ballots,
                                 std::span<const GradientProposal> proposals, double f,
                                 const UnionOptions& opts = {});

}  // namespace byzsgd::agg
