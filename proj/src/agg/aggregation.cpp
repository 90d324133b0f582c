#include "byzsgd/agg/aggregation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace byzsgd::agg {

namespace {

double snap_integer(double x) {
  const double r = std::round(x);
  if (std::abs(x - r) <= 1e-9 * std::max(1.0, std::abs(x))) return r;
  return x;
}

void check_proposals(std::span<const GradientProposal> proposals) {
  if (proposals.empty()) throw std::invalid_argument("aggregation: no proposals");
  const auto d = proposals[0].grad.size();
  for (const auto& p : proposals)
    if (p.grad.size() != d) throw std::invalid_argument("aggregation: dimension mismatch");
}

}  // namespace

int floor_frac(double f, int n) { return static_cast<int>(std::floor(snap_integer(f * n))); }

int ceil_frac(double f, int n) { return static_cast<int>(std::ceil(snap_integer(f * n))); }

int honest_ballot_size(int n_proposals, double f) { return ceil_frac(1.0 - f, n_proposals); }

int union_threshold(int n_ballots, int k, int n_proposals) {
  // integer ceil(N_c * k / N_p); exact, so the pigeonhole N_p (tau-1) < N_c k
  // holds for all inputs
  return static_cast<int>((static_cast<long long>(n_ballots) * k + n_proposals - 1) / n_proposals);
}

ParamVector aggregate_average(std::span<const GradientProposal> proposals) {
  check_proposals(proposals);
  return sequential_mean(static_cast<int>(proposals.size()),
                         [&](int i) -> ParamVector { return proposals[i].grad; });
}

int krum_select(std::span<const GradientProposal> proposals, double f) {
  check_proposals(proposals);
  const int n = static_cast<int>(proposals.size());
  const int neighbors = n - ceil_frac(f, n) - 2;
  if (n < 3 || neighbors < 1)
    throw std::invalid_argument("krum: too few proposals for the neighbor count");

  int best = -1;
  double best_score = 0.0;
  std::vector<double> dists(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j)
      dists[j] = (j == i) ? 0.0 : (proposals[i].grad - proposals[j].grad).squaredNorm();
    std::swap(dists[i], dists[n - 1]);  // drop self
    std::nth_element(dists.begin(), dists.begin() + (neighbors - 1), dists.end() - 1);
    std::sort(dists.begin(), dists.begin() + neighbors);
    double score = 0.0;
    for (int k = 0; k < neighbors; ++k) score += dists[k];
    if (best < 0 || score < best_score) {
      best = i;
      best_score = score;
    }
  }
  return best;
}

ParamVector aggregate_krum(std::span<const GradientProposal> proposals, double f) {
  return proposals[krum_select(proposals, f)].grad;
}

ParamVector aggregate_trimmed_mean(std::span<const GradientProposal> proposals, double f) {
  check_proposals(proposals);
  const int n = static_cast<int>(proposals.size());
  const int trim = floor_frac(f, n);
  if (n <= 2 * trim) throw std::invalid_argument("trimmed_mean: trimming would discard everything");

  const auto d = proposals[0].grad.size();
  ParamVector out(d);
  std::vector<double> col(n);
  for (Eigen::Index j = 0; j < d; ++j) {
    for (int i = 0; i < n; ++i) col[i] = proposals[i].grad[j];
    std::sort(col.begin(), col.end());
    double sum = 0.0;
    for (int i = trim; i < n - trim; ++i) sum += col[i];
    out[j] = sum / (n - 2 * trim);
  }
  return out;
}

VoteBallot holdout_votes(std::span<const GradientProposal> proposals, const ParamVector& w,
                         double eta, const learn::LossModel& voter_model,
                         const learn::Batch& voter_batch, double f, int voter_id) {
  check_proposals(proposals);
  if (voter_batch.size() == 0) throw std::invalid_argument("holdout_votes: empty holdout batch");
  const int n = static_cast<int>(proposals.size());
  const int k = honest_ballot_size(n, f);

  std::vector<std::pair<double, int>> scored(n);
  for (int j = 0; j < n; ++j) {
    const ParamVector candidate = w - eta * proposals[j].grad;
    scored[j] = {voter_model.loss(candidate, voter_batch), j};
  }
  std::sort(scored.begin(), scored.end());  // by loss, then by index

  VoteBallot ballot;
  ballot.voter = voter_id;
  ballot.endorsed.reserve(k);
  for (int i = 0; i < k; ++i) ballot.endorsed.push_back(scored[i].second);
  std::sort(ballot.endorsed.begin(), ballot.endorsed.end());
  return ballot;
}

ConsensusOutcome union_consensus(std::span<const VoteBallot> ballots,
                                 std::span<const GradientProposal> proposals, double f,
                                 const UnionOptions& opts) {
  check_proposals(proposals);
  if (ballots.empty()) throw std::invalid_argument("union_consensus: no ballots");
  const int n_p = static_cast<int>(proposals.size());
  const int k = honest_ballot_size(n_p, f);

  ConsensusOutcome out;
  out.ballot_cardinality = k;
  out.tau = union_threshold(static_cast<int>(ballots.size()), k, n_p) + opts.tau_offset;
  out.vote_counts.assign(n_p, 0);

  std::vector<char> seen(n_p);
  for (const auto& ballot : ballots) {
    bool ok = static_cast<int>(ballot.endorsed.size()) == k;
    std::fill(seen.begin(), seen.end(), 0);
    for (int ix : ballot.endorsed) {
      if (ix < 0 || ix >= n_p || seen[ix]) {
        ok = false;
        break;
      }
      seen[ix] = 1;
    }
    if (!ok) {
      out.rejected_voters.push_back(ballot.voter);
      continue;
    }
    for (int ix : ballot.endorsed) ++out.vote_counts[ix];
  }

  for (int j = 0; j < n_p; ++j)
    if (out.vote_counts[j] >= out.tau) out.members.push_back(j);
  if (out.members.empty())
    throw std::runtime_error("union_consensus: empty consensus set");

  out.update = sequential_mean(static_cast<int>(out.members.size()),
                               [&](int i) -> ParamVector { return proposals[out.members[i]].grad; });
  return out;
}

}  // namespace byzsgd::agg
