#pragma once

#include <functional>
#include <random>
#include <span>
#include <vector>

#include "byzsgd/agg/aggregation.hpp"
#include "byzsgd/learn/dataset.hpp"
#include "byzsgd/learn/loss_model.hpp"
#include "byzsgd/net/network.hpp"
#include "byzsgd/types.hpp"

namespace byzsgd::adversary {

/// Current-epoch attack parameters: honest-gradient statistics plus the
/// perturbation scale.
struct AttackState {
  ParamVector mu;
  ParamVector sigma;
  double gamma = 0.0;
};

/// Coordinate-wise mean and population standard deviation of the honest
/// gradients (omniscient adversary). With fewer than two inputs sigma is the
/// zero vector.
AttackState estimate_honest_stats(std::span<const ParamVector> honest_gradients);

/// mu + gamma * sigma; identical for every colluding Byzantine proposer.
ParamVector byzantine_update(const AttackState& state);

/// True when a byzantine vector at some gamma would still be "chosen" by the
/// aggregation rule under attack. Must be a deterministic function of its
/// argument so that search brackets can be re-verified.
using AcceptancePredicate = std::function<bool(const ParamVector& byz_vector)>;

struct GammaSearchResult {
  double gamma = 0.0;
  bool accepted_at_zero = true;  // false: predicate failed even at gamma = 0
};

/// Largest gamma in [0, gamma_hi] (within tol) whose byzantine vector is
/// still accepted, found by bisection over the predicate; the returned value
/// satisfies predicate(gamma) and, when below gamma_hi, !predicate(gamma+tol).
GammaSearchResult search_gamma(std::span<const ParamVector> honest_gradients,
                               const AcceptancePredicate& accepted, double gamma_hi, double tol);

/// Per-rule acceptance predicates. The adversary simulates the aggregation
/// internally with byz_copies identical copies of its vector appended after
/// the honest gradients.
AcceptancePredicate make_average_predicate();
AcceptancePredicate make_krum_predicate(std::vector<ParamVector> honest, int byz_copies, double f);
AcceptancePredicate make_trimmed_mean_predicate(std::vector<ParamVector> honest, int byz_copies,
                                                double f, double survive_fraction = 0.99);

/// Context for the holdout predicate: the adversary simulates honest voting
/// with fresh holdout samples from the global dataset (omniscient about
/// gradients, not about the voters' actual private draws). All sampling is
/// fixed by `seed` once, so predicate evaluations are deterministic in gamma.
struct HoldoutSimContext {
  const learn::LossModel* model = nullptr;
  const learn::Dataset* data = nullptr;
  ParamVector w;
  double eta = 0.0;
  int n_voters = 0;  // N_c
  int m_c = 0;
  double f = 0.0;
  uint64_t seed = 0;
};

AcceptancePredicate make_holdout_predicate(std::vector<ParamVector> honest, int byz_copies,
                                           const HoldoutSimContext& ctx);

/// Coalition ballot: all Byzantine proposer indices first, then uniformly
/// random honest indices until the cardinality reaches k.
agg::VoteBallot coalition_ballot(std::span<const int> byz_proposer_indices,
                                 std::span<const int> honest_proposer_indices, int k,
                                 std::mt19937_64& rng, int voter_id = -1);

enum class EquivocationMode { Consistent, PerRecipientNoise };

/// What the equivocating sender knows when it forges per-recipient variants.
struct EquivocationContext {
  const net::Network* network = nullptr;   // to re-authenticate variants
  std::vector<int> proposer_pool;          // known proposer ids (for ballot swaps)
  uint64_t salt = 0;                       // epoch-stable variant randomness
};

/// Consistent mode returns the message unchanged. PerRecipientNoise returns a
/// recipient-keyed variant: the colluding senders split recipients into two
/// groups (by recipient id parity) and send the second group a forged variant
/// (one endorsed id swapped for ballots, sign-flipped coordinates for
/// gradients), re-authenticated under the sender's own key.
net::NetMessage equivocate(const net::NetMessage& base, int recipient, EquivocationMode mode,
                           const EquivocationContext& ctx);

}  // namespace byzsgd::adversary
