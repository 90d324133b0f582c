#include "byzsgd/adversary/adversary.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "byzsgd/rng.hpp"

namespace byzsgd::adversary {

AttackState estimate_honest_stats(std::span<const ParamVector> honest_gradients) {
  if (honest_gradients.empty())
    throw std::invalid_argument("estimate_honest_stats: no honest gradients");
  AttackState st;
  st.mu = sequential_mean(static_cast<int>(honest_gradients.size()),
                          [&](int i) -> ParamVector { return honest_gradients[i]; });
  st.sigma = ParamVector::Zero(st.mu.size());
  if (honest_gradients.size() >= 2) {
    for (const auto& g : honest_gradients) st.sigma.array() += (g - st.mu).array().square();
    st.sigma = (st.sigma / static_cast<double>(honest_gradients.size())).cwiseSqrt();
  }
  return st;
}

ParamVector byzantine_update(const AttackState& state) {
  return state.mu + state.gamma * state.sigma;
}

GammaSearchResult search_gamma(std::span<const ParamVector> honest_gradients,
                               const AcceptancePredicate& accepted, double gamma_hi, double tol) {
  if (!(gamma_hi > 0.0) || !(tol > 0.0))
    throw std::invalid_argument("search_gamma: gamma_hi and tol must be positive");
  AttackState st = estimate_honest_stats(honest_gradients);
  auto eval = [&](double gamma) {
    st.gamma = gamma;
    return accepted(byzantine_update(st));
  };

  if (!eval(0.0)) return {0.0, false};
  if (eval(gamma_hi)) return {gamma_hi, true};

  double lo = 0.0, hi = gamma_hi;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (eval(mid))
      lo = mid;
    else
      hi = mid;
  }
  // non-monotone predicates can leave accepted points just past hi; walk
  // forward until the bracket predicate(lo) && !predicate(lo+tol) holds
  while (lo + tol <= gamma_hi && eval(lo + tol)) lo += tol;
  return {lo, true};
}

AcceptancePredicate make_average_predicate() {
  return [](const ParamVector&) { return true; };
}

namespace {

std::vector<agg::GradientProposal> with_byz_copies(const std::vector<ParamVector>& honest,
                                                   const ParamVector& byz, int byz_copies) {
  std::vector<agg::GradientProposal> proposals;
  proposals.reserve(honest.size() + static_cast<size_t>(byz_copies));
  int id = 0;
  for (const auto& g : honest) proposals.push_back({id++, g});
  for (int i = 0; i < byz_copies; ++i) proposals.push_back({id++, byz});
  return proposals;
}

}  // namespace

AcceptancePredicate make_krum_predicate(std::vector<ParamVector> honest, int byz_copies, double f) {
  if (byz_copies < 1) throw std::invalid_argument("krum predicate: need at least one copy");
  const int n_honest = static_cast<int>(honest.size());
  return [honest = std::move(honest), byz_copies, f, n_honest](const ParamVector& byz) {
    auto proposals = with_byz_copies(honest, byz, byz_copies);
    return agg::krum_select(proposals, f) >= n_honest;
  };
}

AcceptancePredicate make_trimmed_mean_predicate(std::vector<ParamVector> honest, int byz_copies,
                                                double f, double survive_fraction) {
  if (byz_copies < 1) throw std::invalid_argument("trimmed predicate: need at least one copy");
  return [honest = std::move(honest), byz_copies, f, survive_fraction](const ParamVector& byz) {
    const int n_honest = static_cast<int>(honest.size());
    const int n = n_honest + byz_copies;
    const int trim = agg::floor_frac(f, n);
    if (n <= 2 * trim) return false;
    const Eigen::Index d = byz.size();
    const int needed = static_cast<int>(std::ceil(survive_fraction * static_cast<double>(d)));
    int surviving = 0;
    for (Eigen::Index j = 0; j < d; ++j) {
      int less = 0, equal = 0;
      for (const auto& g : honest) {
        if (g[j] < byz[j])
          ++less;
        else if (g[j] == byz[j])
          ++equal;
      }
      // the copies occupy positions [less, less+equal+byz_copies) in the
      // sorted multiset; they survive iff that span meets the kept window
      const int lo = less;
      const int hi = less + equal + byz_copies - 1;
      if (hi >= trim && lo <= n - trim - 1) ++surviving;
    }
    return surviving >= needed;
  };
}

AcceptancePredicate make_holdout_predicate(std::vector<ParamVector> honest, int byz_copies,
                                           const HoldoutSimContext& ctx) {
  if (byz_copies < 1) throw std::invalid_argument("holdout predicate: need at least one copy");
  if (ctx.model == nullptr || ctx.data == nullptr)
    throw std::invalid_argument("holdout predicate: context incomplete");

  const int n_honest = static_cast<int>(honest.size());
  const int n_p = n_honest + byz_copies;
  const int k = agg::honest_ballot_size(n_p, ctx.f);
  const int byz_voters = agg::floor_frac(ctx.f, ctx.n_voters);
  const int honest_voters = ctx.n_voters - byz_voters;
  if (honest_voters < 1) throw std::invalid_argument("holdout predicate: no honest voters");

  RngFactory rf(ctx.seed);

  // the simulated voters' holdout samples and the per-proposal holdout losses
  // for honest proposals are gamma-independent; compute them once
  learn::Shard all;
  all.indices.resize(ctx.data->size());
  for (int i = 0; i < ctx.data->size(); ++i) all.indices[i] = i;

  std::vector<learn::Batch> voter_batches(honest_voters);
  std::vector<std::vector<double>> honest_losses(honest_voters);
  for (int v = 0; v < honest_voters; ++v) {
    auto rng = rf.stream("atk_voter_batch", static_cast<uint64_t>(v));
    voter_batches[v] = learn::sample_batch(*ctx.data, all, ctx.m_c, rng);
    honest_losses[v].resize(n_honest);
    for (int j = 0; j < n_honest; ++j) {
      const ParamVector cand = ctx.w - ctx.eta * honest[j];
      honest_losses[v][j] = ctx.model->loss(cand, voter_batches[v]);
    }
  }

  // coalition ballots over proposal indices: byz copies sit at the tail
  std::vector<int> byz_idx(byz_copies), honest_idx(n_honest);
  for (int i = 0; i < byz_copies; ++i) byz_idx[i] = n_honest + i;
  for (int i = 0; i < n_honest; ++i) honest_idx[i] = i;
  std::vector<agg::VoteBallot> byz_ballots(byz_voters);
  {
    auto rng = rf.stream("atk_coalition");
    for (int b = 0; b < byz_voters; ++b)
      byz_ballots[b] = coalition_ballot(byz_idx, honest_idx, k, rng, -1);
  }

  auto model = ctx.model;
  auto w = ctx.w;
  auto eta = ctx.eta;
  auto f = ctx.f;
  return [=, honest_losses = std::move(honest_losses), voter_batches = std::move(voter_batches),
          byz_ballots = std::move(byz_ballots)](const ParamVector& byz) {
    std::vector<agg::VoteBallot> ballots;
    ballots.reserve(static_cast<size_t>(honest_voters + byz_voters));
    const ParamVector byz_cand = w - eta * byz;

    std::vector<std::pair<double, int>> scored(static_cast<size_t>(n_p));
    for (int v = 0; v < honest_voters; ++v) {
      const double byz_loss = model->loss(byz_cand, voter_batches[v]);
      for (int j = 0; j < n_honest; ++j) scored[j] = {honest_losses[v][j], j};
      for (int i = 0; i < byz_copies; ++i) scored[n_honest + i] = {byz_loss, n_honest + i};
      std::sort(scored.begin(), scored.end());
      agg::VoteBallot ballot;
      ballot.voter = v;
      for (int i = 0; i < k; ++i) ballot.endorsed.push_back(scored[i].second);
      std::sort(ballot.endorsed.begin(), ballot.endorsed.end());
      ballots.push_back(std::move(ballot));
    }
    for (const auto& b : byz_ballots) ballots.push_back(b);

    std::vector<agg::GradientProposal> proposals = with_byz_copies(honest, byz, byz_copies);
    const auto outcome = agg::union_consensus(ballots, proposals, f);
    return std::any_of(outcome.members.begin(), outcome.members.end(),
                       [&](int m) { return m >= n_honest; });
  };
}

agg::VoteBallot coalition_ballot(std::span<const int> byz_proposer_indices,
                                 std::span<const int> honest_proposer_indices, int k,
                                 std::mt19937_64& rng, int voter_id) {
  if (static_cast<int>(byz_proposer_indices.size() + honest_proposer_indices.size()) < k)
    throw std::invalid_argument("coalition_ballot: not enough proposers to fill the ballot");
  agg::VoteBallot ballot;
  ballot.voter = voter_id;
  std::vector<int> byz(byz_proposer_indices.begin(), byz_proposer_indices.end());
  std::sort(byz.begin(), byz.end());
  for (int ix : byz) {
    if (static_cast<int>(ballot.endorsed.size()) == k) break;
    ballot.endorsed.push_back(ix);
  }
  const int fill = k - static_cast<int>(ballot.endorsed.size());
  if (fill > 0) {
    auto picks = sample_without_replacement(static_cast<int>(honest_proposer_indices.size()), fill,
                                            rng);
    for (int p : picks) ballot.endorsed.push_back(honest_proposer_indices[p]);
  }
  std::sort(ballot.endorsed.begin(), ballot.endorsed.end());
  return ballot;
}

net::NetMessage equivocate(const net::NetMessage& base, int recipient, EquivocationMode mode,
                           const EquivocationContext& ctx) {
  if (mode == EquivocationMode::Consistent) return base;
  // coalition-wide two-way split: even recipients get the base message, odd
  // ones a forged variant; a 2-valued honest view is the most disagreement
  // the consensus round can face from this sender set
  if (recipient % 2 == 0) return base;
  if (ctx.network == nullptr) throw std::invalid_argument("equivocate: context incomplete");

  auto rng = RngFactory(ctx.salt).stream("equiv", static_cast<uint64_t>(base.sender),
                                         static_cast<uint64_t>(base.epoch));

  Bytes forged = base.payload;
  if (base.round == net::RoundTag::Vote) {
    auto vote = net::decode_vote_payload(base.payload);
    if (vote) {
      std::vector<int> candidates;
      for (int id : ctx.proposer_pool)
        if (std::find(vote->endorsed_ids.begin(), vote->endorsed_ids.end(), id) ==
            vote->endorsed_ids.end())
          candidates.push_back(id);
      if (!vote->endorsed_ids.empty() && !candidates.empty()) {
        std::uniform_int_distribution<size_t> pos(0, vote->endorsed_ids.size() - 1);
        std::uniform_int_distribution<size_t> rep(0, candidates.size() - 1);
        vote->endorsed_ids[pos(rng)] = candidates[rep(rng)];
        std::sort(vote->endorsed_ids.begin(), vote->endorsed_ids.end());
        forged = net::encode_vote_payload(vote->proof, vote->endorsed_ids);
      }
    }
  } else {
    auto grad = net::decode_gradient_payload(base.payload);
    if (grad && grad->grad.size() > 0) {
      // flip the sign of a deterministic quarter of the coordinates
      std::uniform_int_distribution<Eigen::Index> coord(0, grad->grad.size() - 1);
      const Eigen::Index flips = std::max<Eigen::Index>(1, grad->grad.size() / 4);
      for (Eigen::Index i = 0; i < flips; ++i) {
        const Eigen::Index j = coord(rng);
        grad->grad[j] = -grad->grad[j];
      }
      forged = net::encode_gradient_payload(grad->proof, grad->grad);
    }
  }
  return ctx.network->make_message(base.sender, base.epoch, base.round, std::move(forged));
}

}  // namespace byzsgd::adversary
