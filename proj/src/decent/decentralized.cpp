#include "byzsgd/decent/decentralized.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>
#include <unordered_map>

#include "byzsgd/adversary/adversary.hpp"
#include "byzsgd/agg/aggregation.hpp"
#include "byzsgd/orch/orchestrator.hpp"
#include "byzsgd/rng.hpp"

namespace byzsgd::decent {

double q_for_expected_size(int n, int expected) {
  if (n < 1 || expected < 1) throw std::invalid_argument("q_for_expected_size: bad sizes");
  return std::min(1.0, static_cast<double>(expected) / n);
}

ConsensusDecision consensus_round(std::span<const ParamVector> candidates) {
  ConsensusDecision out;
  if (candidates.empty()) return out;
  const int c = static_cast<int>(candidates.size());

  // group by hash of the canonical serialization; map keeps hashes ordered so
  // the 1/3 fallback picks the lexicographically smallest deterministically
  std::map<committee::HashValue, std::pair<int, const ParamVector*>> groups;
  for (const auto& cand : candidates) {
    const auto h = net::sha256(net::serialize_params(cand));
    auto [it, inserted] = groups.try_emplace(h, 0, &cand);
    ++it->second.first;
    (void)inserted;
  }

  for (const auto& [hash, entry] : groups) {
    if (3 * entry.first > 2 * c) {
      out.ok = true;
      out.winner = *entry.second;
      return out;
    }
  }
  for (const auto& [hash, entry] : groups) {
    if (3 * entry.first > c) {
      out.ok = true;
      out.winner = *entry.second;
      return out;
    }
  }
  return out;
}

namespace {

struct RoleSelection {
  std::vector<int> proposers, voters, cons_committee;
  std::vector<committee::SortitionResult> prop_proof, vote_proof, cons_proof;  // per node
};

RoleSelection run_sortition(const net::Network& net, const Bytes& seed, uint64_t epoch,
                            const DecentConfig& config) {
  RoleSelection sel;
  const int n = net.size();
  sel.prop_proof.resize(n);
  sel.vote_proof.resize(n);
  sel.cons_proof.resize(n);
  for (int id = 0; id < n; ++id) {
    sel.prop_proof[id] = committee::sortition("P", seed, epoch, net.key_of(id), config.q1);
    sel.vote_proof[id] = committee::sortition("V", seed, epoch, net.key_of(id), config.q2);
    sel.cons_proof[id] = committee::sortition("C", seed, epoch, net.key_of(id), config.q3);
    if (sel.prop_proof[id].selected) sel.proposers.push_back(id);
    if (sel.vote_proof[id].selected) sel.voters.push_back(id);
    if (sel.cons_proof[id].selected) sel.cons_committee.push_back(id);
  }
  return sel;
}

/// Verified, deduplicated messages of one round, ascending sender id.
std::vector<net::NetMessage> verified_round(net::Network& net, int node, uint64_t epoch,
                                            net::RoundTag round, const Bytes& seed,
                                            std::string_view role_tag, double q) {
  std::vector<net::NetMessage> out;
  std::vector<char> seen(static_cast<size_t>(net.size()), 0);
  for (auto& m : net.drain(node, epoch, round)) {
    if (m.sender < 0 || m.sender >= net.size() || seen[static_cast<size_t>(m.sender)]) continue;
    if (!net.verify(m)) continue;
    committee::SortitionResult claim;
    // both payload kinds carry the role proof in the first 32 bytes
    if (m.payload.size() < 32) continue;
    std::copy(m.payload.begin(), m.payload.begin() + 32, claim.proof.begin());
    claim.selected = true;
    if (!committee::verify_sortition(claim, role_tag, seed, epoch, net.key_of(m.sender), q))
      continue;
    seen[static_cast<size_t>(m.sender)] = 1;
    out.push_back(std::move(m));
  }
  std::sort(out.begin(), out.end(),
            [](const net::NetMessage& a, const net::NetMessage& b) { return a.sender < b.sender; });
  return out;
}

Bytes next_seed(const ParamVector& w, uint64_t epoch) {
  Bytes buf = net::serialize_params(w);
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<uint8_t>(epoch >> (8 * i)));
  const auto h = net::sha256(buf);
  return Bytes(h.begin(), h.end());
}

Bytes retry_seed(const Bytes& prev, uint64_t epoch, int attempt) {
  Bytes buf = prev;
  buf.push_back(0x52);  // retry marker
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<uint8_t>(epoch >> (8 * i)));
  buf.push_back(static_cast<uint8_t>(attempt));
  const auto h = net::sha256(buf);
  return Bytes(h.begin(), h.end());
}

}  // namespace

DecentResult run_decentralized(const committee::Population& pop, const learn::Dataset& data,
                               const std::vector<learn::Shard>& shards,
                               const learn::LossModel& model, const learn::Dataset* eval_data,
                               const ParamVector& w1, const DecentConfig& config) {
  const int n = pop.n;
  if (3 * pop.byz_count >= n)
    throw std::invalid_argument("run_decentralized: needs honest fraction > 2/3");
  if (config.f < 0.0 || config.f >= 1.0 / 3.0 + 1e-12)
    throw std::invalid_argument("run_decentralized: f must be < 1/3");
  if (static_cast<int>(shards.size()) != n)
    throw std::invalid_argument("run_decentralized: need one shard per node");
  if (w1.size() != model.dim())
    throw std::invalid_argument("run_decentralized: w1 dimension mismatch");

  RngFactory rf(config.seed);
  net::Network network(n, rf.derive("node_keys"));
  network.set_trace(config.trace);

  const bool attack_on = config.attack.mode != orch::AttackConfig::Mode::None;
  std::vector<int> honest_ids;
  for (int id = 0; id < n; ++id)
    if (!pop.is_byzantine(id)) honest_ids.push_back(id);

  // honest nodes all start from w1; their states must re-converge each epoch
  std::vector<ParamVector> node_w(static_cast<size_t>(n), w1);

  DecentResult result;
  if (config.record_trajectory) result.trajectory.push_back(w1);

  Bytes seed;
  {
    Bytes genesis = {'g', 'e', 'n', 'e', 's', 'i', 's'};
    for (int i = 0; i < 8; ++i) genesis.push_back(static_cast<uint8_t>(config.seed >> (8 * i)));
    const auto h = net::sha256(genesis);
    seed.assign(h.begin(), h.end());
  }

  for (int t = 1; t <= config.T; ++t) {
    const double eta = config.step.eta(t);
    DecentEpochInfo info;
    info.t = t;

    RoleSelection sel;
    int attempt = 0;
    for (;; ++attempt) {
      if (attempt > config.max_retries)
        throw std::runtime_error("run_decentralized: no proposers/voters after retries");
      sel = run_sortition(network, seed, static_cast<uint64_t>(t), config);
      if (!sel.proposers.empty() && !sel.voters.empty()) break;
      seed = retry_seed(seed, static_cast<uint64_t>(t), attempt);
      ++result.aborted_attempts;
      ++info.retries;
    }
    RngFactory erf(rf.derive("epoch", static_cast<uint64_t>(t), static_cast<uint64_t>(attempt)));
    const uint64_t msg_before = network.messages_sent();

    info.proposers = static_cast<int>(sel.proposers.size());
    info.voters = static_cast<int>(sel.voters.size());
    info.cons_committee = static_cast<int>(sel.cons_committee.size());

    const ParamVector& w_ref = node_w[static_cast<size_t>(honest_ids.front())];

    // --- proposing round ---
    std::vector<ParamVector> honest_grads;
    std::vector<int> byz_proposers;
    std::unordered_map<int, ParamVector> proposer_grad;
    for (int id : sel.proposers) {
      if (attack_on && pop.is_byzantine(id)) {
        byz_proposers.push_back(id);
        continue;
      }
      auto rng = erf.stream("prop_batch", static_cast<uint64_t>(id));
      const auto batch = learn::sample_batch(data, shards[id], config.B, rng);
      proposer_grad[id] = model.gradient(node_w[static_cast<size_t>(id)], batch);
      honest_grads.push_back(proposer_grad[id]);
    }
    double gamma_used = 0.0;
    if (!byz_proposers.empty() && !honest_grads.empty()) {
      adversary::AttackState st = adversary::estimate_honest_stats(honest_grads);
      if (config.attack.mode == orch::AttackConfig::Mode::GammaFixed) {
        st.gamma = config.attack.gamma;
      } else {
        adversary::HoldoutSimContext ctx;
        ctx.model = &model;
        ctx.data = &data;
        ctx.w = w_ref;
        ctx.eta = eta;
        ctx.n_voters = static_cast<int>(sel.voters.size());
        ctx.m_c = config.m_c;
        ctx.f = config.f;
        ctx.seed = erf.derive("atk_sim");
        const int copies = std::max(1, static_cast<int>(byz_proposers.size()));
        auto pred = adversary::make_holdout_predicate(honest_grads, copies, ctx);
        st.gamma =
            adversary::search_gamma(honest_grads, pred, config.attack.gamma_hi, config.attack.gamma_tol)
                .gamma;
      }
      gamma_used = st.gamma;
      const ParamVector byz_vec = adversary::byzantine_update(st);
      for (int id : byz_proposers) proposer_grad[id] = byz_vec;
    } else if (!byz_proposers.empty()) {
      for (int id : byz_proposers) proposer_grad[id] = ParamVector::Zero(model.dim());
    }

    for (int id : sel.proposers) {
      // Byzantine proposers use the same attack vector for every recipient
      auto payload = net::encode_gradient_payload(sel.prop_proof[id].proof, proposer_grad[id]);
      network.broadcast(network.make_message(id, static_cast<uint64_t>(t),
                                             net::RoundTag::Proposal, std::move(payload)));
    }

    // --- voting round ---
    adversary::EquivocationContext equiv_ctx;
    equiv_ctx.network = &network;
    equiv_ctx.salt = erf.derive("equiv_salt");

    for (int voter : sel.voters) {
      auto msgs = verified_round(network, voter, static_cast<uint64_t>(t), net::RoundTag::Proposal,
                                 seed, "P", config.q1);
      if (msgs.empty()) continue;

      std::vector<agg::GradientProposal> proposals;
      proposals.reserve(msgs.size());
      for (const auto& m : msgs) {
        auto body = net::decode_gradient_payload(m.payload);
        if (!body || body->grad.size() != model.dim()) continue;
        proposals.push_back({m.sender, std::move(body->grad)});
      }
      if (proposals.empty()) continue;
      const int k = agg::honest_ballot_size(static_cast<int>(proposals.size()), config.f);

      std::vector<int> endorsed_ids;
      if (pop.is_byzantine(voter) && attack_on && config.attack.coalition_voting) {
        std::vector<int> byz_ids, honest_prop_ids;
        for (const auto& p : proposals)
          (pop.is_byzantine(p.proposer) ? byz_ids : honest_prop_ids).push_back(p.proposer);
        auto rng = erf.stream("coalition", static_cast<uint64_t>(voter));
        endorsed_ids = adversary::coalition_ballot(byz_ids, honest_prop_ids, k, rng, voter).endorsed;
      } else {
        auto rng = erf.stream("vote_batch", static_cast<uint64_t>(voter));
        const auto holdout = learn::sample_batch(data, shards[voter], config.m_c, rng);
        const auto ballot = agg::holdout_votes(proposals, node_w[static_cast<size_t>(voter)], eta,
                                               model, holdout, config.f, voter);
        endorsed_ids.reserve(ballot.endorsed.size());
        for (int ix : ballot.endorsed) endorsed_ids.push_back(proposals[ix].proposer);
      }

      auto payload = net::encode_vote_payload(sel.vote_proof[voter].proof, endorsed_ids);
      auto base = network.make_message(voter, static_cast<uint64_t>(t), net::RoundTag::Vote,
                                       std::move(payload));
      if (pop.is_byzantine(voter) && attack_on &&
          config.attack.equivocation == adversary::EquivocationMode::PerRecipientNoise) {
        equiv_ctx.proposer_pool.clear();
        for (const auto& p : proposals) equiv_ctx.proposer_pool.push_back(p.proposer);
        network.broadcast_per_recipient(voter, [&](int recipient) {
          return adversary::equivocate(base, recipient,
                                       adversary::EquivocationMode::PerRecipientNoise, equiv_ctx);
        });
      } else {
        network.broadcast(base);
      }
    }

    // --- holdout soft-consensus: every node forms its local candidate ---
    std::vector<ParamVector> candidate(static_cast<size_t>(n));
    int uc_size = 0, byz_in_uc = 0;
    bool first_honest_done = false;
    for (int node = 0; node < n; ++node) {
      const bool honest = !pop.is_byzantine(node);
      auto prop_msgs = verified_round(network, node, static_cast<uint64_t>(t),
                                      net::RoundTag::Proposal, seed, "P", config.q1);
      auto vote_msgs = verified_round(network, node, static_cast<uint64_t>(t), net::RoundTag::Vote,
                                      seed, "V", config.q2);
      if (!honest) continue;  // Byzantine local state is irrelevant

      std::vector<agg::GradientProposal> proposals;
      std::unordered_map<int, int> index_of;
      for (const auto& m : prop_msgs) {
        auto body = net::decode_gradient_payload(m.payload);
        if (!body || body->grad.size() != model.dim()) continue;
        index_of[m.sender] = static_cast<int>(proposals.size());
        proposals.push_back({m.sender, std::move(body->grad)});
      }

      std::vector<agg::VoteBallot> ballots;
      for (const auto& m : vote_msgs) {
        auto body = net::decode_vote_payload(m.payload);
        agg::VoteBallot ballot;
        ballot.voter = m.sender;
        if (body) {
          for (int id : body->endorsed_ids) {
            auto it = index_of.find(id);
            ballot.endorsed.push_back(it == index_of.end() ? -1 : it->second);
          }
        }
        ballots.push_back(std::move(ballot));  // malformed ones rejected below
      }

      ParamVector& cand = candidate[static_cast<size_t>(node)];
      if (proposals.empty() || ballots.empty()) {
        cand = node_w[static_cast<size_t>(node)];
      } else {
        try {
          const auto outcome = agg::union_consensus(ballots, proposals, config.f);
          cand = node_w[static_cast<size_t>(node)] - eta * outcome.update;
          if (!first_honest_done) {
            uc_size = static_cast<int>(outcome.members.size());
            for (int m : outcome.members)
              byz_in_uc += pop.is_byzantine(proposals[m].proposer) ? 1 : 0;
            first_honest_done = true;
          }
        } catch (const std::runtime_error&) {
          cand = node_w[static_cast<size_t>(node)];  // no usable consensus input
        }
      }
    }

    // --- consensus round ---
    const ParamVector junk = ParamVector::Constant(model.dim(), 1337.0);
    for (int member : sel.cons_committee) {
      const ParamVector& value =
          (pop.is_byzantine(member) && attack_on) ? junk : candidate[static_cast<size_t>(member)];
      auto payload = net::encode_gradient_payload(sel.cons_proof[member].proof, value);
      network.broadcast(network.make_message(member, static_cast<uint64_t>(t),
                                             net::RoundTag::Consensus, std::move(payload)));
    }

    bool failed = false;
    bool agreement = true;
    std::optional<Bytes> agreed_bytes;
    for (int node : honest_ids) {
      auto msgs = verified_round(network, node, static_cast<uint64_t>(t), net::RoundTag::Consensus,
                                 seed, "C", config.q3);
      std::vector<ParamVector> candidates;
      candidates.reserve(msgs.size());
      for (const auto& m : msgs) {
        auto body = net::decode_gradient_payload(m.payload);
        if (body && body->grad.size() == model.dim()) candidates.push_back(std::move(body->grad));
      }
      const auto decision = consensus_round(candidates);
      if (decision.ok)
        node_w[static_cast<size_t>(node)] = decision.winner;
      // on failure the node retains w_t

      const Bytes bytes = net::serialize_params(node_w[static_cast<size_t>(node)]);
      if (!agreed_bytes)
        agreed_bytes = bytes;
      else if (*agreed_bytes != bytes)
        agreement = false;
      if (!decision.ok) failed = true;
    }

    network.clear_inboxes();  // epoch boundary; stale rounds cannot leak

    info.consensus_failed = failed;
    info.honest_agreement = agreement;
    info.messages = network.messages_sent() - msg_before;
    info.expected_messages = static_cast<uint64_t>(n) *
                             (static_cast<uint64_t>(info.proposers) +
                              static_cast<uint64_t>(info.voters) +
                              static_cast<uint64_t>(info.cons_committee));
    if (failed) ++result.consensus_failures;
    if (!agreement) result.agreement_every_epoch = false;

    const ParamVector& w_agreed = node_w[static_cast<size_t>(honest_ids.front())];
    seed = next_seed(w_agreed, static_cast<uint64_t>(t));
    if (config.record_trajectory) result.trajectory.push_back(w_agreed);

    orch::EpochRecord rec;
    rec.t = t;
    rec.uc_size = uc_size;
    rec.byz_in_uc = byz_in_uc;
    rec.gamma_used = gamma_used;
    rec.messages_sent = info.messages;
    {
      const learn::Batch train = learn::full_batch(data);
      rec.train_loss = model.loss(w_agreed, train);
      if (eval_data != nullptr) {
        const learn::Batch eval = learn::full_batch(*eval_data);
        std::tie(rec.test_loss, rec.test_acc) = orch::evaluate(model, w_agreed, eval);
      } else {
        rec.test_loss = rec.train_loss;
      }
    }
    result.records.push_back(rec);
    result.epoch_info.push_back(info);
  }

  result.final_w = node_w[static_cast<size_t>(honest_ids.front())];
  return result;
}

}  // namespace byzsgd::decent
