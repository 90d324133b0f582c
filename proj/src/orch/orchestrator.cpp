#include "byzsgd/orch/orchestrator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "byzsgd/agg/aggregation.hpp"
#include "byzsgd/rng.hpp"

namespace byzsgd::orch {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

int min_shard_size(const std::vector<learn::Shard>& shards) {
  int m = shards.empty() ? 0 : shards[0].size();
  for (const auto& s : shards) m = std::min(m, s.size());
  return m;
}

struct EpochProposals {
  committee::CommitteeDraw draw;
  std::vector<agg::GradientProposal> proposals;  // ascending node id
  std::vector<int> byz_positions;                // indices into proposals
  double gamma_used = 0.0;
};

adversary::AcceptancePredicate make_rule_predicate(Rule rule, std::vector<ParamVector> honest,
                                                   int byz_copies, const RunConfig& config,
                                                   const RunEnv& env, const ParamVector& w,
                                                   double eta, uint64_t sim_seed) {
  switch (rule) {
    case Rule::Average:
      return adversary::make_average_predicate();
    case Rule::Krum:
      return adversary::make_krum_predicate(std::move(honest), byz_copies, config.f);
    case Rule::TrimmedMean:
      return adversary::make_trimmed_mean_predicate(std::move(honest), byz_copies, config.f);
    case Rule::Holdout: {
      adversary::HoldoutSimContext ctx;
      ctx.model = env.model;
      ctx.data = env.data;
      ctx.w = w;
      ctx.eta = eta;
      ctx.n_voters = config.N_c;
      ctx.m_c = config.m_c;
      ctx.f = config.f;
      ctx.seed = sim_seed;
      return adversary::make_holdout_predicate(std::move(honest), byz_copies, ctx);
    }
  }
  throw std::logic_error("unreachable");
}

/// Proposer phase shared by both runners: committee draw, honest gradients,
/// Byzantine substitution. RNG stream identities depend only on (seed, t,
/// node), so both runners produce identical proposals for identical configs.
EpochProposals collect_proposals(int t, const ParamVector& w, double eta, const RunConfig& config,
                                 const RunEnv& env, const RngFactory& rf) {
  EpochProposals out;
  auto committee_rng = rf.stream("committee_P", static_cast<uint64_t>(t));
  out.draw = committee::draw_committee(*env.population, config.N_p, committee::Role::Proposer, t,
                                       committee_rng);

  const bool attack_active = config.attack.mode != AttackConfig::Mode::None;
  std::vector<ParamVector> honest;
  honest.reserve(out.draw.members.size());
  out.proposals.resize(out.draw.members.size());
  for (size_t i = 0; i < out.draw.members.size(); ++i) {
    const int node = out.draw.members[i];
    out.proposals[i].proposer = node;
    if (attack_active && env.population->is_byzantine(node)) {
      out.byz_positions.push_back(static_cast<int>(i));
      continue;
    }
    auto batch_rng = rf.stream("prop_batch", static_cast<uint64_t>(t), static_cast<uint64_t>(node));
    const learn::Batch batch =
        learn::sample_batch(*env.data, (*env.shards)[node], config.B, batch_rng);
    out.proposals[i].grad = env.model->gradient(w, batch);
    honest.push_back(out.proposals[i].grad);
  }

  if (!out.byz_positions.empty()) {
    ParamVector byz_vec;
    if (honest.empty()) {
      byz_vec = ParamVector::Zero(env.model->dim());  // nothing to estimate from
    } else {
      adversary::AttackState st = adversary::estimate_honest_stats(honest);
      if (config.attack.mode == AttackConfig::Mode::GammaFixed) {
        st.gamma = config.attack.gamma;
      } else {
        const int copies = std::max(1, agg::floor_frac(config.f, config.N_p));
        auto predicate = make_rule_predicate(config.rule, honest, copies, config, env, w, eta,
                                             rf.derive("atk_sim", static_cast<uint64_t>(t)));
        st.gamma = adversary::search_gamma(honest, predicate, config.attack.gamma_hi,
                                           config.attack.gamma_tol)
                       .gamma;
      }
      out.gamma_used = st.gamma;
      byz_vec = adversary::byzantine_update(st);
    }
    for (int pos : out.byz_positions) out.proposals[pos].grad = byz_vec;
  }
  return out;
}

bool byz_majority(const committee::Population& pop, const committee::CommitteeDraw& draw) {
  return 2 * committee::count_byzantine(pop, draw) >= draw.size();
}

void record_metrics(EpochRecord& rec, const ParamVector& w, const RunEnv& env) {
  const learn::Batch train = learn::full_batch(*env.data);
  rec.train_loss = env.model->loss(w, train);
  if (env.eval_data != nullptr) {
    const learn::Batch eval = learn::full_batch(*env.eval_data);
    std::tie(rec.test_loss, rec.test_acc) = evaluate(*env.model, w, eval);
  } else {
    rec.test_loss = rec.train_loss;
  }
}

}  // namespace

void validate_config(const RunConfig& config, const RunEnv& env) {
  if (env.population == nullptr || env.data == nullptr || env.shards == nullptr ||
      env.model == nullptr)
    throw std::invalid_argument("run env: missing population/data/shards/model");
  const int n = env.population->n;
  if (config.T < 0) throw std::invalid_argument("config.T: must be >= 0");
  if (config.N_p < 1 || config.N_p > n) throw std::invalid_argument("config.N_p: out of range");
  if (config.N_c < 1 || config.N_c > n) throw std::invalid_argument("config.N_c: out of range");
  if (config.f < 0.0 || config.f >= 0.5)
    throw std::invalid_argument("config.f: must be in [0, 1/2)");
  const int shard_min = min_shard_size(*env.shards);
  if (static_cast<int>(env.shards->size()) != n)
    throw std::invalid_argument("shards: need one shard per node");
  if (config.B < 1 || config.B > shard_min)
    throw std::invalid_argument("config.B: must be in [1, min shard size]");
  if (config.m_c < 1 || config.m_c > shard_min)
    throw std::invalid_argument("config.m_c: must be in [1, min shard size]");
  if (env.w1.size() != env.model->dim())
    throw std::invalid_argument("w1: dimension does not match the model");
  if (config.step.kind == StepSchedule::Kind::InverseT && !(config.step.value > 0))
    throw std::invalid_argument("step: inverse schedule needs alpha > 0");
}

RunResult run_distributed_sgd(const RunConfig& config, const RunEnv& env) {
  if (config.rule == Rule::Holdout)
    throw std::invalid_argument("run_distributed_sgd: rule must be average/krum/trimmed_mean");
  validate_config(config, env);
  RngFactory rf(config.seed);

  RunResult result;
  ParamVector w = env.w1;
  if (config.record_trajectory) result.trajectory.push_back(w);

  for (int t = 1; t <= config.T; ++t) {
    const auto start = Clock::now();
    const double eta = config.step.eta(t);
    EpochProposals ep = collect_proposals(t, w, eta, config, env, rf);
    if (byz_majority(*env.population, ep.draw)) result.byz_majority_epochs.push_back(t);

    ParamVector v;
    int uc_size = 0, byz_in_uc = 0;
    switch (config.rule) {
      case Rule::Average:
        v = agg::aggregate_average(ep.proposals);
        break;
      case Rule::Krum: {
        const int sel = agg::krum_select(ep.proposals, config.f);
        v = ep.proposals[sel].grad;
        uc_size = 1;
        byz_in_uc = env.population->is_byzantine(ep.proposals[sel].proposer) ? 1 : 0;
        break;
      }
      case Rule::TrimmedMean:
        v = agg::aggregate_trimmed_mean(ep.proposals, config.f);
        break;
      default:
        throw std::logic_error("unreachable");
    }

    w -= eta * v;
    if (config.record_trajectory) result.trajectory.push_back(w);
    result.messages.proposals += static_cast<uint64_t>(config.N_p);

    EpochRecord rec;
    rec.t = t;
    rec.uc_size = uc_size;
    rec.byz_in_uc = byz_in_uc;
    rec.gamma_used = ep.gamma_used;
    rec.messages_sent = static_cast<uint64_t>(config.N_p);
    record_metrics(rec, w, env);
    rec.wall_time = seconds_since(start);
    result.records.push_back(std::move(rec));
  }
  result.final_w = std::move(w);
  return result;
}

RunResult run_holdout_sgd(const RunConfig& config, const RunEnv& env) {
  if (config.rule != Rule::Holdout)
    throw std::invalid_argument("run_holdout_sgd: rule must be holdout");
  validate_config(config, env);
  RngFactory rf(config.seed);
  const auto& pop = *env.population;

  RunResult result;
  ParamVector w = env.w1;
  if (config.record_trajectory) result.trajectory.push_back(w);

  for (int t = 1; t <= config.T; ++t) {
    const auto start = Clock::now();
    const double eta = config.step.eta(t);
    EpochProposals ep = collect_proposals(t, w, eta, config, env, rf);

    auto voter_rng = rf.stream("committee_C", static_cast<uint64_t>(t));
    const auto voters =
        committee::draw_committee(pop, config.N_c, committee::Role::Voter, t, voter_rng);
    if (byz_majority(pop, ep.draw) || byz_majority(pop, voters))
      result.byz_majority_epochs.push_back(t);

    std::vector<int> honest_positions;
    for (int i = 0; i < static_cast<int>(ep.proposals.size()); ++i)
      if (!pop.is_byzantine(ep.proposals[i].proposer)) honest_positions.push_back(i);
    std::vector<int> byz_positions_all;
    for (int i = 0; i < static_cast<int>(ep.proposals.size()); ++i)
      if (pop.is_byzantine(ep.proposals[i].proposer)) byz_positions_all.push_back(i);

    const int k = agg::honest_ballot_size(config.N_p, config.f);
    std::vector<agg::VoteBallot> ballots;
    ballots.reserve(voters.members.size());
    for (int voter : voters.members) {
      if (pop.is_byzantine(voter) && config.attack.coalition_voting) {
        auto coalition_rng =
            rf.stream("coalition", static_cast<uint64_t>(t), static_cast<uint64_t>(voter));
        ballots.push_back(adversary::coalition_ballot(byz_positions_all, honest_positions, k,
                                                      coalition_rng, voter));
        continue;
      }
      auto batch_rng =
          rf.stream("vote_batch", static_cast<uint64_t>(t), static_cast<uint64_t>(voter));
      const learn::Batch holdout =
          learn::sample_batch(*env.data, (*env.shards)[voter], config.m_c, batch_rng);
      ballots.push_back(
          agg::holdout_votes(ep.proposals, w, eta, *env.model, holdout, config.f, voter));
    }

    const auto outcome = agg::union_consensus(ballots, ep.proposals, config.f);
    int byz_in_uc = 0;
    for (int m : outcome.members)
      byz_in_uc += pop.is_byzantine(ep.proposals[m].proposer) ? 1 : 0;

    w -= eta * outcome.update;
    if (config.record_trajectory) result.trajectory.push_back(w);

    result.messages.proposals += static_cast<uint64_t>(config.N_p);
    result.messages.ballots += static_cast<uint64_t>(config.N_c);
    result.messages.proposal_forwards +=
        static_cast<uint64_t>(config.N_c) * static_cast<uint64_t>(config.N_p);

    EpochRecord rec;
    rec.t = t;
    rec.uc_size = static_cast<int>(outcome.members.size());
    rec.byz_in_uc = byz_in_uc;
    rec.gamma_used = ep.gamma_used;
    rec.messages_sent = static_cast<uint64_t>(config.N_p) + 2ULL * config.N_c;
    record_metrics(rec, w, env);
    rec.wall_time = seconds_since(start);
    result.records.push_back(std::move(rec));
  }
  result.final_w = std::move(w);
  return result;
}

RunResult run(const RunConfig& config, const RunEnv& env) {
  return config.rule == Rule::Holdout ? run_holdout_sgd(config, env)
                                      : run_distributed_sgd(config, env);
}

std::pair<double, double> evaluate(const learn::LossModel& model, const ParamVector& w,
                                   const learn::Batch& eval_set) {
  if (eval_set.size() == 0) throw std::invalid_argument("evaluate: empty evaluation set");
  const double loss = model.loss(w, eval_set);
  if (!model.is_classifier()) return {loss, std::nan("")};
  int correct = 0;
  for (int i = 0; i < eval_set.size(); ++i)
    correct += model.predict(w, eval_set.example(i)) == eval_set.example(i).label ? 1 : 0;
  return {loss, static_cast<double>(correct) / eval_set.size()};
}

Prop1Report check_proposition1(const RunConfig& config, const RunEnv& env,
                               const std::vector<int>& sample_epochs, int repetitions) {
  const auto* quad = dynamic_cast<const learn::QuadraticModel*>(env.model);
  if (quad == nullptr)
    throw std::invalid_argument("check_proposition1: requires the quadratic model");
  if (repetitions < 2) throw std::invalid_argument("check_proposition1: repetitions must be >= 2");

  RunConfig traj_config = config;
  traj_config.record_trajectory = true;
  const RunResult base = run_holdout_sgd(traj_config, env);

  RngFactory rf(config.seed);
  const auto& pop = *env.population;
  const double beta = quad->beta();

  Prop1Report report;
  report.repetitions = repetitions;
  int violations = 0;

  for (int t : sample_epochs) {
    if (t < 1 || t > config.T) throw std::invalid_argument("check_proposition1: epoch out of range");
    const ParamVector& w = base.trajectory[static_cast<size_t>(t - 1)];
    const double eta = config.step.eta(t);

    const ParamVector true_grad = quad->full_gradient(w);
    const double radius = (w - quad->minimizer()).norm();
    const double G = quad->gradient_bound(radius, *env.data);
    const double rhs = true_grad.squaredNorm() - 0.5 * beta * G * G * eta;

    Prop1EpochStat stat;
    stat.t = t;
    stat.eta = eta;
    stat.rhs = rhs;

    std::vector<double> rep_means;
    rep_means.reserve(repetitions);
    for (int rep = 0; rep < repetitions; ++rep) {
      RngFactory rep_rf(rf.derive("p1_rep", static_cast<uint64_t>(t), static_cast<uint64_t>(rep)));

      // the proposition assumes honest majorities; redraw when violated
      committee::CommitteeDraw prop_draw, voter_draw;
      for (int attempt = 0;; ++attempt) {
        auto prng = rep_rf.stream("P", static_cast<uint64_t>(attempt));
        auto crng = rep_rf.stream("C", static_cast<uint64_t>(attempt));
        prop_draw = committee::draw_committee(pop, config.N_p, committee::Role::Proposer, t, prng);
        voter_draw = committee::draw_committee(pop, config.N_c, committee::Role::Voter, t, crng);
        if (!byz_majority(pop, prop_draw) && !byz_majority(pop, voter_draw)) break;
        ++stat.skipped_byz_majority;
        if (attempt > 1000)
          throw std::runtime_error("check_proposition1: cannot draw honest-majority committees");
      }

      std::vector<agg::GradientProposal> proposals(prop_draw.members.size());
      std::vector<ParamVector> honest;
      std::vector<int> byz_pos, honest_pos;
      for (size_t i = 0; i < prop_draw.members.size(); ++i) {
        const int node = prop_draw.members[i];
        proposals[i].proposer = node;
        if (config.attack.mode != AttackConfig::Mode::None && pop.is_byzantine(node)) {
          byz_pos.push_back(static_cast<int>(i));
          continue;
        }
        auto brng = rep_rf.stream("batch", static_cast<uint64_t>(node));
        proposals[i].grad =
            quad->gradient(w, learn::sample_batch(*env.data, (*env.shards)[node], config.B, brng));
        honest.push_back(proposals[i].grad);
        honest_pos.push_back(static_cast<int>(i));
      }
      if (!byz_pos.empty() && !honest.empty()) {
        adversary::AttackState st = adversary::estimate_honest_stats(honest);
        st.gamma = config.attack.mode == AttackConfig::Mode::GammaFixed ? config.attack.gamma : 1.75;
        const ParamVector byz_vec = adversary::byzantine_update(st);
        for (int pos : byz_pos) proposals[pos].grad = byz_vec;
      }

      const int k = agg::honest_ballot_size(config.N_p, config.f);
      double sum = 0.0;
      long long count = 0;
      for (int voter : voter_draw.members) {
        if (pop.is_byzantine(voter)) continue;  // the bound quantifies honest voters
        auto vrng = rep_rf.stream("vote_batch", static_cast<uint64_t>(voter));
        const learn::Batch holdout =
            learn::sample_batch(*env.data, (*env.shards)[voter], config.m_c, vrng);
        const ParamVector voter_grad = quad->gradient(w, holdout);
        const auto ballot =
            agg::holdout_votes(proposals, w, eta, *quad, holdout, config.f, voter);
        (void)k;
        for (int j : ballot.endorsed) {
          sum += proposals[j].grad.dot(voter_grad);
          ++count;
        }
      }
      if (count > 0) rep_means.push_back(sum / static_cast<double>(count));
    }

    double mean = 0.0;
    for (double v : rep_means) mean += v;
    mean /= static_cast<double>(rep_means.size());
    double var = 0.0;
    for (double v : rep_means) var += (v - mean) * (v - mean);
    var /= static_cast<double>(rep_means.size() - 1);
    const double se = std::sqrt(var / static_cast<double>(rep_means.size()));

    stat.mean_inner = mean;
    stat.stderr_inner = se;
    stat.margin = mean - rhs;
    stat.ok_3sigma = stat.margin >= -3.0 * se;
    if (!stat.ok_3sigma) ++violations;
    report.epochs.push_back(stat);
  }

  report.violation_rate =
      report.epochs.empty() ? 0.0 : static_cast<double>(violations) / report.epochs.size();
  return report;
}

}  // namespace byzsgd::orch
