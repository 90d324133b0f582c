#include "byzsgd/checks/checks.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>
#include <sstream>

#include "byzsgd/adversary/adversary.hpp"
#include "byzsgd/agg/aggregation.hpp"
#include "byzsgd/committee/committee.hpp"
#include "byzsgd/decent/decentralized.hpp"
#include "byzsgd/learn/loss_model.hpp"
#include "byzsgd/orch/orchestrator.hpp"
#include "byzsgd/rng.hpp"

namespace byzsgd::checks {

namespace {

using Clock = std::chrono::steady_clock;

struct Timer {
  Clock::time_point start = Clock::now();
  double seconds() const { return std::chrono::duration<double>(Clock::now() - start).count(); }
};

std::string fmt(double v, int prec = 6) {
  std::ostringstream os;
  os.precision(prec);
  os << v;
  return os.str();
}

/// Owning bundle for quadratic-model experiments.
struct QuadSetup {
  std::unique_ptr<learn::QuadraticModel> model;
  learn::Dataset data;
  learn::Dataset eval;
  committee::Population pop;
  std::vector<learn::Shard> shards;
  ParamVector w1;

  orch::RunEnv env() const {
    orch::RunEnv e;
    e.population = &pop;
    e.data = &data;
    e.shards = &shards;
    e.model = model.get();
    e.eval_data = &eval;
    e.w1 = w1;
    return e;
  }
};

QuadSetup make_quad_setup(int d, double alpha, double beta, double noise, int n, int per_shard,
                          int byz_count, uint64_t seed) {
  QuadSetup s;
  s.model = std::make_unique<learn::QuadraticModel>(d, alpha, beta, seed);
  s.data = s.model->make_noise_dataset(n * per_shard, noise, mix64(seed ^ 0x11));
  s.eval = s.model->make_noise_dataset(256, noise, mix64(seed ^ 0x22));
  s.pop = committee::Population::with_byz_count(n, byz_count, mix64(seed ^ 0x33));
  s.shards = learn::partition(s.data, n, learn::PartitionMode::UniformIid, mix64(seed ^ 0x44));
  s.w1 = ParamVector::Zero(d);
  return s;
}

double mean_of(const std::vector<double>& xs) {
  double m = 0;
  for (double x : xs) m += x;
  return m / static_cast<double>(xs.size());
}

double stddev_of(const std::vector<double>& xs) {
  const double m = mean_of(xs);
  double v = 0;
  for (double x : xs) v += (x - m) * (x - m);
  return std::sqrt(v / static_cast<double>(xs.size() - 1));
}

}  // namespace

// -------------------------------------------------------------- criterion 1

CheckResult check_union_nonemptiness(bool full) {
  Timer timer;
  CheckResult r{"union-consensus non-emptiness", false, "", 0};
  const int random_trials = full ? 10000 : 1000;
  const int adversarial_trials = full ? 100 : 20;

  auto rng = RngFactory(2024).stream("nonempty");
  std::uniform_int_distribution<int> size_dist(3, 60);
  std::uniform_real_distribution<double> f_dist(0.0, 0.49);

  int empties = 0;
  long long total = 0;
  auto run_matrix = [&](int n_p, int n_c, double f, bool adversarial) {
    std::vector<agg::GradientProposal> proposals(n_p);
    for (int j = 0; j < n_p; ++j) proposals[j] = {j, ParamVector::Constant(1, j)};
    const int k = agg::honest_ballot_size(n_p, f);
    std::vector<agg::VoteBallot> ballots(n_c);
    if (!adversarial) {
      for (int c = 0; c < n_c; ++c) {
        ballots[c].voter = c;
        ballots[c].endorsed = sample_without_replacement(n_p, k, rng);
        std::sort(ballots[c].endorsed.begin(), ballots[c].endorsed.end());
      }
    } else {
      // greedy vote spreading: every ballot endorses the currently
      // least-endorsed proposals, minimizing the max tally
      std::vector<int> tally(n_p, 0);
      for (int c = 0; c < n_c; ++c) {
        std::vector<int> order(n_p);
        for (int j = 0; j < n_p; ++j) order[j] = j;
        std::stable_sort(order.begin(), order.end(),
                         [&](int a, int b) { return tally[a] < tally[b]; });
        ballots[c].voter = c;
        ballots[c].endorsed.assign(order.begin(), order.begin() + k);
        std::sort(ballots[c].endorsed.begin(), ballots[c].endorsed.end());
        for (int j : ballots[c].endorsed) ++tally[j];
      }
    }
    ++total;
    try {
      const auto outcome = agg::union_consensus(ballots, proposals, f);
      if (outcome.members.empty()) ++empties;
    } catch (const std::exception&) {
      ++empties;
    }
  };

  for (int i = 0; i < random_trials; ++i)
    run_matrix(size_dist(rng), size_dist(rng), f_dist(rng), false);
  for (int i = 0; i < adversarial_trials; ++i)
    run_matrix(size_dist(rng), size_dist(rng), f_dist(rng), true);

  r.pass = empties == 0;
  r.details = "empty UC sets: " + std::to_string(empties) + " / " + std::to_string(total);
  r.seconds = timer.seconds();
  return r;
}

// -------------------------------------------------------------- criterion 2

CheckResult check_f0_reduction(bool full) {
  (void)full;
  Timer timer;
  CheckResult r{"f=0 reduction to big-batch SGD (bitwise)", false, "", 0};

  QuadSetup s = make_quad_setup(20, 1.0, 10.0, 1.0, 20, 80, 0, 91);
  orch::RunConfig config;
  config.T = 50;
  config.N_p = 10;
  config.N_c = 10;
  config.f = 0.0;
  config.B = 8;
  config.m_c = 8;
  config.step = orch::StepSchedule::constant(0.05);
  config.seed = 17;
  config.record_trajectory = true;

  auto env = s.env();
  config.rule = orch::Rule::Holdout;
  const auto holdout = orch::run_holdout_sgd(config, env);
  config.rule = orch::Rule::Average;
  const auto average = orch::run_distributed_sgd(config, env);

  bool identical = holdout.trajectory.size() == average.trajectory.size();
  int first_diff = -1;
  for (size_t t = 0; identical && t < holdout.trajectory.size(); ++t) {
    for (Eigen::Index i = 0; i < holdout.trajectory[t].size(); ++i) {
      if (holdout.trajectory[t][i] != average.trajectory[t][i]) {
        identical = false;
        first_diff = static_cast<int>(t);
        break;
      }
    }
  }
  r.pass = identical;
  r.details = identical ? "50-epoch trajectories bitwise identical"
                        : "first differing epoch: " + std::to_string(first_diff);
  r.seconds = timer.seconds();
  return r;
}

// -------------------------------------------------------------- criterion 3

CheckResult check_bound_soundness(bool full) {
  Timer timer;
  CheckResult r{"committee bound soundness (f=1/3, T=100, delta=0.01)", false, "", 0};

  const double third = 1.0 / 3.0;
  const int bound = committee::committee_size_bound(100, 0.01, third);
  // formula oracle: 2*(1+2f)/(1-2f)^2 * ln(T/delta) = 30 * ln(1e4) = 276.31
  if (bound != 277) {
    r.details = "bound = " + std::to_string(bound) + ", expected 277";
    r.seconds = timer.seconds();
    return r;
  }

  const int n = 10000;
  const int K = agg::floor_frac(third, n);  // 3333
  const int trials = full ? 10000 : 1000;
  const int draws_per_trial = 100;
  const int t0 = (bound + 1) / 2;

  auto rng = RngFactory(5150).stream("bound_mc");
  committee::Population pop = committee::Population::with_byz_count(n, K, 999);
  int bad_trials = 0;
  for (int trial = 0; trial < trials; ++trial) {
    bool any = false;
    for (int d = 0; d < draws_per_trial && !any; ++d) {
      auto members = sample_without_replacement(n, bound, rng);
      int byz = 0;
      for (int id : members) byz += pop.is_byzantine(id) ? 1 : 0;
      any = byz >= t0;
    }
    if (any) ++bad_trials;
  }
  const double frac = static_cast<double>(bad_trials) / trials;
  const double slack = 3.0 * std::sqrt(0.01 * 0.99 / trials);
  r.pass = frac <= 0.01 + slack;
  r.details = "N=277, K=3333/10000; trials with a Byzantine-majority draw: " + fmt(frac) +
              " (delta=0.01, slack=" + fmt(slack) + ")";
  r.seconds = timer.seconds();
  return r;
}

// -------------------------------------------------------------- criterion 4

CheckResult check_hypergeometric_oracle(bool full) {
  Timer timer;
  CheckResult r{"exact hypergeometric oracle vs Monte-Carlo", false, "", 0};

  const double exact_small = committee::byz_majority_prob_exact(10, 3, 4);
  if (exact_small != 1.0 / 3.0) {
    r.details = "P(X>=2 | 10,3,4) = " + fmt(exact_small, 17) + ", expected exactly 1/3";
    r.seconds = timer.seconds();
    return r;
  }
  if (committee::byz_majority_prob_exact(10, 0, 4) != 0.0 ||
      committee::byz_majority_prob_exact(10, 10, 4) != 1.0) {
    r.details = "degenerate K=0 / K=n cases wrong";
    r.seconds = timer.seconds();
    return r;
  }

  const int trials = full ? 100000 : 20000;
  bool ok = true;
  std::string detail;
  const struct {
    int n, K, N;
  } cases[] = {{10, 3, 4}, {100, 33, 30}};
  for (const auto& c : cases) {
    committee::Population pop = committee::Population::with_byz_count(c.n, c.K, 7);
    const double exact = committee::byz_majority_prob_exact(c.n, c.K, c.N);
    const double mc = committee::byz_majority_prob_mc(pop, c.N, trials, 1234);
    const double se = std::sqrt(std::max(exact * (1 - exact), 1e-12) / trials);
    const bool case_ok = std::abs(mc - exact) <= 3.0 * se;
    const double chernoff =
        committee::byz_majority_chernoff_bound(static_cast<double>(c.K) / c.n, c.N);
    const bool bound_ok = exact <= chernoff + 1e-12;
    ok = ok && case_ok && bound_ok;
    detail += "(n=" + std::to_string(c.n) + ",K=" + std::to_string(c.K) +
              ",N=" + std::to_string(c.N) + "): exact=" + fmt(exact) + " mc=" + fmt(mc) +
              " chernoff=" + fmt(chernoff) + "; ";
  }
  r.pass = ok;
  r.details = detail;
  r.seconds = timer.seconds();
  return r;
}

// -------------------------------------------------------------- criterion 5

namespace {

/// Central finite differences of the batch loss; independent of the analytic
/// gradient path.
ParamVector fd_gradient(const learn::LossModel& model, const ParamVector& w,
                        const learn::Batch& batch, double h) {
  ParamVector g(w.size());
  ParamVector probe = w;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    probe[i] = w[i] + h;
    const double up = model.loss(probe, batch);
    probe[i] = w[i] - h;
    const double down = model.loss(probe, batch);
    probe[i] = w[i];
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

double max_rel_err(const ParamVector& a, const ParamVector& b) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double denom = std::max({std::abs(a[i]), std::abs(b[i]), 1.0});
    worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
  }
  return worst;
}

}  // namespace

CheckResult check_gradient_correctness(bool full) {
  Timer timer;
  CheckResult r{"analytic vs finite-difference gradients", false, "", 0};
  const int probes = full ? 100 : 20;
  const double h = 1e-5, tol = 1e-5;
  auto rng = RngFactory(31).stream("fd_probe");
  std::normal_distribution<double> gauss(0.0, 1.0);

  double worst = 0.0;
  std::string worst_kind;
  auto probe_model = [&](const learn::LossModel& model, const learn::Dataset& data,
                         const ParamVector& center, double w_scale, double clip_radius,
                         int batch_size) {
    learn::Shard all;
    all.indices.resize(data.size());
    for (int i = 0; i < data.size(); ++i) all.indices[i] = i;
    for (int p = 0; p < probes; ++p) {
      ParamVector w(center.size());
      for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = center[i] + w_scale * gauss(rng);
      const double norm = (w - center).norm();
      if (norm > clip_radius) w = center + (w - center) * (clip_radius / norm);
      learn::Batch batch = learn::sample_batch(data, all, batch_size, rng);
      const double err = max_rel_err(model.gradient(w, batch), fd_gradient(model, w, batch, h));
      if (err > worst) {
        worst = err;
        worst_kind = std::string(model.kind());
      }
    }
  };

  {
    learn::QuadraticModel quad(20, 1.0, 8.0, 404);
    const auto data = quad.make_noise_dataset(400, 1.5, 405);
    probe_model(quad, data, quad.minimizer(), 2.0, 5.0, 8);
  }
  {
    learn::SoftmaxModel softmax(15, 5, 0.01);
    learn::DatasetSpec spec{"gaussian_mixture_classification", 300, 15, 5, 1.0, 1.0};
    const auto data = learn::make_synthetic_dataset(spec, 406);
    probe_model(softmax, data, ParamVector::Zero(softmax.dim()), 0.5, 100.0, 8);
  }
  {
    learn::TinyMlpModel mlp(8, 6, 3, 8.0, 0.001);
    learn::DatasetSpec spec{"gaussian_mixture_classification", 200, 8, 3, 1.0, 1.0};
    const auto data = learn::make_synthetic_dataset(spec, 407);
    probe_model(mlp, data, mlp.init_params(408), 0.4, 100.0, 6);
  }

  r.pass = worst <= tol;
  r.details = std::to_string(probes) + " probes/kind; worst rel err " + fmt(worst) + " (" +
              worst_kind + "), tol 1e-5";
  r.seconds = timer.seconds();
  return r;
}

// -------------------------------------------------------------- criterion 6

CheckResult check_convergence_shape(bool full) {
  Timer timer;
  CheckResult r{"convergence-rate shape on the quadratic", false, "", 0};

  const int T = full ? 1000 : 400;
  const int seeds = full ? 4 : 2;
  const std::vector<int> mcs = {10, 100, 1000};
  const int n = 40, per_shard = 1000;

  QuadSetup s = make_quad_setup(20, 1.0, 10.0, 3.0, n, per_shard, 0, 55);
  auto env = s.env();

  std::vector<std::vector<double>> mean_gap(mcs.size(), std::vector<double>(T + 1, 0.0));
  for (size_t mi = 0; mi < mcs.size(); ++mi) {
    for (int sd = 0; sd < seeds; ++sd) {
      orch::RunConfig config;
      config.T = T;
      config.N_p = 20;
      config.N_c = 20;
      config.f = 1.0 / 3.0;  // voting active; population has no Byzantine nodes
      config.B = 5;
      config.m_c = mcs[mi];
      config.step = orch::StepSchedule::inverse(1.0);
      config.rule = orch::Rule::Holdout;
      config.seed = 1000 + static_cast<uint64_t>(sd);
      config.record_trajectory = true;
      const auto run = orch::run_holdout_sgd(config, env);
      for (int t = 0; t <= T; ++t)
        mean_gap[mi][static_cast<size_t>(t)] +=
            s.model->loss_gap(run.trajectory[static_cast<size_t>(t)]) / seeds;
    }
  }

  // plateau = mean excess loss over the trailing 20% of epochs
  std::vector<double> plateau(mcs.size());
  for (size_t mi = 0; mi < mcs.size(); ++mi) {
    double acc = 0;
    int count = 0;
    for (int t = (8 * T) / 10; t <= T; ++t) {
      acc += mean_gap[mi][static_cast<size_t>(t)];
      ++count;
    }
    plateau[mi] = acc / count;
  }
  const bool ordered = plateau[0] > plateau[1] && plateau[1] > plateau[2];

  // shape fit on the m_c=1000 curve: y_t = gap_t - plateau vs x_t = log t / t
  double sxy = 0, sxx = 0, sy = 0, syy = 0;
  int npts = 0;
  for (int t = 10; t <= T; ++t) {
    const double x = std::log(static_cast<double>(t)) / t;
    const double y = mean_gap[2][static_cast<size_t>(t)] - plateau[2];
    sxy += x * y;
    sxx += x * x;
    sy += y;
    syy += y * y;
    ++npts;
  }
  const double c_fit = sxy / sxx;
  double ss_res = 0;
  const double ybar = sy / npts;
  double ss_tot = 0;
  for (int t = 10; t <= T; ++t) {
    const double x = std::log(static_cast<double>(t)) / t;
    const double y = mean_gap[2][static_cast<size_t>(t)] - plateau[2];
    ss_res += (y - c_fit * x) * (y - c_fit * x);
    ss_tot += (y - ybar) * (y - ybar);
  }
  const double r2 = 1.0 - ss_res / ss_tot;

  r.pass = ordered && r2 >= 0.9;
  r.details = "plateaus(m_c=10,100,1000) = " + fmt(plateau[0]) + ", " + fmt(plateau[1]) + ", " +
              fmt(plateau[2]) + (ordered ? " (strictly decreasing)" : " (NOT ordered)") +
              "; C.log(t)/t fit R^2 = " + fmt(r2) + " (C=" + fmt(c_fit) + ")";
  r.seconds = timer.seconds();
  return r;
}

// -------------------------------------------------------------- criterion 7

CheckResult check_proposition1_bound(bool full) {
  Timer timer;
  CheckResult r{"gradient-tolerance bound (voted inner products)", false, "", 0};
  const int reps = full ? 100 : 30;

  bool ok = true;
  std::string detail;
  for (int byz : {0, 10}) {
    QuadSetup s = make_quad_setup(20, 1.0, 10.0, 2.0, 30, 60, byz, 77);
    auto env = s.env();
    orch::RunConfig config;
    config.T = 50;
    config.N_p = 15;
    config.N_c = 15;
    config.f = 1.0 / 3.0;
    config.B = 10;
    config.m_c = 20;
    config.step = orch::StepSchedule::inverse(1.0);
    config.rule = orch::Rule::Holdout;
    config.seed = 404 + static_cast<uint64_t>(byz);
    if (byz > 0) {
      config.attack.mode = orch::AttackConfig::Mode::GammaFixed;
      config.attack.gamma = 1.75;
      config.attack.coalition_voting = true;
    }
    const auto report = orch::check_proposition1(config, env, {1, 5, 20, 50}, reps);
    for (const auto& ep : report.epochs) {
      ok = ok && ep.ok_3sigma;
      if (!ep.ok_3sigma)
        detail += "f=" + std::string(byz ? "1/3" : "0") + " t=" + std::to_string(ep.t) +
                  " margin=" + fmt(ep.margin) + " se=" + fmt(ep.stderr_inner) + "; ";
    }
    detail += std::string(byz ? "f=1/3" : "f=0") + ": violation rate " +
              fmt(report.violation_rate) + "; ";
  }
  r.pass = ok;
  r.details = detail + std::to_string(reps) + " repetitions/epoch, 3-sigma slack";
  r.seconds = timer.seconds();
  return r;
}

// -------------------------------------------------------------- criterion 8

namespace {

struct OrderingSetup {
  learn::Dataset data;
  learn::Dataset eval;
  std::unique_ptr<learn::SoftmaxModel> model;
  committee::Population pop;
  std::vector<learn::Shard> shards;
};

double final_accuracy(const orch::RunResult& run) {
  const int tail = std::min<int>(10, static_cast<int>(run.records.size()));
  double acc = 0;
  for (int i = 0; i < tail; ++i)
    acc += run.records[run.records.size() - 1 - static_cast<size_t>(i)].test_acc;
  return acc / tail;
}

}  // namespace

CheckResult check_robustness_ordering(bool full) {
  Timer timer;
  CheckResult r{"robustness ordering under the adaptive attack", false, "", 0};
  const int T = full ? 200 : 80;
  const int n_seeds = full ? 10 : 3;

  learn::DatasetSpec spec{"gaussian_mixture_classification", 10000, 50, 10, 0.3, 0.4};
  const int n = 100;

  auto run_one = [&](orch::Rule rule, bool attacked, uint64_t seed) {
    OrderingSetup s;
    s.data = learn::make_synthetic_dataset(spec, mix64(seed ^ 0xd5));
    learn::DatasetSpec eval_spec = spec;
    eval_spec.m = 2000;
    s.eval = learn::make_synthetic_dataset(eval_spec, mix64(seed ^ 0xe6));
    s.model = std::make_unique<learn::SoftmaxModel>(spec.d, spec.num_classes, 0.01);
    s.pop = committee::Population::with_byz_count(n, attacked ? 33 : 0, mix64(seed ^ 0xf7));
    s.shards = learn::partition(s.data, n, learn::PartitionMode::UniformIid, mix64(seed ^ 0xa8));

    orch::RunEnv env;
    env.population = &s.pop;
    env.data = &s.data;
    env.shards = &s.shards;
    env.model = s.model.get();
    env.eval_data = &s.eval;
    env.w1 = ParamVector::Zero(s.model->dim());

    orch::RunConfig config;
    config.T = T;
    config.N_p = 30;
    config.N_c = 30;
    config.f = 1.0 / 3.0;
    config.B = 32;
    config.m_c = 64;
    config.step = orch::StepSchedule::constant(0.2);
    config.rule = rule;
    config.seed = seed;
    if (attacked) {
      config.attack.mode = orch::AttackConfig::Mode::GammaSearch;
      config.attack.coalition_voting = true;
    }
    return final_accuracy(orch::run(config, env));
  };

  std::vector<double> acc_holdout, acc_trimmed, acc_krum, acc_clean;
  for (int sd = 0; sd < n_seeds; ++sd) {
    const uint64_t seed = 9000 + static_cast<uint64_t>(sd);
    auto fut_h = std::async(std::launch::async,
                            [&, seed] { return run_one(orch::Rule::Holdout, true, seed); });
    auto fut_t = std::async(std::launch::async,
                            [&, seed] { return run_one(orch::Rule::TrimmedMean, true, seed); });
    acc_krum.push_back(run_one(orch::Rule::Krum, true, seed));
    acc_clean.push_back(run_one(orch::Rule::Average, false, seed));
    acc_holdout.push_back(fut_h.get());
    acc_trimmed.push_back(fut_t.get());
  }

  const double mh = mean_of(acc_holdout), mt = mean_of(acc_trimmed), mk = mean_of(acc_krum),
               ma = mean_of(acc_clean);
  const double sh = stddev_of(acc_holdout), st = stddev_of(acc_trimmed), sk = stddev_of(acc_krum);
  const double se_ht = std::sqrt((sh * sh + st * st) / n_seeds);
  const double se_tk = std::sqrt((st * st + sk * sk) / n_seeds);

  const bool gap1 = mh - mt > 3.0 * se_ht;
  const bool gap2 = mt - mk > 3.0 * se_tk;
  const bool close_to_clean = mh >= ma - 0.05;

  r.pass = gap1 && gap2 && close_to_clean;
  r.details = "mean acc: holdout=" + fmt(mh, 4) + " trimmed=" + fmt(mt, 4) +
              " krum=" + fmt(mk, 4) + " clean-average=" + fmt(ma, 4) +
              "; gaps/3SE: " + fmt((mh - mt) / (3 * se_ht), 3) + ", " +
              fmt((mt - mk) / (3 * se_tk), 3) + "; holdout within 5pts of clean: " +
              (close_to_clean ? "yes" : "NO");
  r.seconds = timer.seconds();
  return r;
}

// -------------------------------------------------------------- criterion 9

CheckResult check_decentralized_agreement(bool full) {
  Timer timer;
  CheckResult r{"decentralized agreement under equivocation", false, "", 0};
  const int T = full ? 50 : 20;
  const int seeds = full ? 20 : 4;

  int failures = 0;
  int disagreements = 0;
  for (int sd = 0; sd < seeds; ++sd) {
    QuadSetup s = make_quad_setup(20, 1.0, 10.0, 2.0, 60, 50, 19, 600 + static_cast<uint64_t>(sd));
    decent::DecentConfig config;
    config.T = T;
    config.q1 = 0.5;
    config.q2 = 0.5;
    config.q3 = 1.0;  // bound-derived committee size exceeds n, so everyone
    config.f = 0.3;
    config.B = 10;
    config.m_c = 15;
    config.step = orch::StepSchedule::inverse(1.0);
    config.seed = 7100 + static_cast<uint64_t>(sd);
    config.attack.mode = orch::AttackConfig::Mode::GammaFixed;
    config.attack.gamma = 1.75;
    config.attack.coalition_voting = true;
    config.attack.equivocation = adversary::EquivocationMode::PerRecipientNoise;

    const auto run = decent::run_decentralized(s.pop, s.data, s.shards, *s.model, &s.eval, s.w1,
                                               config);
    failures += run.consensus_failures;
    if (!run.agreement_every_epoch) ++disagreements;
  }
  r.pass = failures == 0 && disagreements == 0;
  r.details = std::to_string(seeds) + " seeds x " + std::to_string(T) +
              " epochs, n=60, 19 Byzantine; consensus failures: " + std::to_string(failures) +
              ", seeds with any honest disagreement: " + std::to_string(disagreements);
  r.seconds = timer.seconds();
  return r;
}

// ------------------------------------------------------------- criterion 10

CheckResult check_message_complexity(bool full) {
  (void)full;
  Timer timer;
  CheckResult r{"message-complexity audit", false, "", 0};
  bool ok = true;
  std::string detail;

  QuadSetup s = make_quad_setup(10, 1.0, 6.0, 1.0, 30, 40, 0, 88);
  auto env = s.env();
  orch::RunConfig config;
  config.T = 5;
  config.N_p = 10;
  config.N_c = 7;
  config.f = 0.25;
  config.B = 6;
  config.m_c = 6;
  config.step = orch::StepSchedule::constant(0.05);
  config.seed = 5;

  config.rule = orch::Rule::Average;
  const auto dist = orch::run_distributed_sgd(config, env);
  for (const auto& rec : dist.records) ok = ok && rec.messages_sent == 10;
  ok = ok && dist.messages.proposals == 50 && dist.messages.ballots == 0;
  detail += "central SGD: N_p per epoch; ";

  config.rule = orch::Rule::Holdout;
  const auto hold = orch::run_holdout_sgd(config, env);
  for (const auto& rec : hold.records) ok = ok && rec.messages_sent == 10 + 2 * 7;
  ok = ok && hold.messages.proposals == 50 && hold.messages.ballots == 35 &&
       hold.messages.proposal_forwards == 5ULL * 7 * 10;
  detail += "holdout: N_p + 2 N_c per epoch, N_c*N_p forwards tracked; ";

  QuadSetup sd = make_quad_setup(10, 1.0, 6.0, 1.0, 20, 40, 5, 89);
  decent::DecentConfig dconfig;
  dconfig.T = 5;
  dconfig.q1 = 0.4;
  dconfig.q2 = 0.4;
  dconfig.q3 = 0.6;
  dconfig.f = 0.25;
  dconfig.B = 6;
  dconfig.m_c = 6;
  dconfig.step = orch::StepSchedule::constant(0.05);
  dconfig.seed = 6;
  dconfig.attack.mode = orch::AttackConfig::Mode::GammaFixed;
  const auto dec = decent::run_decentralized(sd.pop, sd.data, sd.shards, *sd.model, &sd.eval,
                                             sd.w1, dconfig);
  for (const auto& info : dec.epoch_info) {
    ok = ok && info.messages == info.expected_messages;
    ok = ok && info.expected_messages ==
                   20ULL * (static_cast<uint64_t>(info.proposers) +
                            static_cast<uint64_t>(info.voters) +
                            static_cast<uint64_t>(info.cons_committee));
  }
  detail += "decentralized: n*(proposers+voters+committee) exact";

  r.pass = ok;
  r.details = detail;
  r.seconds = timer.seconds();
  return r;
}

// ------------------------------------------------------------- criterion 11

CheckResult check_attack_bracket(bool full) {
  Timer timer;
  CheckResult r{"gamma-search bracket validity (krum + holdout)", false, "", 0};
  const int snapshots = full ? 50 : 10;
  const double tol = 1e-3, gamma_hi = 100.0;

  learn::QuadraticModel model(10, 1.0, 6.0, 2211);
  const auto data = model.make_noise_dataset(400, 2.0, 2212);
  learn::Shard all;
  all.indices.resize(data.size());
  for (int i = 0; i < data.size(); ++i) all.indices[i] = i;

  auto rng = RngFactory(2213).stream("bracket");
  std::normal_distribution<double> gauss(0.0, 1.0);

  int bad = 0;
  int saturated = 0;
  for (int s = 0; s < snapshots; ++s) {
    ParamVector w = model.minimizer();
    for (Eigen::Index i = 0; i < w.size(); ++i) w[i] += 1.5 * gauss(rng);
    std::vector<ParamVector> honest(20);
    for (auto& g : honest) {
      learn::Batch batch = learn::sample_batch(data, all, 6, rng);
      g = model.gradient(w, batch);
    }
    const int copies = 10;

    auto verify_bracket = [&](const adversary::AcceptancePredicate& pred) {
      const auto res = adversary::search_gamma(honest, pred, gamma_hi, tol);
      if (!res.accepted_at_zero) {
        ++bad;
        return;
      }
      adversary::AttackState st = adversary::estimate_honest_stats(honest);
      st.gamma = res.gamma;
      const bool at = pred(adversary::byzantine_update(st));
      if (!at) {
        ++bad;
        return;
      }
      if (res.gamma >= gamma_hi) {
        ++saturated;  // predicate true on the whole range; no upper bracket
        return;
      }
      st.gamma = res.gamma + tol;
      if (pred(adversary::byzantine_update(st))) ++bad;
    };

    verify_bracket(adversary::make_krum_predicate(honest, copies, 1.0 / 3.0));

    adversary::HoldoutSimContext ctx;
    ctx.model = &model;
    ctx.data = &data;
    ctx.w = w;
    ctx.eta = 0.05;
    ctx.n_voters = 15;
    ctx.m_c = 20;
    ctx.f = 1.0 / 3.0;
    ctx.seed = 5000 + static_cast<uint64_t>(s);
    verify_bracket(adversary::make_holdout_predicate(honest, copies, ctx));
  }

  r.pass = bad == 0 && saturated == 0;
  r.details = std::to_string(snapshots) + " snapshots x 2 predicates; bracket violations: " +
              std::to_string(bad) + ", saturated-at-hi: " + std::to_string(saturated);
  r.seconds = timer.seconds();
  return r;
}

// --------------------------------------------------- detector fault injection

CheckResult check_union_detector_sensitivity(bool full) {
  (void)full;
  Timer timer;
  CheckResult r{"non-emptiness detector sensitivity (tau patched to tau+N_c)", false, "", 0};
  auto rng = RngFactory(404).stream("detector");
  std::uniform_int_distribution<int> size_dist(3, 40);
  std::uniform_real_distribution<double> f_dist(0.0, 0.49);

  int detected = 0;
  const int trials = 200;
  for (int i = 0; i < trials; ++i) {
    const int n_p = size_dist(rng), n_c = size_dist(rng);
    const double f = f_dist(rng);
    std::vector<agg::GradientProposal> proposals(n_p);
    for (int j = 0; j < n_p; ++j) proposals[j] = {j, ParamVector::Constant(1, j)};
    const int k = agg::honest_ballot_size(n_p, f);
    std::vector<agg::VoteBallot> ballots(n_c);
    for (int c = 0; c < n_c; ++c) {
      ballots[c].voter = c;
      ballots[c].endorsed = sample_without_replacement(n_p, k, rng);
      std::sort(ballots[c].endorsed.begin(), ballots[c].endorsed.end());
    }
    agg::UnionOptions broken;
    broken.tau_offset = n_c;  // no tally can reach tau + N_c
    try {
      const auto outcome = agg::union_consensus(ballots, proposals, f, broken);
      if (outcome.members.empty()) ++detected;
    } catch (const std::runtime_error&) {
      ++detected;
    }
  }
  r.pass = detected == trials;
  r.details = "patched threshold produced detected-empty consensus in " +
              std::to_string(detected) + "/" + std::to_string(trials) + " matrices";
  r.seconds = timer.seconds();
  return r;
}

// ----------------------------------------------------------------- suites

namespace {

std::vector<CheckResult> run_list(const std::vector<CheckResult (*)(bool)>& fns, bool full,
                                  std::ostream& log) {
  std::vector<CheckResult> results;
  results.reserve(fns.size());
  int index = 1;
  for (auto fn : fns) {
    CheckResult res = fn(full);
    log << (res.pass ? "[PASS] " : "[FAIL] ") << index << ". " << res.name << " — " << res.details
        << " (" << fmt(res.seconds, 3) << "s)\n";
    results.push_back(std::move(res));
    ++index;
  }
  return results;
}

}  // namespace

std::vector<CheckResult> run_acceptance(bool full, std::ostream& log) {
  return run_list(
      {
          &check_union_nonemptiness,
          &check_f0_reduction,
          &check_bound_soundness,
          &check_hypergeometric_oracle,
          &check_gradient_correctness,
          &check_convergence_shape,
          &check_proposition1_bound,
          &check_robustness_ordering,
          &check_decentralized_agreement,
          &check_message_complexity,
          &check_attack_bracket,
      },
      full, log);
}

std::vector<CheckResult> run_verify_suite(bool full, std::ostream& log) {
  auto results = run_acceptance(full, log);
  CheckResult det = check_union_detector_sensitivity(full);
  log << (det.pass ? "[PASS] " : "[FAIL] ") << "12. " << det.name << " — " << det.details << " ("
      << fmt(det.seconds, 3) << "s)\n";
  results.push_back(std::move(det));
  return results;
}

}  // namespace byzsgd::checks
