#include "byzsgd/committee/committee.hpp"

#include <algorithm>
#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <stdexcept>

#include "byzsgd/agg/aggregation.hpp"
#include "byzsgd/rng.hpp"

namespace byzsgd::committee {

Population Population::with_fraction(int n, double f, uint64_t seed) {
  if (f < 0.0 || f >= 1.0) throw std::invalid_argument("population: f must be in [0, 1)");
  return with_byz_count(n, agg::floor_frac(f, n), seed);
}

Population Population::with_byz_count(int n, int byz, uint64_t seed) {
  if (n < 1) throw std::invalid_argument("population: n must be >= 1");
  if (byz < 0 || byz > n) throw std::invalid_argument("population: bad byzantine count");
  Population pop;
  pop.n = n;
  pop.byz_count = byz;
  pop.byzantine.assign(n, false);
  auto rng = RngFactory(seed).stream("population_byz");
  for (int id : sample_without_replacement(n, byz, rng)) pop.byzantine[id] = true;
  return pop;
}

CommitteeDraw draw_committee(const Population& pop, int N, Role role, int epoch,
                             std::mt19937_64& rng) {
  if (N > pop.n) throw std::invalid_argument("draw_committee: N exceeds population size");
  if (N < 1) throw std::invalid_argument("draw_committee: N must be >= 1");
  CommitteeDraw draw;
  draw.epoch = epoch;
  draw.role = role;
  draw.members = sample_without_replacement(pop.n, N, rng);
  std::sort(draw.members.begin(), draw.members.end());
  return draw;
}

int count_byzantine(const Population& pop, const CommitteeDraw& draw) {
  int c = 0;
  for (int id : draw.members) c += pop.is_byzantine(id) ? 1 : 0;
  return c;
}

int committee_size_bound(int T, double delta, double f) {
  if (T < 1) throw std::invalid_argument("committee_size_bound: T must be >= 1");
  if (!(delta > 0.0) || !(delta < 1.0))
    throw std::invalid_argument("committee_size_bound: delta must be in (0, 1)");
  if (f < 0.0 || f >= 0.5)
    throw std::invalid_argument("committee_size_bound: bound diverges for f >= 1/2");
  const double value = 2.0 * (1.0 + 2.0 * f) / ((1.0 - 2.0 * f) * (1.0 - 2.0 * f)) *
                       std::log(static_cast<double>(T) / delta);
  return std::max(1, static_cast<int>(std::ceil(value)));
}

namespace {

using BigInt = boost::multiprecision::cpp_int;

BigInt binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  BigInt result = 1;
  for (int i = 1; i <= k; ++i) {
    result *= (n - k + i);
    result /= i;  // exact at every step
  }
  return result;
}

double ratio_to_double(const BigInt& num, const BigInt& den) {
  if (num == 0) return 0.0;
  // scale so the integer quotient keeps >= 63 significant bits, then undo
  const long mn = static_cast<long>(boost::multiprecision::msb(num));
  const long md = static_cast<long>(boost::multiprecision::msb(den));
  const long shift = 64 + std::max(0L, md - mn);
  const BigInt q = (num << shift) / den;
  return std::ldexp(q.convert_to<double>(), static_cast<int>(-shift));
}

}  // namespace

double byz_majority_prob_exact(int n, int K, int N) {
  if (K < 0 || K > n || N < 1 || N > n)
    throw std::invalid_argument("byz_majority_prob_exact: need 0 <= K <= n and 1 <= N <= n");
  const int t0 = (N + 1) / 2;  // smallest integer x with x >= N/2
  BigInt num = 0;
  const int x_hi = std::min(K, N);
  for (int x = std::max(t0, N - (n - K)); x <= x_hi; ++x)
    num += binomial(K, x) * binomial(n - K, N - x);
  if (num == 0) return 0.0;
  const BigInt den = binomial(n, N);
  if (num == den) return 1.0;
  return ratio_to_double(num, den);
}

double byz_majority_prob_mc(const Population& pop, int N, int trials, uint64_t seed) {
  if (trials < 1) throw std::invalid_argument("byz_majority_prob_mc: trials must be >= 1");
  const int t0 = (N + 1) / 2;
  auto rng = RngFactory(seed).stream("byz_majority_mc");
  long long hits = 0;
  for (int t = 0; t < trials; ++t) {
    auto members = sample_without_replacement(pop.n, N, rng);
    int byz = 0;
    for (int id : members) byz += pop.is_byzantine(id) ? 1 : 0;
    if (byz >= t0) ++hits;
  }
  return static_cast<double>(hits) / trials;
}

double byz_majority_chernoff_bound(double f, int N) {
  if (f <= 0.0) return 0.0;
  const double e = (1.0 - 2.0 * f) * (1.0 - 2.0 * f) / (1.0 + 2.0 * f);
  return std::exp(-e * N / 2.0);
}

}  // namespace byzsgd::committee
