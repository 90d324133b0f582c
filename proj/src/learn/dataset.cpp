#include "byzsgd/learn/dataset.hpp"

#include <algorithm>
#include <numeric>

#include "byzsgd/rng.hpp"

namespace byzsgd::learn {

Batch full_batch(const Dataset& data) {
  Batch b;
  b.data = &data;
  b.idx.resize(data.size());
  std::iota(b.idx.begin(), b.idx.end(), 0);
  return b;
}

static Dataset make_gaussian_mixture(const DatasetSpec& spec, uint64_t seed) {
  RngFactory rf(seed);
  auto mean_rng = rf.stream("gm_means");
  auto ex_rng = rf.stream("gm_examples");
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::vector<Eigen::VectorXd> means(spec.num_classes);
  for (auto& mu : means) {
    mu.resize(spec.d);
    for (int j = 0; j < spec.d; ++j) mu[j] = spec.class_separation * gauss(mean_rng);
  }

  Dataset out;
  out.kind = DatasetKind::GaussianMixture;
  out.feature_dim = spec.d;
  out.num_classes = spec.num_classes;
  out.examples.resize(spec.m);
  std::uniform_int_distribution<int> cls(0, spec.num_classes - 1);
  for (auto& ex : out.examples) {
    ex.label = cls(ex_rng);
    ex.features.resize(spec.d);
    for (int j = 0; j < spec.d; ++j) ex.features[j] = means[ex.label][j] + spec.noise * gauss(ex_rng);
  }
  return out;
}

static Dataset make_linear_regression(const DatasetSpec& spec, uint64_t seed) {
  RngFactory rf(seed);
  auto w_rng = rf.stream("lr_weights");
  auto ex_rng = rf.stream("lr_examples");
  std::normal_distribution<double> gauss(0.0, 1.0);

  Dataset out;
  out.kind = DatasetKind::LinearRegression;
  out.feature_dim = spec.d;
  out.num_classes = 0;
  out.true_weights.resize(spec.d);
  for (int j = 0; j < spec.d; ++j) out.true_weights[j] = gauss(w_rng);

  out.examples.resize(spec.m);
  for (auto& ex : out.examples) {
    ex.features.resize(spec.d);
    for (int j = 0; j < spec.d; ++j) ex.features[j] = gauss(ex_rng);
    ex.target = ex.features.dot(out.true_weights) + spec.noise * gauss(ex_rng);
  }
  return out;
}

Dataset make_synthetic_dataset(const DatasetSpec& spec, uint64_t seed) {
  if (spec.m <= 0) throw std::invalid_argument("dataset spec: m must be positive");
  if (spec.d <= 0) throw std::invalid_argument("dataset spec: d must be positive");
  if (spec.kind == "gaussian_mixture_classification") {
    if (spec.num_classes < 2)
      throw std::invalid_argument("dataset spec: classification needs num_classes >= 2");
    return make_gaussian_mixture(spec, seed);
  }
  if (spec.kind == "linear_regression") return make_linear_regression(spec, seed);
  throw std::invalid_argument("dataset spec: unknown kind '" + spec.kind + "'");
}

std::vector<Shard> partition(const Dataset& data, int n, PartitionMode mode, uint64_t seed) {
  (void)mode;  // uniform_iid is the only mode
  const int m = data.size();
  if (n < 1) throw std::invalid_argument("partition: n must be >= 1");
  if (m == 0) throw std::invalid_argument("partition: dataset is empty");
  if (n > m) throw std::invalid_argument("partition: more nodes than examples");

  std::vector<int> perm(m);
  std::iota(perm.begin(), perm.end(), 0);
  auto rng = RngFactory(seed).stream("partition");
  std::shuffle(perm.begin(), perm.end(), rng);

  std::vector<Shard> shards(n);
  const int base = m / n;
  const int extra = m % n;
  int pos = 0;
  for (int i = 0; i < n; ++i) {
    const int sz = base + (i < extra ? 1 : 0);
    shards[i].owner = i;
    shards[i].indices.assign(perm.begin() + pos, perm.begin() + pos + sz);
    pos += sz;
  }
  return shards;
}

std::vector<Shard> sample_shards_with_replacement(const Dataset& data, int n, int per_node_m,
                                                  uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample_shards: n must be >= 1");
  if (per_node_m < 1) throw std::invalid_argument("sample_shards: per_node_m must be >= 1");
  if (data.size() == 0) throw std::invalid_argument("sample_shards: dataset is empty");
  RngFactory rf(seed);
  std::vector<Shard> shards(n);
  for (int i = 0; i < n; ++i) {
    auto rng = rf.stream("shard_sample", static_cast<uint64_t>(i));
    std::uniform_int_distribution<int> pick(0, data.size() - 1);
    shards[i].owner = i;
    shards[i].indices.resize(per_node_m);
    for (auto& ix : shards[i].indices) ix = pick(rng);
  }
  return shards;
}

Batch sample_batch(const Dataset& data, const Shard& shard, int B, std::mt19937_64& rng) {
  if (B > shard.size()) throw std::invalid_argument("sample_batch: B exceeds shard size");
  if (B < 1) throw std::invalid_argument("sample_batch: B must be >= 1");
  Batch b;
  b.data = &data;
  auto local = sample_without_replacement(shard.size(), B, rng);
  b.idx.reserve(B);
  for (int li : local) b.idx.push_back(shard.indices[li]);
  return b;
}

}  // namespace byzsgd::learn
