#pragma once

#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "byzsgd/types.hpp"

namespace byzsgd::learn {

struct Example {
  Eigen::VectorXd features;
  int label = -1;       // class index for classification kinds
  double target = 0.0;  // real target for regression kinds
};

enum class DatasetKind { GaussianMixture, LinearRegression, GradientNoise, Idx };

struct Dataset {
  DatasetKind kind = DatasetKind::GaussianMixture;
  int feature_dim = 0;
  int num_classes = 0;  // 0 for non-classification kinds
  std::vector<Example> examples;
  Eigen::VectorXd true_weights;  // linear_regression only

  int size() const { return static_cast<int>(examples.size()); }
};

/// Node-owned slice of a dataset, stored as indices into it.
struct Shard {
  int owner = -1;
  std::vector<int> indices;

  int size() const { return static_cast<int>(indices.size()); }
};

/// Lightweight view of selected examples of one dataset.
struct Batch {
  const Dataset* data = nullptr;
  std::vector<int> idx;

  int size() const { return static_cast<int>(idx.size()); }
  const Example& example(int i) const { return data->examples[idx[i]]; }
};

Batch full_batch(const Dataset& data);

struct DatasetSpec {
  std::string kind;  // "gaussian_mixture_classification" | "linear_regression"
  int m = 0;
  int d = 0;
  int num_classes = 0;
  double noise = 1.0;
  double class_separation = 1.0;
};

/// Deterministic synthetic data; two calls with equal (spec, seed) produce
/// byte-identical datasets.
Dataset make_synthetic_dataset(const DatasetSpec& spec, uint64_t seed);

enum class PartitionMode { UniformIid };

/// Disjoint shards whose sizes differ by at most one; multiset union equals
/// the dataset.
std::vector<Shard> partition(const Dataset& data, int n, PartitionMode mode, uint64_t seed);

/// Paper-style sharding where each node samples per_node_m examples from the
/// global dataset with replacement; shards may overlap.
std::vector<Shard> sample_shards_with_replacement(const Dataset& data, int n, int per_node_m,
                                                  uint64_t seed);

/// B examples drawn uniformly without replacement from the shard.
Batch sample_batch(const Dataset& data, const Shard& shard, int B, std::mt19937_64& rng);

}  // namespace byzsgd::learn
