#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "byzsgd/committee/committee.hpp"
#include "byzsgd/learn/dataset.hpp"
#include "byzsgd/learn/loss_model.hpp"
#include "byzsgd/orch/config.hpp"

#include <json.hpp>

namespace byzsgd::io {

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Parsed experiment document. Key names are normative; values are validated
/// against the module preconditions before any run starts.
struct ExperimentConfig {
  std::string variant = "holdout";  // central_sgd | holdout | decentralized

  // dataset
  std::string dataset_kind;  // gaussian_mixture_classification | linear_regression | quadratic_noise
  learn::DatasetSpec dataset;
  int eval_size = 0;
  std::string shard_mode = "partition_uniform";  // | sample_with_replacement
  int per_node_m = 0;
  double quad_alpha = 1.0, quad_beta = 10.0, quad_noise = 1.0;

  // model
  std::string model_kind;  // quadratic | softmax_regression | tiny_mlp
  double model_reg = 0.01;
  int mlp_hidden = 16;
  double mlp_sharpness = 8.0;

  // population
  int n = 0;
  double actual_f = -1.0;
  int byz_count = -1;

  orch::RunConfig run;
  double q1 = 1.0, q2 = 1.0, q3 = 1.0;

  std::string out_dir = "out";
  bool trace = false;
  int repetitions = 1;
  std::vector<uint64_t> seeds;
};

ExperimentConfig parse_experiment_file(const std::string& path);
ExperimentConfig parse_experiment_json(const nlohmann::json& doc);
nlohmann::json experiment_to_json(const ExperimentConfig& config);

/// Materialized experiment: data, model, population and shards for one seed.
struct BuiltExperiment {
  learn::Dataset data;
  learn::Dataset eval_data;
  std::unique_ptr<learn::LossModel> model;
  committee::Population population;
  std::vector<learn::Shard> shards;
  ParamVector w1;
};

BuiltExperiment build_experiment(const ExperimentConfig& config, uint64_t seed);

}  // namespace byzsgd::io
