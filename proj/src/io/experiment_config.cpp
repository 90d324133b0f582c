#include "byzsgd/io/experiment_config.hpp"

#include <fstream>

#include <json.hpp>

#include "byzsgd/rng.hpp"

namespace byzsgd::io {

using nlohmann::json;

namespace {

const json& require(const json& j, const char* field, const std::string& section) {
  auto it = j.find(field);
  if (it == j.end()) throw ConfigError(section + "." + field + ": missing required field");
  return *it;
}

template <typename T>
T require_as(const json& j, const char* field, const std::string& section) {
  try {
    return require(j, field, section).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(section + "." + std::string(field) + ": wrong type");
  }
}

template <typename T>
T get_or(const json& j, const char* field, T fallback) {
  auto it = j.find(field);
  if (it == j.end()) return fallback;
  return it->get<T>();
}

orch::Rule parse_rule(const std::string& name) {
  if (name == "average") return orch::Rule::Average;
  if (name == "krum") return orch::Rule::Krum;
  if (name == "trimmed_mean") return orch::Rule::TrimmedMean;
  if (name == "holdout") return orch::Rule::Holdout;
  throw ConfigError("run.rule: unknown rule '" + name + "'");
}

std::string rule_name(orch::Rule rule) {
  switch (rule) {
    case orch::Rule::Average: return "average";
    case orch::Rule::Krum: return "krum";
    case orch::Rule::TrimmedMean: return "trimmed_mean";
    case orch::Rule::Holdout: return "holdout";
  }
  return "holdout";
}

}  // namespace

ExperimentConfig parse_experiment_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: parse error: ") + e.what());
  }
  return parse_experiment_json(doc);
}

ExperimentConfig parse_experiment_json(const json& doc) {
  ExperimentConfig c;
  c.variant = require_as<std::string>(doc, "variant", "config");
  if (c.variant != "central_sgd" && c.variant != "holdout" && c.variant != "decentralized")
    throw ConfigError("config.variant: must be central_sgd | holdout | decentralized");

  const json& ds = require(doc, "dataset", "config");
  c.dataset_kind = require_as<std::string>(ds, "kind", "dataset");
  c.dataset.kind = c.dataset_kind;
  c.dataset.m = require_as<int>(ds, "m", "dataset");
  c.dataset.d = require_as<int>(ds, "d", "dataset");
  c.dataset.num_classes = get_or(ds, "num_classes", 0);
  c.dataset.noise = get_or(ds, "noise", 1.0);
  c.dataset.class_separation = get_or(ds, "class_separation", 1.0);
  c.eval_size = get_or(ds, "eval_size", 0);
  c.shard_mode = get_or<std::string>(ds, "shard_mode", "partition_uniform");
  c.per_node_m = get_or(ds, "per_node_m", 0);
  if (ds.contains("quadratic")) {
    const json& q = ds["quadratic"];
    c.quad_alpha = get_or(q, "alpha", 1.0);
    c.quad_beta = get_or(q, "beta", 10.0);
    c.quad_noise = get_or(q, "noise_scale", 1.0);
  }
  if (c.dataset_kind != "gaussian_mixture_classification" &&
      c.dataset_kind != "linear_regression" && c.dataset_kind != "quadratic_noise")
    throw ConfigError("dataset.kind: unknown kind '" + c.dataset_kind + "'");
  if (c.shard_mode != "partition_uniform" && c.shard_mode != "sample_with_replacement")
    throw ConfigError("dataset.shard_mode: unknown mode '" + c.shard_mode + "'");
  if (c.shard_mode == "sample_with_replacement" && c.per_node_m < 1)
    throw ConfigError("dataset.per_node_m: required for sample_with_replacement");

  const json& model = require(doc, "model", "config");
  c.model_kind = require_as<std::string>(model, "kind", "model");
  c.model_reg = get_or(model, "reg", 0.01);
  c.mlp_hidden = get_or(model, "hidden", 16);
  c.mlp_sharpness = get_or(model, "sharpness", 8.0);
  if (c.model_kind != "quadratic" && c.model_kind != "softmax_regression" &&
      c.model_kind != "tiny_mlp")
    throw ConfigError("model.kind: unknown kind '" + c.model_kind + "'");
  if (c.model_kind == "quadratic" && c.dataset_kind != "quadratic_noise")
    throw ConfigError("model.kind: quadratic model requires dataset.kind quadratic_noise");
  if (c.model_kind != "quadratic" && c.dataset_kind == "quadratic_noise")
    throw ConfigError("dataset.kind: quadratic_noise requires model.kind quadratic");

  const json& pop = require(doc, "population", "config");
  c.n = require_as<int>(pop, "n", "population");
  c.actual_f = get_or(pop, "actual_f", -1.0);
  c.byz_count = get_or(pop, "byz_count", -1);
  if (c.actual_f < 0.0 && c.byz_count < 0)
    throw ConfigError("population: needs actual_f or byz_count");

  const json& run = require(doc, "run", "config");
  c.run.T = require_as<int>(run, "T", "run");
  c.run.N_p = require_as<int>(run, "N_p", "run");
  c.run.N_c = require_as<int>(run, "N_c", "run");
  c.run.f = require_as<double>(run, "f", "run");
  c.run.B = require_as<int>(run, "B", "run");
  c.run.m_c = require_as<int>(run, "m_c", "run");
  c.run.seed = get_or<uint64_t>(run, "seed", 1);
  c.run.rule = parse_rule(get_or<std::string>(run, "rule", "holdout"));
  {
    const json& eta = require(run, "eta", "run");
    const std::string kind = require_as<std::string>(eta, "kind", "run.eta");
    const double value = require_as<double>(eta, "value", "run.eta");
    if (kind == "constant")
      c.run.step = orch::StepSchedule::constant(value);
    else if (kind == "inverse")
      c.run.step = orch::StepSchedule::inverse(value);
    else
      throw ConfigError("run.eta.kind: must be constant | inverse");
  }

  if (doc.contains("attack")) {
    const json& atk = doc["attack"];
    const std::string mode = get_or<std::string>(atk, "mode", "none");
    if (mode == "none")
      c.run.attack.mode = orch::AttackConfig::Mode::None;
    else if (mode == "gamma_fixed")
      c.run.attack.mode = orch::AttackConfig::Mode::GammaFixed;
    else if (mode == "gamma_search")
      c.run.attack.mode = orch::AttackConfig::Mode::GammaSearch;
    else
      throw ConfigError("attack.mode: must be none | gamma_fixed | gamma_search");
    c.run.attack.gamma = get_or(atk, "gamma", 1.75);
    c.run.attack.gamma_hi = get_or(atk, "gamma_hi", 100.0);
    c.run.attack.gamma_tol = get_or(atk, "gamma_tol", 1e-3);
    c.run.attack.coalition_voting = get_or(atk, "coalition", true);
    const std::string equiv = get_or<std::string>(atk, "equivocation", "consistent");
    if (equiv == "consistent")
      c.run.attack.equivocation = adversary::EquivocationMode::Consistent;
    else if (equiv == "per_recipient_noise")
      c.run.attack.equivocation = adversary::EquivocationMode::PerRecipientNoise;
    else
      throw ConfigError("attack.equivocation: must be consistent | per_recipient_noise");
  }

  if (doc.contains("decentralized")) {
    const json& dec = doc["decentralized"];
    c.q1 = get_or(dec, "q1", 1.0);
    c.q2 = get_or(dec, "q2", 1.0);
    c.q3 = get_or(dec, "q3", 1.0);
  }

  if (doc.contains("output")) {
    const json& out = doc["output"];
    c.out_dir = get_or<std::string>(out, "dir", "out");
    c.trace = get_or(out, "trace", false);
  }
  c.repetitions = get_or(doc, "repetitions", 1);
  if (doc.contains("seeds")) c.seeds = doc["seeds"].get<std::vector<uint64_t>>();
  if (c.seeds.empty()) c.seeds.push_back(c.run.seed);

  // cross-field validation of module preconditions
  if (c.n < 1) throw ConfigError("population.n: must be >= 1");
  const double frac =
      c.byz_count >= 0 ? static_cast<double>(c.byz_count) / c.n : c.actual_f;
  if (c.variant == "decentralized") {
    if (3.0 * c.run.f >= 1.0 - 1e-9) throw ConfigError("run.f: decentralized requires f < 1/3");
    if (3.0 * frac >= 1.0 - 1e-9)
      throw ConfigError("population: decentralized requires Byzantine fraction < 1/3");
  } else {
    if (c.run.f >= 0.5) throw ConfigError("run.f: must be < 1/2");
    if (frac >= 0.5) throw ConfigError("population: Byzantine fraction must be < 1/2");
  }
  if (c.run.N_p > c.n) throw ConfigError("run.N_p: exceeds population.n");
  if (c.run.N_c > c.n) throw ConfigError("run.N_c: exceeds population.n");
  if (c.repetitions < 1) throw ConfigError("repetitions: must be >= 1");
  return c;
}

nlohmann::json experiment_to_json(const ExperimentConfig& c) {
  json ds{{"kind", c.dataset_kind}, {"m", c.dataset.m},     {"d", c.dataset.d},
          {"num_classes", c.dataset.num_classes},           {"noise", c.dataset.noise},
          {"class_separation", c.dataset.class_separation}, {"eval_size", c.eval_size},
          {"shard_mode", c.shard_mode}};
  if (c.shard_mode == "sample_with_replacement") ds["per_node_m"] = c.per_node_m;
  if (c.dataset_kind == "quadratic_noise")
    ds["quadratic"] = {{"alpha", c.quad_alpha}, {"beta", c.quad_beta}, {"noise_scale", c.quad_noise}};

  json model{{"kind", c.model_kind}, {"reg", c.model_reg}};
  if (c.model_kind == "tiny_mlp") {
    model["hidden"] = c.mlp_hidden;
    model["sharpness"] = c.mlp_sharpness;
  }

  json pop{{"n", c.n}};
  if (c.byz_count >= 0)
    pop["byz_count"] = c.byz_count;
  else
    pop["actual_f"] = c.actual_f;

  const char* atk_mode = c.run.attack.mode == orch::AttackConfig::Mode::None ? "none"
                         : c.run.attack.mode == orch::AttackConfig::Mode::GammaFixed
                             ? "gamma_fixed"
                             : "gamma_search";
  json doc{
      {"variant", c.variant},
      {"dataset", ds},
      {"model", model},
      {"population", pop},
      {"run",
       {{"T", c.run.T},
        {"N_p", c.run.N_p},
        {"N_c", c.run.N_c},
        {"f", c.run.f},
        {"B", c.run.B},
        {"m_c", c.run.m_c},
        {"rule", rule_name(c.run.rule)},
        {"seed", c.run.seed},
        {"eta",
         {{"kind", c.run.step.kind == orch::StepSchedule::Kind::Constant ? "constant" : "inverse"},
          {"value", c.run.step.value}}}}},
      {"attack",
       {{"mode", atk_mode},
        {"gamma", c.run.attack.gamma},
        {"gamma_hi", c.run.attack.gamma_hi},
        {"gamma_tol", c.run.attack.gamma_tol},
        {"coalition", c.run.attack.coalition_voting},
        {"equivocation",
         c.run.attack.equivocation == adversary::EquivocationMode::Consistent
             ? "consistent"
             : "per_recipient_noise"}}},
      {"decentralized", {{"q1", c.q1}, {"q2", c.q2}, {"q3", c.q3}}},
      {"output", {{"dir", c.out_dir}, {"trace", c.trace}}},
      {"repetitions", c.repetitions},
      {"seeds", c.seeds}};
  return doc;
}

BuiltExperiment build_experiment(const ExperimentConfig& c, uint64_t seed) {
  BuiltExperiment built;
  RngFactory rf(seed);

  if (c.dataset_kind == "quadratic_noise") {
    auto quad = std::make_unique<learn::QuadraticModel>(c.dataset.d, c.quad_alpha, c.quad_beta,
                                                        rf.derive("model"));
    built.data = quad->make_noise_dataset(c.dataset.m, c.quad_noise, rf.derive("data"));
    built.eval_data =
        quad->make_noise_dataset(std::max(2, c.eval_size), c.quad_noise, rf.derive("eval"));
    built.w1 = ParamVector::Zero(quad->dim());
    built.model = std::move(quad);
  } else {
    built.data = learn::make_synthetic_dataset(c.dataset, rf.derive("data"));
    learn::DatasetSpec eval_spec = c.dataset;
    eval_spec.m = std::max(1, c.eval_size);
    built.eval_data = learn::make_synthetic_dataset(eval_spec, rf.derive("eval"));
    if (c.model_kind == "softmax_regression") {
      auto softmax =
          std::make_unique<learn::SoftmaxModel>(c.dataset.d, c.dataset.num_classes, c.model_reg);
      built.w1 = ParamVector::Zero(softmax->dim());
      built.model = std::move(softmax);
    } else {
      auto mlp = std::make_unique<learn::TinyMlpModel>(c.dataset.d, c.mlp_hidden,
                                                       c.dataset.num_classes, c.mlp_sharpness,
                                                       c.model_reg);
      built.w1 = mlp->init_params(rf.derive("init"));
      built.model = std::move(mlp);
    }
  }

  built.population = c.byz_count >= 0
                         ? committee::Population::with_byz_count(c.n, c.byz_count, rf.derive("pop"))
                         : committee::Population::with_fraction(c.n, c.actual_f, rf.derive("pop"));

  built.shards = c.shard_mode == "partition_uniform"
                     ? learn::partition(built.data, c.n, learn::PartitionMode::UniformIid,
                                        rf.derive("shards"))
                     : learn::sample_shards_with_replacement(built.data, c.n, c.per_node_m,
                                                             rf.derive("shards"));
  return built;
}

}  // namespace byzsgd::io
