#ifndef COMPOUND_KGE_RUN_CONFIG_HPP
#define COMPOUND_KGE_RUN_CONFIG_HPP

// Everything needed to reproduce a training run, serializable to JSON.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "compound_kge/dataset.hpp"
#include "compound_kge/scoring.hpp"
#include "compound_kge/training.hpp"

namespace compound_kge {

/// A configuration problem the user must fix (maps to the usage exit code).
class config_error : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr const char* kDefaultOrder = "SRT";

struct RunConfig {
  std::string data;
  // Either a preset or an explicit CompoundE layout; unset fields take
  // defaults at resolve time.
  std::optional<std::string> preset;
  std::optional<std::string> variant;
  std::optional<std::string> head_order;
  std::optional<std::string> tail_order;
  std::size_t dim = 200;
  std::string norm = "l1";
  bool shared_rotation = true;
  TrainConfig train;
  std::string save_dir = "compound_kge_run";
  double eta = kDefaultEta;
  bool deterministic = false;

  /// The preset this config describes. Throws config_error on conflicts.
  PresetModel resolve() const {
    Norm n;
    try {
      n = parse_norm(norm);
    } catch (const std::invalid_argument& e) {
      throw config_error(e.what());
    }
    try {
      if (preset && *preset != "compounde") {
        if (variant || head_order || tail_order)
          throw config_error("--preset " + *preset +
                             " fixes the operator layout; drop --variant/--head-order/--tail-order");
        return preset_by_kind(parse_preset(*preset), dim, n);
      }
      CompoundSpec spec;
      spec.variant = variant ? parse_variant(*variant) : Variant::Full;
      spec.dim = dim;
      spec.norm = n;
      spec.shared_rotation = shared_rotation;
      const bool want_head = spec.variant != Variant::Tail, want_tail = spec.variant != Variant::Head;
      if (!want_head && head_order)
        throw config_error("--head-order given but the tail variant has no head chain");
      if (!want_tail && tail_order)
        throw config_error("--tail-order given but the head variant has no tail chain");
      if (want_head) spec.head_chain = OperatorChain::parse(head_order.value_or(kDefaultOrder));
      if (want_tail) spec.tail_chain = OperatorChain::parse(tail_order.value_or(kDefaultOrder));
      return make_preset(ModelPreset::CompoundE, spec);
    } catch (const config_error&) {
      throw;
    } catch (const std::invalid_argument& e) {
      throw config_error(e.what());
    }
  }

  /// Training settings with deterministic mode applied.
  TrainConfig effective_train() const {
    TrainConfig c = train;
    if (deterministic) c.threads = 1;
    return c;
  }
};

inline nlohmann::ordered_json to_json(const RunConfig& c) {
  auto opt = [](const std::optional<std::string>& s) {
    return s ? nlohmann::ordered_json(*s) : nlohmann::ordered_json(nullptr);
  };
  nlohmann::ordered_json j;
  j["data"] = c.data;
  j["preset"] = opt(c.preset);
  j["variant"] = opt(c.variant);
  j["head_order"] = opt(c.head_order);
  j["tail_order"] = opt(c.tail_order);
  j["dim"] = c.dim;
  j["norm"] = c.norm;
  j["shared_rotation"] = c.shared_rotation;
  j["lr"] = c.train.learning_rate;
  j["batch_size"] = c.train.batch_size;
  j["neg_size"] = c.train.negative_size;
  j["alpha"] = c.train.adversarial_temperature;
  j["margin"] = c.train.margin;
  j["steps"] = c.train.max_steps;
  j["seed"] = c.train.seed;
  j["optimizer"] = to_string(c.train.optimizer);
  j["valid_interval"] = c.train.valid_interval;
  j["valid_max_triples"] = c.train.valid_max_triples;
  j["init"] = to_string(c.train.init);
  j["threads"] = c.train.threads;
  j["save"] = c.save_dir;
  j["eta"] = c.eta;
  j["deterministic"] = c.deterministic;
  return j;
}

/// Reads a config; keys absent from `j` keep the values already in `base`.
/// Unknown keys are rejected so typos do not pass silently.
inline RunConfig run_config_from_json(const nlohmann::json& j, RunConfig base = {}) {
  if (!j.is_object()) throw config_error("run config must be a JSON object");
  RunConfig c = std::move(base);
  auto opt = [&](const char* key, std::optional<std::string>& dst) {
    if (!j.contains(key)) return;
    if (j[key].is_null())
      dst.reset();
    else
      dst = j[key].get<std::string>();
  };
  static const char* known[] = {"data",  "preset", "variant",   "head_order",  "tail_order",
                                "dim",   "norm",   "shared_rotation", "lr",    "batch_size",
                                "neg_size", "alpha", "margin",  "steps",       "seed",
                                "optimizer", "valid_interval", "valid_max_triples", "init",
                                "threads", "save", "eta", "deterministic"};
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw config_error("unknown run config key '" + key + "'");
  }
  try {
    if (j.contains("data")) c.data = j["data"].get<std::string>();
    opt("preset", c.preset);
    opt("variant", c.variant);
    opt("head_order", c.head_order);
    opt("tail_order", c.tail_order);
    if (j.contains("dim")) c.dim = j["dim"].get<std::size_t>();
    if (j.contains("norm")) c.norm = j["norm"].get<std::string>();
    if (j.contains("shared_rotation")) c.shared_rotation = j["shared_rotation"].get<bool>();
    if (j.contains("lr")) c.train.learning_rate = j["lr"].get<double>();
    if (j.contains("batch_size")) c.train.batch_size = j["batch_size"].get<std::size_t>();
    if (j.contains("neg_size")) c.train.negative_size = j["neg_size"].get<std::size_t>();
    if (j.contains("alpha")) c.train.adversarial_temperature = j["alpha"].get<double>();
    if (j.contains("margin")) c.train.margin = j["margin"].get<double>();
    if (j.contains("steps")) c.train.max_steps = j["steps"].get<std::size_t>();
    if (j.contains("seed")) c.train.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("optimizer")) c.train.optimizer = parse_optimizer(j["optimizer"].get<std::string>());
    if (j.contains("valid_interval")) c.train.valid_interval = j["valid_interval"].get<std::size_t>();
    if (j.contains("valid_max_triples"))
      c.train.valid_max_triples = j["valid_max_triples"].get<std::size_t>();
    if (j.contains("init")) c.train.init = parse_init(j["init"].get<std::string>());
    if (j.contains("threads")) c.train.threads = j["threads"].get<std::size_t>();
    if (j.contains("save")) c.save_dir = j["save"].get<std::string>();
    if (j.contains("eta")) c.eta = j["eta"].get<double>();
    if (j.contains("deterministic")) c.deterministic = j["deterministic"].get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw config_error(std::string("bad run config value: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw config_error(e.what());
  }
  return c;
}

}  // namespace compound_kge

#endif  // COMPOUND_KGE_RUN_CONFIG_HPP
