#ifndef COMPOUND_KGE_MODEL_HPP
#define COMPOUND_KGE_MODEL_HPP

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "compound_kge/dataset.hpp"
#include "compound_kge/scoring.hpp"

namespace compound_kge {

using Rng = std::mt19937_64;

/// Dense row-major n x d matrix of entity embeddings.
class EntityTable {
public:
  EntityTable() = default;
  EntityTable(std::size_t rows, std::size_t dim) : rows_(rows), dim_(dim), data_(rows * dim, 0.0) {}

  std::size_t rows() const { return rows_; }
  std::size_t dim() const { return dim_; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * dim_, dim_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * dim_, dim_}; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  friend bool operator==(const EntityTable&, const EntityTable&) = default;

private:
  std::size_t rows_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> data_;
};

enum class InitScheme { Random, Identity };

inline std::string to_string(InitScheme s) { return s == InitScheme::Random ? "random" : "identity"; }

inline InitScheme parse_init(const std::string& s) {
  if (s == "random") return InitScheme::Random;
  if (s == "identity") return InitScheme::Identity;
  throw std::invalid_argument("unknown init scheme '" + s + "' (expected random or identity)");
}

/// Which relation components are optimized, derived from the chains.
struct TrainableMask {
  bool head_translation = false, head_angles = false, head_scale = false;
  bool tail_translation = false, tail_angles = false, tail_scale = false;

  static TrainableMask from(const CompoundSpec& spec) {
    TrainableMask m;
    m.head_translation = spec.head_chain.contains(OperatorKind::Translation);
    m.head_angles = spec.head_chain.contains(OperatorKind::Rotation) || spec.rotation_is_shared();
    m.head_scale = spec.head_chain.contains(OperatorKind::Scaling);
    m.tail_translation = spec.tail_chain.contains(OperatorKind::Translation);
    m.tail_angles = spec.tail_chain.contains(OperatorKind::Rotation) && !spec.rotation_is_shared();
    m.tail_scale = spec.tail_chain.contains(OperatorKind::Scaling);
    return m;
  }
};

struct Model {
  ModelPreset preset = ModelPreset::CompoundE;
  CompoundSpec spec;
  EntityTable entities;
  std::vector<RelationParams> relations;

  std::size_t entity_count() const { return entities.rows(); }
  std::size_t relation_count() const { return relations.size(); }

  double score(const Triple& t) const {
    return compound_kge::score(entities.row(static_cast<std::size_t>(t.head)),
                               relations[static_cast<std::size_t>(t.relation)],
                               entities.row(static_cast<std::size_t>(t.tail)), spec);
  }
};

inline void normalize_row(std::span<double> x, Rng& rng, std::size_t* reinitialized = nullptr) {
  double n2 = 0.0;
  for (double v : x) n2 += v * v;
  double n = std::sqrt(n2);
  if (n < 1e-12) {
    std::normal_distribution<double> g(0.0, 1.0);
    do {
      n2 = 0.0;
      for (auto& v : x) {
        v = g(rng);
        n2 += v * v;
      }
      n = std::sqrt(n2);
    } while (n < 1e-12);
    if (reinitialized) ++*reinitialized;
  }
  for (auto& v : x) v /= n;
}

/// Projects every row to unit L2 norm. Rows with norm below 1e-12 are
/// re-drawn from a Gaussian first; returns how many were.
inline std::size_t normalize_entities(EntityTable& table, Rng& rng) {
  std::size_t reinit = 0;
  for (std::size_t i = 0; i < table.rows(); ++i) normalize_row(table.row(i), rng, &reinit);
  return reinit;
}

/// Fresh model. Entities ~ U[-0.5, 0.5]/sqrt(d) then unit-normalized;
/// trainable translations ~ U[-0.5, 0.5]/sqrt(d), angles ~ U[-pi, pi],
/// scales = 1. Frozen components stay at identity values.
inline Model initialize_model(const PresetModel& preset, std::size_t entity_count,
                              std::size_t relation_count, InitScheme scheme, Rng& rng) {
  preset.spec.validate();
  Model m;
  m.preset = preset.preset;
  m.spec = preset.spec;
  const std::size_t d = m.spec.dim;
  const double bound = 0.5 / std::sqrt(static_cast<double>(d));
  std::uniform_real_distribution<double> small(-bound, bound);
  std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);

  m.entities = EntityTable(entity_count, d);
  for (auto& v : m.entities.data()) v = small(rng);
  normalize_entities(m.entities, rng);

  const auto mask = TrainableMask::from(m.spec);
  m.relations.assign(relation_count, preset.relation_template);
  if (scheme == InitScheme::Random) {
    for (auto& r : m.relations) {
      if (mask.head_translation)
        for (auto& v : r.head.translation) v = small(rng);
      if (mask.head_angles)
        for (auto& v : r.head.angles) v = angle(rng);
      if (mask.tail_translation)
        for (auto& v : r.tail.translation) v = small(rng);
      if (mask.tail_angles)
        for (auto& v : r.tail.angles) v = angle(rng);
    }
  }
  return m;
}

}  // namespace compound_kge

#endif  // COMPOUND_KGE_MODEL_HPP
