#ifndef COMPOUND_KGE_SCORING_HPP
#define COMPOUND_KGE_SCORING_HPP

// Distance scores of the form ||M h - M' t|| where M, M' are relation-specific
// operator cascades, plus the reductions to classic distance models and the
// analytic gradient of the score.

#include <array>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "compound_kge/transform.hpp"

namespace compound_kge {

enum class Variant { Head, Tail, Full };
enum class Norm { L1, L2 };

inline std::string to_string(Variant v) {
  switch (v) {
    case Variant::Head: return "head";
    case Variant::Tail: return "tail";
    case Variant::Full: return "full";
  }
  return "?";
}

inline Variant parse_variant(const std::string& s) {
  if (s == "head") return Variant::Head;
  if (s == "tail") return Variant::Tail;
  if (s == "full") return Variant::Full;
  throw std::invalid_argument("unknown variant '" + s + "' (expected head, tail or full)");
}

inline std::string to_string(Norm n) { return n == Norm::L1 ? "l1" : "l2"; }

inline Norm parse_norm(const std::string& s) {
  if (s == "l1" || s == "L1") return Norm::L1;
  if (s == "l2" || s == "L2") return Norm::L2;
  throw std::invalid_argument("unknown norm '" + s + "' (expected l1 or l2)");
}

/// Declarative model variant: which sides are transformed, in what order.
struct CompoundSpec {
  Variant variant = Variant::Full;
  OperatorChain head_chain;
  OperatorChain tail_chain;
  std::size_t dim = 0;
  Norm norm = Norm::L1;
  // One angle vector serves both sides when both chains rotate.
  bool shared_rotation = true;

  void validate() const {
    if (dim == 0) throw std::invalid_argument("embedding dimension must be positive");
    switch (variant) {
      case Variant::Head:
        if (!tail_chain.empty())
          throw std::invalid_argument("head variant requires an empty tail chain");
        break;
      case Variant::Tail:
        if (!head_chain.empty())
          throw std::invalid_argument("tail variant requires an empty head chain");
        break;
      case Variant::Full:
        if (head_chain.empty() || tail_chain.empty())
          throw std::invalid_argument("full variant requires non-empty head and tail chains");
        break;
    }
    if ((head_chain.contains(OperatorKind::Rotation) ||
         tail_chain.contains(OperatorKind::Rotation)) &&
        dim % 2 != 0)
      throw std::invalid_argument("rotation requires an even dimension, got " +
                                  std::to_string(dim));
  }

  /// True when the tail chain reads its angles from the head parameters.
  bool rotation_is_shared() const {
    return shared_rotation && head_chain.contains(OperatorKind::Rotation) &&
           tail_chain.contains(OperatorKind::Rotation);
  }

  std::string describe() const {
    std::string h = head_chain.empty() ? "h" : head_chain.to_string() + "·h";
    std::string t = tail_chain.empty() ? "t" : tail_chain.to_string() + "'·t";
    return "||" + h + " - " + t + "||_" + (norm == Norm::L1 ? "1" : "2");
  }
};

/// Per-relation parameters for both sides. With shared rotation the tail
/// side reads `head.angles`; `tail.angles` is then unused.
struct RelationParams {
  TransformParams head;
  TransformParams tail;
  bool shared_rotation = true;

  static RelationParams identity(std::size_t dim, bool shared = true) {
    return {TransformParams::identity(dim), TransformParams::identity(dim), shared};
  }

  static RelationParams zeros(std::size_t dim, bool shared = true) {
    TransformParams z{std::vector<double>(dim, 0.0), std::vector<double>(dim / 2, 0.0),
                      std::vector<double>(dim, 0.0)};
    return {z, z, shared};
  }

  TransformView head_view() const { return head; }
  TransformView tail_view() const {
    return {tail.translation, shared_rotation ? head.angles : tail.angles, tail.scale};
  }
};

/// Relation parameters matching the layout a spec expects.
inline RelationParams relation_params_for(const CompoundSpec& spec) {
  return RelationParams::identity(spec.dim, spec.rotation_is_shared());
}

namespace detail {

inline double distance(std::span<const double> a, std::span<const double> b, Norm norm) {
  double acc = 0.0;
  if (norm == Norm::L1) {
    for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(a[i] - b[i]);
    return acc;
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

inline void check_entity(std::span<const double> x, const CompoundSpec& spec, const char* what) {
  if (x.size() != spec.dim)
    throw std::invalid_argument(std::string(what) + ": expected dimension " +
                                std::to_string(spec.dim) + ", got " + std::to_string(x.size()));
}

}  // namespace detail

/// Transformed head embedding (M h).
inline std::vector<double> transform_head(std::span<const double> h, const RelationParams& r,
                                          const CompoundSpec& spec) {
  return apply_chain(h, spec.head_chain, r.head_view());
}

/// Transformed tail embedding (M' t).
inline std::vector<double> transform_tail(std::span<const double> t, const RelationParams& r,
                                          const CompoundSpec& spec) {
  return apply_chain(t, spec.tail_chain, r.tail_view());
}

/// Lower is more plausible.
inline double score(std::span<const double> h, const RelationParams& r, std::span<const double> t,
                    const CompoundSpec& spec) {
  detail::check_entity(h, spec, "score head");
  detail::check_entity(t, spec, "score tail");
  const auto a = transform_head(h, r, spec);
  const auto b = transform_tail(t, r, spec);
  return detail::distance(a, b, spec.norm);
}

// ---------------------------------------------------------------------------
// Gradients

/// Records one forward pass and back-propagates a scalar upstream gradient.
/// Buffers are reused across calls, so one workspace per thread.
class ScoreWorkspace {
public:
  double forward(std::span<const double> h, const RelationParams& r, std::span<const double> t,
                 const CompoundSpec& spec) {
    spec_ = &spec;
    rel_ = &r;
    run_side(h, spec.head_chain, r.head_view(), head_stages_);
    run_side(t, spec.tail_chain, r.tail_view(), tail_stages_);
    const auto& a = head_stages_[spec.head_chain.size()];
    const auto& b = tail_stages_[spec.tail_chain.size()];
    score_ = detail::distance(a, b, spec.norm);
    return score_;
  }

  double last_score() const { return score_; }

  /// Accumulates upstream * d(score)/d(.) into dh, dt and dr.
  /// L1 subgradient is 0 at 0; the L2 gradient is 0 when the distance is 0.
  void backward(double upstream, std::span<double> dh, std::span<double> dt,
                RelationParams& dr) {
    const auto& spec = *spec_;
    const auto& a = head_stages_[spec.head_chain.size()];
    const auto& b = tail_stages_[spec.tail_chain.size()];
    const std::size_t d = a.size();
    grad_.assign(d, 0.0);
    if (spec.norm == Norm::L1) {
      for (std::size_t i = 0; i < d; ++i) {
        const double diff = a[i] - b[i];
        grad_[i] = diff > 0.0 ? upstream : (diff < 0.0 ? -upstream : 0.0);
      }
    } else if (score_ > 0.0) {
      for (std::size_t i = 0; i < d; ++i) grad_[i] = upstream * (a[i] - b[i]) / score_;
    }

    back_side(grad_, spec.head_chain, rel_->head_view(), head_stages_, dh, dr.head.translation,
              dr.head.angles, dr.head.scale);
    for (auto& g : grad_) g = -g;
    std::span<double> tail_angles =
        rel_->shared_rotation ? std::span<double>(dr.head.angles) : std::span<double>(dr.tail.angles);
    back_side(grad_, spec.tail_chain, rel_->tail_view(), tail_stages_, dt, dr.tail.translation,
              tail_angles, dr.tail.scale);
  }

private:
  using Stages = std::array<std::vector<double>, 4>;

  // stages[k] is the input of the k-th applied operator; stages[n] the output.
  static void run_side(std::span<const double> x, const OperatorChain& chain,
                       const TransformView& p, Stages& stages) {
    detail::check_view(x.size(), chain, p);
    stages[0].assign(x.begin(), x.end());
    const std::size_t n = chain.size();
    for (std::size_t k = 0; k < n; ++k) {
      stages[k + 1] = stages[k];
      const OperatorKind op = chain[n - 1 - k];
      switch (op) {
        case OperatorKind::Translation: detail::translate_inplace(stages[k + 1], p.translation); break;
        case OperatorKind::Rotation: detail::rotate_inplace(stages[k + 1], p.angles); break;
        case OperatorKind::Scaling: detail::scale_inplace(stages[k + 1], p.scale); break;
      }
    }
  }

  static void back_side(std::vector<double> g, const OperatorChain& chain, const TransformView& p,
                        const Stages& stages, std::span<double> dx,
                        std::span<double> dtranslation, std::span<double> dangles,
                        std::span<double> dscale) {
    const std::size_t n = chain.size();
    // Written order left to right is reverse application order.
    for (std::size_t i = 0; i < n; ++i) {
      const auto& in = stages[n - 1 - i];
      switch (chain[i]) {
        case OperatorKind::Translation:
          for (std::size_t j = 0; j < g.size(); ++j) dtranslation[j] += g[j];
          break;
        case OperatorKind::Scaling:
          for (std::size_t j = 0; j < g.size(); ++j) {
            dscale[j] += g[j] * in[j];
            g[j] *= p.scale[j];
          }
          break;
        case OperatorKind::Rotation:
          for (std::size_t blk = 0; blk < p.angles.size(); ++blk) {
            const double c = std::cos(p.angles[blk]), s = std::sin(p.angles[blk]);
            const double x0 = in[2 * blk], x1 = in[2 * blk + 1];
            const double g0 = g[2 * blk], g1 = g[2 * blk + 1];
            dangles[blk] += g0 * (-s * x0 - c * x1) + g1 * (c * x0 - s * x1);
            g[2 * blk] = c * g0 + s * g1;
            g[2 * blk + 1] = -s * g0 + c * g1;
          }
          break;
      }
    }
    for (std::size_t j = 0; j < g.size(); ++j) dx[j] += g[j];
  }

  const CompoundSpec* spec_ = nullptr;
  const RelationParams* rel_ = nullptr;
  Stages head_stages_;
  Stages tail_stages_;
  std::vector<double> grad_;
  double score_ = 0.0;
};

struct ScoreGradient {
  double score = 0.0;
  std::vector<double> head;
  std::vector<double> tail;
  RelationParams relation;  // zero wherever a component is not in a chain
};

inline ScoreGradient grad_score(std::span<const double> h, const RelationParams& r,
                                std::span<const double> t, const CompoundSpec& spec) {
  detail::check_entity(h, spec, "grad_score head");
  detail::check_entity(t, spec, "grad_score tail");
  ScoreWorkspace ws;
  ScoreGradient g;
  g.score = ws.forward(h, r, t, spec);
  g.head.assign(spec.dim, 0.0);
  g.tail.assign(spec.dim, 0.0);
  g.relation = RelationParams::zeros(spec.dim, r.shared_rotation);
  ws.backward(1.0, g.head, g.tail, g.relation);
  return g;
}

// ---------------------------------------------------------------------------
// Presets

enum class ModelPreset { TransE, RotatE, PairRE, LinearRE, CompoundE };

inline std::string to_string(ModelPreset p) {
  switch (p) {
    case ModelPreset::TransE: return "transe";
    case ModelPreset::RotatE: return "rotate";
    case ModelPreset::PairRE: return "pairre";
    case ModelPreset::LinearRE: return "linearre";
    case ModelPreset::CompoundE: return "compounde";
  }
  return "?";
}

inline ModelPreset parse_preset(const std::string& s) {
  if (s == "transe") return ModelPreset::TransE;
  if (s == "rotate") return ModelPreset::RotatE;
  if (s == "pairre") return ModelPreset::PairRE;
  if (s == "linearre") return ModelPreset::LinearRE;
  if (s == "compounde") return ModelPreset::CompoundE;
  throw std::invalid_argument("unknown preset '" + s +
                              "' (expected transe, rotate, pairre or linearre)");
}

/// A spec plus the identity-valued relation template. Components absent from
/// the chains stay at their identity values and are never optimized.
struct PresetModel {
  ModelPreset preset = ModelPreset::CompoundE;
  CompoundSpec spec;
  RelationParams relation_template;
};

inline PresetModel make_preset(ModelPreset preset, CompoundSpec spec) {
  spec.validate();
  return {preset, spec, relation_params_for(spec)};
}

/// ||h + r - t||: head translation only.
inline PresetModel preset_transe(std::size_t dim, Norm norm = Norm::L1) {
  return make_preset(ModelPreset::TransE,
                     {Variant::Head, OperatorChain::parse("T"), {}, dim, norm, true});
}

/// ||h o r - t||: head rotation only.
inline PresetModel preset_rotate(std::size_t dim, Norm norm = Norm::L1) {
  return make_preset(ModelPreset::RotatE,
                     {Variant::Head, OperatorChain::parse("R"), {}, dim, norm, true});
}

/// ||h * r_H - t * r_T||: scaling on both sides.
inline PresetModel preset_pairre(std::size_t dim, Norm norm = Norm::L1) {
  return make_preset(ModelPreset::PairRE, {Variant::Full, OperatorChain::parse("S"),
                                           OperatorChain::parse("S"), dim, norm, true});
}

/// ||h * r_H + r - t * r_T||: scale then translate the head, scale the tail.
inline PresetModel preset_linearre(std::size_t dim, Norm norm = Norm::L1) {
  return make_preset(ModelPreset::LinearRE, {Variant::Full, OperatorChain::parse("TS"),
                                             OperatorChain::parse("S"), dim, norm, true});
}

inline PresetModel preset_by_kind(ModelPreset kind, std::size_t dim, Norm norm = Norm::L1) {
  switch (kind) {
    case ModelPreset::TransE: return preset_transe(dim, norm);
    case ModelPreset::RotatE: return preset_rotate(dim, norm);
    case ModelPreset::PairRE: return preset_pairre(dim, norm);
    case ModelPreset::LinearRE: return preset_linearre(dim, norm);
    case ModelPreset::CompoundE: break;
  }
  throw std::invalid_argument("compounde has no fixed preset; give a variant and orders");
}

}  // namespace compound_kge

#endif  // COMPOUND_KGE_SCORING_HPP
