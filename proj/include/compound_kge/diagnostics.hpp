#ifndef COMPOUND_KGE_DIAGNOSTICS_HPP
#define COMPOUND_KGE_DIAGNOSTICS_HPP

// Numerical checks of relation-pattern identities on per-block operator
// matrices, plus histogram and embedding exports.
//
// For a relation, M is the head-side block operator and M' the tail-side one.
// Every residual is a max-abs norm taken over 2D blocks. Blocks whose needed
// inverses do not exist are excluded and counted.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "compound_kge/dataset.hpp"
#include "compound_kge/model.hpp"
#include "compound_kge/scoring.hpp"
#include "compound_kge/transform.hpp"

namespace compound_kge {

struct BlockMatrices {
  std::vector<Mat3> head;  // M, one per block
  std::vector<Mat3> tail;  // M'
};

inline BlockMatrices relation_matrices(const RelationParams& r, const CompoundSpec& spec) {
  const std::size_t blocks = spec.dim / 2;
  BlockMatrices out;
  out.head.reserve(blocks);
  out.tail.reserve(blocks);
  const auto hv = r.head_view();
  const auto tv = r.tail_view();
  for (std::size_t b = 0; b < blocks; ++b) {
    out.head.push_back(compound_matrix_2d(spec.head_chain, block_params(hv, b)));
    out.tail.push_back(compound_matrix_2d(spec.tail_chain, block_params(tv, b)));
  }
  return out;
}

struct Residual {
  double value = 0.0;  // NaN when no block could be evaluated
  std::size_t evaluated = 0;
  std::size_t excluded = 0;

  bool applicable() const { return evaluated > 0; }
};

namespace detail {

inline bool invertible(const Mat3& m, double tol) { return std::abs(m.linear_det()) >= tol; }

template <typename F>
Residual blockwise(std::size_t blocks, F&& per_block) {
  Residual r;
  for (std::size_t b = 0; b < blocks; ++b) {
    if (auto v = per_block(b)) {
      r.value = std::max(r.value, *v);
      ++r.evaluated;
    } else {
      ++r.excluded;
    }
  }
  if (!r.applicable()) r.value = std::numeric_limits<double>::quiet_NaN();
  return r;
}

}  // namespace detail

/// max_b || M M'^-1 - M' M^-1 ||: zero when the relation is symmetric.
inline Residual symmetry_residual(const BlockMatrices& r, double tol = kSingularTolerance) {
  return detail::blockwise(r.head.size(), [&](std::size_t b) -> std::optional<double> {
    const Mat3 &m = r.head[b], &mt = r.tail[b];
    if (!detail::invertible(m, tol) || !detail::invertible(mt, tol)) return std::nullopt;
    return max_abs(m * invert_compound_2d(mt, tol) - mt * invert_compound_2d(m, tol));
  });
}

/// max_b || M2'^-1 M2 - M1^-1 M1' ||: zero when r2 is the inverse of r1.
inline Residual inversion_residual(const BlockMatrices& r1, const BlockMatrices& r2,
                                   double tol = kSingularTolerance) {
  return detail::blockwise(r1.head.size(), [&](std::size_t b) -> std::optional<double> {
    if (!detail::invertible(r2.tail[b], tol) || !detail::invertible(r1.head[b], tol))
      return std::nullopt;
    return max_abs(invert_compound_2d(r2.tail[b], tol) * r2.head[b] -
                   invert_compound_2d(r1.head[b], tol) * r1.tail[b]);
  });
}

/// max_b || M3'^-1 M3 - (M2'^-1 M2)(M1'^-1 M1) ||: zero when r1 then r2 implies r3.
inline Residual composition_residual(const BlockMatrices& r1, const BlockMatrices& r2,
                                     const BlockMatrices& r3, double tol = kSingularTolerance) {
  return detail::blockwise(r1.head.size(), [&](std::size_t b) -> std::optional<double> {
    if (!detail::invertible(r1.tail[b], tol) || !detail::invertible(r2.tail[b], tol) ||
        !detail::invertible(r3.tail[b], tol))
      return std::nullopt;
    const Mat3 lhs = invert_compound_2d(r3.tail[b], tol) * r3.head[b];
    const Mat3 rhs = (invert_compound_2d(r2.tail[b], tol) * r2.head[b]) *
                     (invert_compound_2d(r1.tail[b], tol) * r1.head[b]);
    return max_abs(lhs - rhs);
  });
}

/// max_b || (M1 M1'^-1)(M2 M2'^-1) - (M2 M2'^-1)(M1 M1'^-1) ||: non-zero for
/// non-commuting relations.
inline Residual commutator_residual(const BlockMatrices& r1, const BlockMatrices& r2,
                                    double tol = kSingularTolerance) {
  return detail::blockwise(r1.head.size(), [&](std::size_t b) -> std::optional<double> {
    if (!detail::invertible(r1.tail[b], tol) || !detail::invertible(r2.tail[b], tol))
      return std::nullopt;
    const Mat3 a = r1.head[b] * invert_compound_2d(r1.tail[b], tol);
    const Mat3 c = r2.head[b] * invert_compound_2d(r2.tail[b], tol);
    return max_abs(a * c - c * a);
  });
}

/// max over samples of f_r1(h,t) - f_r2(h,t). Non-positive when r1 equals r2
/// with both scalings multiplied by gamma <= 1 in the T*R*S form.
inline double subrelation_score_gap(
    const RelationParams& r1, const RelationParams& r2, const CompoundSpec& spec,
    const std::vector<std::pair<std::vector<double>, std::vector<double>>>& samples) {
  double gap = -std::numeric_limits<double>::infinity();
  for (const auto& [h, t] : samples) gap = std::max(gap, score(h, r1, t, spec) - score(h, r2, t, spec));
  return gap;
}

/// r with every scale entry multiplied by gamma.
inline RelationParams scaled_relation(RelationParams r, double gamma) {
  for (auto& s : r.head.scale) s *= gamma;
  for (auto& s : r.tail.scale) s *= gamma;
  return r;
}

// ---------------------------------------------------------------------------

inline constexpr double kTrainedSingularTolerance = 1e-2;

struct RelationDiagnostics {
  std::int32_t relation = 0;
  double singularity_fraction = 0.0;  // scaled entries with |s| < tolerance
  double block_det_min = 0.0;         // min |det A| over head and tail blocks
  Residual symmetry;
};

inline RelationDiagnostics diagnose_relation(const Model& model, std::int32_t relation,
                                             double scale_tol = kTrainedSingularTolerance) {
  const auto& r = model.relations.at(static_cast<std::size_t>(relation));
  const auto& spec = model.spec;
  RelationDiagnostics d;
  d.relation = relation;

  std::size_t total = 0, small = 0;
  auto count = [&](const std::vector<double>& s) {
    for (double v : s) {
      ++total;
      if (std::abs(v) < scale_tol) ++small;
    }
  };
  if (spec.head_chain.contains(OperatorKind::Scaling)) count(r.head.scale);
  if (spec.tail_chain.contains(OperatorKind::Scaling)) count(r.tail.scale);
  d.singularity_fraction = total ? static_cast<double>(small) / static_cast<double>(total) : 0.0;

  const auto blocks = relation_matrices(r, spec);
  d.block_det_min = std::numeric_limits<double>::infinity();
  for (const auto* side : {&blocks.head, &blocks.tail})
    for (const auto& m : *side) d.block_det_min = std::min(d.block_det_min, std::abs(m.linear_det()));
  d.symmetry = symmetry_residual(blocks);
  return d;
}

// ---------------------------------------------------------------------------
// Name lookup

namespace detail {

inline std::size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

}  // namespace detail

/// Up to `k` names closest to `query` by edit distance.
inline std::vector<std::string> nearest_names(const std::vector<std::string>& names,
                                              const std::string& query, std::size_t k = 3) {
  std::vector<std::pair<std::size_t, std::string>> scored;
  for (const auto& n : names) scored.emplace_back(detail::edit_distance(n, query), n);
  std::sort(scored.begin(), scored.end());
  std::vector<std::string> out;
  for (std::size_t i = 0; i < std::min(k, scored.size()); ++i) out.push_back(scored[i].second);
  return out;
}

/// Id of `name`; lookup_error with the nearest known names otherwise.
inline std::int32_t find_relation(const std::vector<std::string>& names, const std::string& name) {
  auto it = std::find(names.begin(), names.end(), name);
  if (it != names.end()) return static_cast<std::int32_t>(it - names.begin());
  std::string msg = "unknown relation '" + name + "'";
  const auto near = nearest_names(names, name);
  if (!near.empty()) {
    msg += "; nearest:";
    for (const auto& n : near) msg += " '" + n + "'";
  }
  throw lookup_error(msg);
}

// ---------------------------------------------------------------------------
// Histograms

struct HistogramBin {
  std::string component;  // translation | scale | angle
  std::string side;       // head | tail | shared
  double left = 0.0;
  double right = 0.0;
  std::size_t count = 0;
};

/// Equal-width bins over [min, max]; a constant series gets a unit-wide range.
inline std::vector<HistogramBin> histogram(const std::vector<double>& values, std::size_t bins,
                                           const std::string& component, const std::string& side) {
  if (bins == 0) throw std::invalid_argument("histogram needs at least one bin");
  std::vector<HistogramBin> out;
  if (values.empty()) return out;
  auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  double lo = *mn, hi = *mx;
  if (hi == lo) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double width = (hi - lo) / static_cast<double>(bins);
  out.resize(bins);
  for (std::size_t i = 0; i < bins; ++i)
    out[i] = {component, side, lo + width * static_cast<double>(i),
              i + 1 == bins ? hi : lo + width * static_cast<double>(i + 1), 0};
  for (double v : values) {
    auto idx = static_cast<std::size_t>(std::floor((v - lo) / width));
    ++out[std::min(idx, bins - 1)].count;
  }
  return out;
}

/// Histograms of every component the spec actually uses for one relation.
inline std::vector<HistogramBin> relation_histograms(const Model& model, std::int32_t relation,
                                                     std::size_t bins) {
  const auto& r = model.relations.at(static_cast<std::size_t>(relation));
  const auto& spec = model.spec;
  std::vector<HistogramBin> out;
  auto add = [&](const std::vector<double>& v, const char* comp, const char* side) {
    auto h = histogram(v, bins, comp, side);
    out.insert(out.end(), h.begin(), h.end());
  };
  const bool shared = spec.rotation_is_shared();
  if (spec.head_chain.contains(OperatorKind::Translation)) add(r.head.translation, "translation", "head");
  if (spec.tail_chain.contains(OperatorKind::Translation)) add(r.tail.translation, "translation", "tail");
  if (spec.head_chain.contains(OperatorKind::Scaling)) add(r.head.scale, "scale", "head");
  if (spec.tail_chain.contains(OperatorKind::Scaling)) add(r.tail.scale, "scale", "tail");
  if (shared) {
    add(r.head.angles, "angle", "shared");
  } else {
    if (spec.head_chain.contains(OperatorKind::Rotation)) add(r.head.angles, "angle", "head");
    if (spec.tail_chain.contains(OperatorKind::Rotation)) add(r.tail.angles, "angle", "tail");
  }
  return out;
}

inline std::vector<HistogramBin> export_relation_histograms(const Model& model,
                                                            const std::vector<std::string>& names,
                                                            const std::string& relation,
                                                            std::size_t bins) {
  return relation_histograms(model, find_relation(names, relation), bins);
}

inline void write_histogram_csv(std::ostream& os, const std::vector<HistogramBin>& bins) {
  os << "component,side,bin_left,bin_right,count\n";
  os << std::setprecision(9);
  for (const auto& b : bins)
    os << b.component << ',' << b.side << ',' << b.left << ',' << b.right << ',' << b.count << '\n';
}

// ---------------------------------------------------------------------------
// Entity embedding export

namespace detail {

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + '"';
}

inline std::vector<std::string> parse_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

}  // namespace detail

/// `name<TAB>label` lines.
inline std::map<std::string, std::string> read_label_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw dataset_error("cannot open label file " + path);
  std::map<std::string, std::string> labels;
  std::string line;
  while (std::getline(in, line)) {
    detail::strip_cr(line);
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos) continue;
    labels[line.substr(0, tab)] = line.substr(tab + 1);
  }
  return labels;
}

struct EmbeddingExportReport {
  std::size_t labeled = 0;
  std::size_t unlabeled = 0;
  std::size_t unknown_labels = 0;  // label entries naming no entity
};

/// CSV `entity_name,dim_0..dim_{d-1}[,label]`, one row per entity in id order.
inline EmbeddingExportReport write_entity_embeddings(
    std::ostream& os, const Model& model, const std::vector<std::string>& names,
    const std::map<std::string, std::string>* labels = nullptr) {
  if (names.size() != model.entity_count())
    throw std::invalid_argument("entity name count does not match the model");
  EmbeddingExportReport rep;
  const std::size_t d = model.spec.dim;
  os << "entity_name";
  for (std::size_t j = 0; j < d; ++j) os << ",dim_" << j;
  if (labels) os << ",label";
  os << '\n';
  char buf[32];
  for (std::size_t i = 0; i < names.size(); ++i) {
    os << detail::csv_field(names[i]);
    for (double v : model.entities.row(i)) {
      std::snprintf(buf, sizeof buf, ",%.9g", v);
      os << buf;
    }
    if (labels) {
      auto it = labels->find(names[i]);
      if (it != labels->end()) {
        os << ',' << detail::csv_field(it->second);
        ++rep.labeled;
      } else {
        os << ',';
        ++rep.unlabeled;
      }
    }
    os << '\n';
  }
  if (labels) {
    std::unordered_set<std::string> known(names.begin(), names.end());
    for (const auto& [name, label] : *labels)
      if (!known.count(name)) ++rep.unknown_labels;
  }
  return rep;
}

struct EmbeddingRow {
  std::string name;
  std::vector<double> values;
  std::string label;
};

inline std::vector<EmbeddingRow> read_entity_embeddings(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) return {};
  const auto header = detail::parse_csv_line(line);
  const bool has_label = !header.empty() && header.back() == "label";
  const std::size_t dims = header.size() - 1 - (has_label ? 1 : 0);
  std::vector<EmbeddingRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto f = detail::parse_csv_line(line);
    if (f.size() != header.size()) throw dataset_error("embedding row has wrong field count");
    EmbeddingRow r;
    r.name = f[0];
    for (std::size_t j = 0; j < dims; ++j) r.values.push_back(std::stod(f[1 + j]));
    if (has_label) r.label = f.back();
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace compound_kge

#endif  // COMPOUND_KGE_DIAGNOSTICS_HPP
