#ifndef COMPOUND_KGE_EVALUATION_HPP
#define COMPOUND_KGE_EVALUATION_HPP

// Filtered link-prediction ranking and MRR / Hits@k reports.
//
// Tie policy: rank = 1 + #(strictly better) + floor(#ties / 2), where ties are
// other surviving candidates whose score equals the ground truth's exactly.

#include <algorithm>
#include <array>
#include <cstdio>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "compound_kge/dataset.hpp"
#include "compound_kge/model.hpp"
#include "compound_kge/parallel.hpp"

namespace compound_kge {

enum class Direction { PredictHead = 0, PredictTail = 1 };

inline std::string to_string(Direction d) {
  return d == Direction::PredictHead ? "predict_head" : "predict_tail";
}

inline constexpr std::size_t kDefaultChunkSize = std::size_t{1} << 16;

struct RankOptions {
  std::size_t chunk_size = kDefaultChunkSize;
  bool filtered = true;
};

/// Rank of the ground truth among all entities substituted on one side.
inline std::size_t filtered_rank(const Model& model, const Triple& triple, Direction direction,
                                 const FilterIndex& filter, const RankOptions& opts = {}) {
  const auto& spec = model.spec;
  const auto& rel = model.relations.at(static_cast<std::size_t>(triple.relation));
  const std::size_t n = model.entity_count();
  const bool tail_side = direction == Direction::PredictTail;
  const std::int32_t truth = tail_side ? triple.tail : triple.head;

  // Fixed side transformed once; candidates go through the other chain.
  const std::vector<double> anchor =
      tail_side ? transform_head(model.entities.row(static_cast<std::size_t>(triple.head)), rel, spec)
                : transform_tail(model.entities.row(static_cast<std::size_t>(triple.tail)), rel, spec);
  const OperatorChain& chain = tail_side ? spec.tail_chain : spec.head_chain;
  const TransformView view = tail_side ? rel.tail_view() : rel.head_view();

  std::vector<double> buf(spec.dim);
  auto candidate_score = [&](std::size_t c) {
    auto e = model.entities.row(c);
    std::copy(e.begin(), e.end(), buf.begin());
    detail::apply_chain_inplace(buf, chain, view);
    return tail_side ? detail::distance(anchor, buf, spec.norm)
                     : detail::distance(buf, anchor, spec.norm);
  };

  const double truth_score = candidate_score(static_cast<std::size_t>(truth));
  const std::span<const std::int32_t> known =
      opts.filtered ? (tail_side ? filter.true_tails(triple.head, triple.relation)
                                 : filter.true_heads(triple.relation, triple.tail))
                    : std::span<const std::int32_t>{};

  std::size_t lower = 0, ties = 0;
  std::size_t k = 0;  // cursor into the sorted known set
  std::vector<double> scores;
  const std::size_t chunk = std::max<std::size_t>(1, opts.chunk_size);
  for (std::size_t begin = 0; begin < n; begin += chunk) {
    const std::size_t end = std::min(n, begin + chunk);
    scores.resize(end - begin);
    for (std::size_t c = begin; c < end; ++c) scores[c - begin] = candidate_score(c);
    for (std::size_t c = begin; c < end; ++c) {
      if (c == static_cast<std::size_t>(truth)) continue;
      while (k < known.size() && static_cast<std::size_t>(known[k]) < c) ++k;
      if (k < known.size() && static_cast<std::size_t>(known[k]) == c) continue;
      const double s = scores[c - begin];
      if (s < truth_score)
        ++lower;
      else if (s == truth_score)
        ++ties;
    }
  }
  return 1 + lower + ties / 2;
}

struct Metrics {
  double mrr = 0.0;
  double hits1 = 0.0;
  double hits3 = 0.0;
  double hits10 = 0.0;
  std::size_t count = 0;
};

/// Running sums in insertion order.
class MetricsAccumulator {
public:
  void add(std::size_t rank) {
    rr_ += 1.0 / static_cast<double>(rank);
    if (rank <= 1) ++h1_;
    if (rank <= 3) ++h3_;
    if (rank <= 10) ++h10_;
    ++count_;
  }

  Metrics result() const {
    Metrics m;
    m.count = count_;
    if (count_ == 0) return m;
    const double n = static_cast<double>(count_);
    m.mrr = rr_ / n;
    m.hits1 = static_cast<double>(h1_) / n;
    m.hits3 = static_cast<double>(h3_) / n;
    m.hits10 = static_cast<double>(h10_) / n;
    return m;
  }

private:
  double rr_ = 0.0;
  std::size_t h1_ = 0, h3_ = 0, h10_ = 0, count_ = 0;
};

struct EvalReport {
  std::string split;
  Metrics overall;
  std::array<Metrics, 2> by_direction;
  std::array<std::array<Metrics, 4>, 2> cells;  // [direction][category]
};

struct EvalOptions {
  RankOptions rank;
  std::size_t threads = 1;
};

struct TripleRanks {
  std::size_t head = 0;  // rank when predicting the head
  std::size_t tail = 0;  // rank when predicting the tail
};

inline std::vector<TripleRanks> rank_triples(const Model& model, std::span<const Triple> triples,
                                             const FilterIndex& filter,
                                             const EvalOptions& opts = {}) {
  std::vector<TripleRanks> ranks(triples.size());
  parallel_for(triples.size(), opts.threads, [&](std::size_t, std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      ranks[i].head = filtered_rank(model, triples[i], Direction::PredictHead, filter, opts.rank);
      ranks[i].tail = filtered_rank(model, triples[i], Direction::PredictTail, filter, opts.rank);
    }
  });
  return ranks;
}

/// Aggregates ranks: triple order, head prediction before tail prediction.
inline EvalReport aggregate_ranks(std::span<const Triple> triples,
                                  std::span<const TripleRanks> ranks,
                                  const std::vector<RelationStats>& categories) {
  MetricsAccumulator overall;
  std::array<MetricsAccumulator, 2> dir;
  std::array<std::array<MetricsAccumulator, 4>, 2> cells;
  for (std::size_t i = 0; i < triples.size(); ++i) {
    const auto cat = static_cast<std::size_t>(
        categories.at(static_cast<std::size_t>(triples[i].relation)).category);
    for (auto [d, rank] : {std::pair{0, ranks[i].head}, std::pair{1, ranks[i].tail}}) {
      overall.add(rank);
      dir[static_cast<std::size_t>(d)].add(rank);
      cells[static_cast<std::size_t>(d)][cat].add(rank);
    }
  }
  EvalReport r;
  r.overall = overall.result();
  for (std::size_t d = 0; d < 2; ++d) {
    r.by_direction[d] = dir[d].result();
    for (std::size_t c = 0; c < 4; ++c) r.cells[d][c] = cells[d][c].result();
  }
  return r;
}

/// Filtered evaluation of both directions for every triple of a split.
inline EvalReport evaluate(const Model& model, const TripleStore& store, Split split,
                           const FilterIndex& filter, const std::vector<RelationStats>& categories,
                           const EvalOptions& opts = {}) {
  const auto& triples = store.split(split);
  if (triples.empty())
    throw std::invalid_argument("cannot evaluate empty split '" + to_string(split) + "'");
  const auto ranks = rank_triples(model, triples, filter, opts);
  auto report = aggregate_ranks(triples, ranks, categories);
  report.split = to_string(split);
  return report;
}

/// Overall filtered MRR only; used for validation during training.
inline double filtered_mrr(const Model& model, std::span<const Triple> triples,
                           const FilterIndex& filter, const EvalOptions& opts = {}) {
  if (triples.empty()) return 0.0;
  const auto ranks = rank_triples(model, triples, filter, opts);
  MetricsAccumulator acc;
  for (const auto& r : ranks) {
    acc.add(r.head);
    acc.add(r.tail);
  }
  return acc.result().mrr;
}

// ---------------------------------------------------------------------------
// Serialization

inline constexpr const char* kTiePolicy = "mean: 1 + lower + floor(ties/2)";

inline nlohmann::ordered_json metrics_json(const Metrics& m) {
  nlohmann::ordered_json j;
  j["mrr"] = m.mrr;
  j["hits1"] = m.hits1;
  j["hits3"] = m.hits3;
  j["hits10"] = m.hits10;
  j["count"] = m.count;
  return j;
}

inline nlohmann::ordered_json to_json(const EvalReport& r) {
  nlohmann::ordered_json j = metrics_json(r.overall);
  j["split"] = r.split;
  j["tie_policy"] = kTiePolicy;
  for (auto d : {Direction::PredictHead, Direction::PredictTail})
    j["by_direction"][to_string(d)] = metrics_json(r.by_direction[static_cast<std::size_t>(d)]);
  for (auto d : {Direction::PredictHead, Direction::PredictTail})
    for (auto c : kAllCategories)
      j["by_direction_category"][to_string(d)][to_string(c)] =
          metrics_json(r.cells[static_cast<std::size_t>(d)][static_cast<std::size_t>(c)]);
  return j;
}

inline std::string format_report(const EvalReport& r) {
  std::ostringstream os;
  char line[256];
  os << "# filtered ranking, split=" << r.split << ", ties: " << kTiePolicy << "\n";
  std::snprintf(line, sizeof line, "%-10s %8s %8s %8s %8s %10s\n", "", "MRR", "Hit@1", "Hit@3",
                "Hit@10", "count");
  os << line;
  std::snprintf(line, sizeof line, "%-10s %8.4f %8.4f %8.4f %8.4f %10zu\n", "overall",
                r.overall.mrr, r.overall.hits1, r.overall.hits3, r.overall.hits10, r.overall.count);
  os << line << "\n";
  std::snprintf(line, sizeof line, "%-16s %8s %8s %8s %8s\n", "MRR", "1-to-1", "1-to-N", "N-to-1",
                "N-to-N");
  os << line;
  for (auto d : {Direction::PredictHead, Direction::PredictTail}) {
    const auto& c = r.cells[static_cast<std::size_t>(d)];
    std::snprintf(line, sizeof line, "%-16s %8.4f %8.4f %8.4f %8.4f\n",
                  d == Direction::PredictHead ? "Predicting Head" : "Predicting Tail", c[0].mrr,
                  c[1].mrr, c[2].mrr, c[3].mrr);
    os << line;
  }
  return os.str();
}

}  // namespace compound_kge

#endif  // COMPOUND_KGE_EVALUATION_HPP
