#ifndef COMPOUND_KGE_TRAINING_HPP
#define COMPOUND_KGE_TRAINING_HPP

// Self-adversarial negative-sampling loss and its optimizer loop.
//
//   L = -log sig(margin - f(h,t)) - sum_i p_i log sig(f(h'_i,t'_i) - margin)
//   p_i = softmax_i(alpha * f(h'_i,t'_i))     (held constant for gradients)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "compound_kge/dataset.hpp"
#include "compound_kge/evaluation.hpp"
#include "compound_kge/model.hpp"
#include "compound_kge/parallel.hpp"
#include "compound_kge/scoring.hpp"

namespace compound_kge {

class training_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

enum class Optimizer { Adam, SGD };

inline std::string to_string(Optimizer o) { return o == Optimizer::Adam ? "adam" : "sgd"; }

inline Optimizer parse_optimizer(const std::string& s) {
  if (s == "adam") return Optimizer::Adam;
  if (s == "sgd") return Optimizer::SGD;
  throw std::invalid_argument("unknown optimizer '" + s + "' (expected adam or sgd)");
}

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t batch_size = 256;
  std::size_t negative_size = 64;
  double adversarial_temperature = 1.0;
  double margin = 6.0;
  std::size_t max_steps = 1000;
  std::uint64_t seed = 0;
  Optimizer optimizer = Optimizer::Adam;
  std::size_t valid_interval = 1000;
  std::size_t valid_max_triples = 0;  // 0: whole validation split
  InitScheme init = InitScheme::Random;
  std::size_t threads = 0;  // 0: default_thread_count()

  void validate() const {
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
      throw std::invalid_argument("learning rate must be finite and non-negative");
    if (batch_size == 0) throw std::invalid_argument("batch size must be positive");
    if (negative_size == 0) throw std::invalid_argument("negative sample size must be positive");
    if (!(adversarial_temperature >= 0.0))
      throw std::invalid_argument("adversarial temperature must be non-negative");
    if (!(margin > 0.0)) throw std::invalid_argument("margin must be positive");
    if (valid_interval == 0) throw std::invalid_argument("validation interval must be positive");
  }
};

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEpsilon = 1e-8;

// ---------------------------------------------------------------------------
// Sampling and loss

enum class CorruptionSide { Head, Tail };

struct NegativeBatch {
  std::vector<std::int32_t> corrupted_entity_ids;
  CorruptionSide corruption_side = CorruptionSide::Tail;
  Triple source_triple;

  Triple negative(std::size_t i) const {
    Triple t = source_triple;
    (corruption_side == CorruptionSide::Head ? t.head : t.tail) = corrupted_entity_ids[i];
    return t;
  }
};

/// Uniform draws with replacement over all entities; no filtering.
inline NegativeBatch sample_negatives(const Triple& triple, std::size_t n, CorruptionSide side,
                                      std::size_t entity_count, Rng& rng) {
  if (entity_count == 0) throw std::logic_error("cannot sample negatives from an empty entity set");
  if (n == 0) throw std::invalid_argument("negative sample size must be positive");
  NegativeBatch b;
  b.corruption_side = side;
  b.source_triple = triple;
  b.corrupted_entity_ids.resize(n);
  std::uniform_int_distribution<std::int32_t> pick(0, static_cast<std::int32_t>(entity_count - 1));
  for (auto& id : b.corrupted_entity_ids) id = pick(rng);
  return b;
}

/// softmax(alpha * scores), max-subtracted.
inline std::vector<double> self_adversarial_weights(std::span<const double> neg_scores,
                                                    double alpha) {
  if (neg_scores.empty()) throw std::invalid_argument("need at least one negative score");
  std::vector<double> w(neg_scores.size());
  double hi = -std::numeric_limits<double>::infinity();
  for (double s : neg_scores) hi = std::max(hi, alpha * s);
  double total = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = std::exp(alpha * neg_scores[i] - hi);
    total += w[i];
  }
  for (auto& v : w) v /= total;
  return w;
}

/// log(sigmoid(x)) without overflow.
inline double log_sigmoid(double x) {
  return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double negative_sampling_loss(double pos_score, std::span<const double> neg_scores,
                                     std::span<const double> weights, double margin) {
  double loss = -log_sigmoid(margin - pos_score);
  for (std::size_t i = 0; i < neg_scores.size(); ++i)
    loss -= weights[i] * log_sigmoid(neg_scores[i] - margin);
  return loss;
}

struct LossGradient {
  double loss = 0.0;
  double d_pos = 0.0;
  std::vector<double> d_neg;
};

/// Loss and its derivatives w.r.t. the scores, weights held constant.
inline LossGradient negative_sampling_loss_grad(double pos_score, std::span<const double> neg_scores,
                                                std::span<const double> weights, double margin) {
  LossGradient g;
  g.loss = negative_sampling_loss(pos_score, neg_scores, weights, margin);
  g.d_pos = sigmoid(pos_score - margin);
  g.d_neg.resize(neg_scores.size());
  for (std::size_t i = 0; i < neg_scores.size(); ++i)
    g.d_neg[i] = -weights[i] * sigmoid(margin - neg_scores[i]);
  return g;
}

// ---------------------------------------------------------------------------
// Optimizer state

struct OptimizerState {
  std::vector<double> entity_m, entity_v;
  std::vector<RelationParams> relation_m, relation_v;
  std::size_t step = 0;

  static OptimizerState for_model(const Model& m) {
    OptimizerState s;
    s.entity_m.assign(m.entities.data().size(), 0.0);
    s.entity_v.assign(m.entities.data().size(), 0.0);
    const auto z = RelationParams::zeros(m.spec.dim, m.spec.rotation_is_shared());
    s.relation_m.assign(m.relation_count(), z);
    s.relation_v.assign(m.relation_count(), z);
    return s;
  }
};

struct TrainingState {
  Model model;
  OptimizerState optimizer;
  std::size_t corruption_counter = 0;  // alternates head / tail corruption
};

namespace detail {

struct PositiveWork {
  NegativeBatch negatives;
  double loss = 0.0;
  std::vector<double> dh, dt, dneg;  // dneg: n x d, row i for corrupted entity i
  RelationParams drel;
};

inline void compute_positive(const Model& model, const TrainConfig& cfg, double inv_batch,
                             ScoreWorkspace& ws, std::vector<double>& neg_scores, PositiveWork& w) {
  const auto& spec = model.spec;
  const std::size_t d = spec.dim;
  const std::size_t n = w.negatives.corrupted_entity_ids.size();
  const Triple pos = w.negatives.source_triple;
  const auto& rel = model.relations[static_cast<std::size_t>(pos.relation)];
  auto row = [&](std::int32_t id) { return model.entities.row(static_cast<std::size_t>(id)); };

  w.dh.assign(d, 0.0);
  w.dt.assign(d, 0.0);
  w.dneg.assign(n * d, 0.0);
  if (w.drel.head.translation.size() != d)
    w.drel = RelationParams::zeros(d, rel.shared_rotation);
  for (auto* p : {&w.drel.head, &w.drel.tail}) {
    std::fill(p->translation.begin(), p->translation.end(), 0.0);
    std::fill(p->angles.begin(), p->angles.end(), 0.0);
    std::fill(p->scale.begin(), p->scale.end(), 0.0);
  }
  w.drel.shared_rotation = rel.shared_rotation;

  neg_scores.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Triple neg = w.negatives.negative(i);
    neg_scores[i] = ws.forward(row(neg.head), rel, row(neg.tail), spec);
  }
  const auto weights = self_adversarial_weights(neg_scores, cfg.adversarial_temperature);
  const double pos_score = ws.forward(row(pos.head), rel, row(pos.tail), spec);
  const auto lg = negative_sampling_loss_grad(pos_score, neg_scores, weights, cfg.margin);
  w.loss = lg.loss;
  if (!std::isfinite(w.loss)) return;

  ws.backward(lg.d_pos * inv_batch, w.dh, w.dt, w.drel);
  const bool corrupt_head = w.negatives.corruption_side == CorruptionSide::Head;
  for (std::size_t i = 0; i < n; ++i) {
    const Triple neg = w.negatives.negative(i);
    ws.forward(row(neg.head), rel, row(neg.tail), spec);
    std::span<double> dneg(w.dneg.data() + i * d, d);
    if (corrupt_head)
      ws.backward(lg.d_neg[i] * inv_batch, dneg, w.dt, w.drel);
    else
      ws.backward(lg.d_neg[i] * inv_batch, w.dh, dneg, w.drel);
  }
}

inline void add_into(std::span<double> dst, std::span<const double> src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

inline void adam_update(std::span<double> p, std::span<const double> g, std::span<double> m,
                        std::span<double> v, double lr, std::size_t step) {
  const double c1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(step));
  for (std::size_t i = 0; i < p.size(); ++i) {
    m[i] = kAdamBeta1 * m[i] + (1.0 - kAdamBeta1) * g[i];
    v[i] = kAdamBeta2 * v[i] + (1.0 - kAdamBeta2) * g[i] * g[i];
    p[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + kAdamEpsilon);
  }
}

inline void sgd_update(std::span<double> p, std::span<const double> g, double lr) {
  for (std::size_t i = 0; i < p.size(); ++i) p[i] -= lr * g[i];
}

}  // namespace detail

/// One optimizer step on a batch of positives; returns the batch mean loss.
/// Each positive gets `negative_size` corruptions of one side, alternating
/// tail / head across positives. Only touched rows are updated (lazy Adam
/// with a global step count), then touched entity rows are re-normalized.
inline double train_step(std::span<const Triple> batch, TrainingState& state,
                         const TrainConfig& cfg, Rng& rng) {
  if (batch.empty()) throw std::invalid_argument("empty training batch");
  Model& model = state.model;
  const std::size_t d = model.spec.dim;
  const std::size_t n_ent = model.entity_count();
  const std::size_t threads = cfg.threads ? cfg.threads : default_thread_count();
  const double inv_batch = 1.0 / static_cast<double>(batch.size());

  std::vector<detail::PositiveWork> work(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto side = (state.corruption_counter++ % 2 == 0) ? CorruptionSide::Tail
                                                            : CorruptionSide::Head;
    work[i].negatives = sample_negatives(batch[i], cfg.negative_size, side, n_ent, rng);
  }

  parallel_for(batch.size(), threads, [&](std::size_t, std::size_t b, std::size_t e) {
    ScoreWorkspace ws;
    std::vector<double> neg_scores;
    for (std::size_t i = b; i < e; ++i)
      detail::compute_positive(model, cfg, inv_batch, ws, neg_scores, work[i]);
  });

  // Serial merge in batch order keeps results independent of thread count.
  double loss_sum = 0.0;
  std::vector<std::int32_t> touched;
  std::vector<std::int32_t> slot(n_ent, -1);
  std::vector<double> egrad;
  auto entity_grad = [&](std::int32_t id) -> std::span<double> {
    auto& s = slot[static_cast<std::size_t>(id)];
    if (s < 0) {
      s = static_cast<std::int32_t>(touched.size());
      touched.push_back(id);
      egrad.resize(egrad.size() + d, 0.0);
    }
    return {egrad.data() + static_cast<std::size_t>(s) * d, d};
  };
  std::vector<std::int32_t> touched_rel;
  std::vector<std::int32_t> rel_slot(model.relation_count(), -1);
  std::vector<RelationParams> rgrad;

  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& w = work[i];
    const Triple& pos = w.negatives.source_triple;
    if (!std::isfinite(w.loss)) {
      std::ostringstream os;
      os << "non-finite loss for triple (" << pos.head << ", " << pos.relation << ", " << pos.tail
         << ") at step " << state.optimizer.step + 1;
      throw training_error(os.str());
    }
    loss_sum += w.loss;
    detail::add_into(entity_grad(pos.head), w.dh);
    detail::add_into(entity_grad(pos.tail), w.dt);
    for (std::size_t k = 0; k < w.negatives.corrupted_entity_ids.size(); ++k)
      detail::add_into(entity_grad(w.negatives.corrupted_entity_ids[k]),
                       std::span<const double>(w.dneg.data() + k * d, d));
    auto& rs = rel_slot[static_cast<std::size_t>(pos.relation)];
    if (rs < 0) {
      rs = static_cast<std::int32_t>(touched_rel.size());
      touched_rel.push_back(pos.relation);
      rgrad.push_back(RelationParams::zeros(d, w.drel.shared_rotation));
    }
    auto& rg = rgrad[static_cast<std::size_t>(rs)];
    for (auto [dst, src] : {std::pair{&rg.head, &w.drel.head}, std::pair{&rg.tail, &w.drel.tail}}) {
      detail::add_into(dst->translation, src->translation);
      detail::add_into(dst->angles, src->angles);
      detail::add_into(dst->scale, src->scale);
    }
  }

  auto& opt = state.optimizer;
  ++opt.step;
  const double lr = cfg.learning_rate;
  auto update = [&](std::span<double> p, std::span<const double> g, std::span<double> m,
                    std::span<double> v) {
    if (cfg.optimizer == Optimizer::Adam)
      detail::adam_update(p, g, m, v, lr, opt.step);
    else
      detail::sgd_update(p, g, lr);
  };

  for (std::size_t s = 0; s < touched.size(); ++s) {
    const std::size_t id = static_cast<std::size_t>(touched[s]);
    update(model.entities.row(id), std::span<const double>(egrad.data() + s * d, d),
           std::span<double>(opt.entity_m.data() + id * d, d),
           std::span<double>(opt.entity_v.data() + id * d, d));
  }

  const auto mask = TrainableMask::from(model.spec);
  for (std::size_t s = 0; s < touched_rel.size(); ++s) {
    const std::size_t r = static_cast<std::size_t>(touched_rel[s]);
    auto& p = model.relations[r];
    auto& g = rgrad[s];
    auto& m = opt.relation_m[r];
    auto& v = opt.relation_v[r];
    if (mask.head_translation) update(p.head.translation, g.head.translation, m.head.translation, v.head.translation);
    if (mask.head_angles) update(p.head.angles, g.head.angles, m.head.angles, v.head.angles);
    if (mask.head_scale) update(p.head.scale, g.head.scale, m.head.scale, v.head.scale);
    if (mask.tail_translation) update(p.tail.translation, g.tail.translation, m.tail.translation, v.tail.translation);
    if (mask.tail_angles) update(p.tail.angles, g.tail.angles, m.tail.angles, v.tail.angles);
    if (mask.tail_scale) update(p.tail.scale, g.tail.scale, m.tail.scale, v.tail.scale);
  }

  for (auto id : touched) normalize_row(model.entities.row(static_cast<std::size_t>(id)), rng);
  return loss_sum / static_cast<double>(batch.size());
}

// ---------------------------------------------------------------------------
// Training loop

struct TrainLogRow {
  std::size_t step = 0;
  double loss = 0.0;
  std::optional<double> valid_mrr;
  double elapsed_seconds = 0.0;
};

inline constexpr const char* kTrainLogHeader = "step,loss,valid_mrr,elapsed_seconds";

inline std::string format_log_row(const TrainLogRow& r) {
  std::ostringstream os;
  os << std::setprecision(17) << r.step << ',' << r.loss << ',';
  if (r.valid_mrr) os << *r.valid_mrr;
  os << ',' << std::setprecision(6) << std::fixed << r.elapsed_seconds;
  return os.str();
}

struct TrainOptions {
  const FilterIndex* filter = nullptr;  // built from the store when null
  std::ostream* log_csv = nullptr;      // header + one row per step, flushed per validation
  std::function<void(const TrainLogRow&)> on_row;
};

struct TrainResult {
  Model model;                     // after the last step
  Model best;                      // best validation MRR (== model without validation)
  std::optional<double> best_valid_mrr;
  std::size_t best_step = 0;
  std::vector<TrainLogRow> log;
  Rng rng;                         // generator state after the last step
  std::size_t steps = 0;
};

/// Cycles through shuffled epochs of the training split.
class BatchCursor {
public:
  BatchCursor(std::size_t n) : order_(n) {  // NOLINT(google-explicit-constructor)
    for (std::size_t i = 0; i < n; ++i) order_[i] = i;
  }

  std::vector<std::size_t> next(std::size_t batch, Rng& rng) {
    std::vector<std::size_t> out;
    out.reserve(batch);
    while (out.size() < batch) {
      if (pos_ == 0) std::shuffle(order_.begin(), order_.end(), rng);
      out.push_back(order_[pos_]);
      pos_ = (pos_ + 1) % order_.size();
    }
    return out;
  }

private:
  std::vector<std::size_t> order_;
  std::size_t pos_ = 0;
};

/// Initializes a model from `config.seed` and trains it for max_steps.
/// Validation MRR is computed every valid_interval steps and at the end.
inline TrainResult train(const TripleStore& store, const PresetModel& preset,
                         const TrainConfig& config, const TrainOptions& options = {}) {
  config.validate();
  if (store.train.empty()) throw std::invalid_argument("cannot train on an empty training split");

  Rng rng(config.seed);
  TrainingState state;
  state.model = initialize_model(preset, store.entity_count(), store.relation_count(),
                                 config.init, rng);
  state.optimizer = OptimizerState::for_model(state.model);

  std::optional<FilterIndex> own_filter;
  const FilterIndex* filter = options.filter;
  if (!filter && !store.valid.empty()) {
    own_filter.emplace(store);
    filter = &*own_filter;
  }
  std::span<const Triple> valid(store.valid);
  if (config.valid_max_triples && valid.size() > config.valid_max_triples)
    valid = valid.first(config.valid_max_triples);
  EvalOptions eval_opts;
  eval_opts.threads = config.threads ? config.threads : default_thread_count();

  TrainResult result;
  result.best = state.model;
  if (options.log_csv) *options.log_csv << kTrainLogHeader << '\n';

  const auto start = std::chrono::steady_clock::now();
  BatchCursor cursor(store.train.size());
  std::vector<Triple> batch;
  for (std::size_t step = 1; step <= config.max_steps; ++step) {
    batch.clear();
    for (auto idx : cursor.next(config.batch_size, rng)) batch.push_back(store.train[idx]);
    TrainLogRow row;
    row.step = step;
    row.loss = train_step(batch, state, config, rng);
    const bool validate_now = step % config.valid_interval == 0 || step == config.max_steps;
    if (validate_now && !valid.empty()) {
      row.valid_mrr = filtered_mrr(state.model, valid, *filter, eval_opts);
      if (!result.best_valid_mrr || *row.valid_mrr > *result.best_valid_mrr) {
        result.best_valid_mrr = row.valid_mrr;
        result.best_step = step;
        result.best = state.model;
      }
    }
    row.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (options.log_csv) {
      *options.log_csv << format_log_row(row) << '\n';
      if (validate_now) options.log_csv->flush();
    }
    if (options.on_row) options.on_row(row);
    result.log.push_back(row);
  }

  if (!result.best_valid_mrr) {
    result.best = state.model;
    result.best_step = config.max_steps;
  }
  result.model = std::move(state.model);
  result.rng = rng;
  result.steps = config.max_steps;
  return result;
}

}  // namespace compound_kge

#endif  // COMPOUND_KGE_TRAINING_HPP
