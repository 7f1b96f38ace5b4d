#ifndef COMPOUND_KGE_SYNTHETIC_HPP
#define COMPOUND_KGE_SYNTHETIC_HPP

// Small generated graphs, each built around one relational pattern.
// Relation 0 always carries the named pattern; some patterns add helper
// relations so held-out triples can be inferred from training triples.

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "compound_kge/dataset.hpp"

namespace compound_kge {

enum class SyntheticPattern {
  Symmetric,
  Antisymmetric,
  Inverse,
  OneToN,
  NToOne,
  NToN,
  Transitive,
  SubRelation,
  NonCommutative,
};

inline constexpr SyntheticPattern kAllPatterns[] = {
    SyntheticPattern::Symmetric,   SyntheticPattern::Antisymmetric, SyntheticPattern::Inverse,
    SyntheticPattern::OneToN,      SyntheticPattern::NToOne,        SyntheticPattern::NToN,
    SyntheticPattern::Transitive,  SyntheticPattern::SubRelation,   SyntheticPattern::NonCommutative,
};

inline std::string to_string(SyntheticPattern p) {
  switch (p) {
    case SyntheticPattern::Symmetric: return "symmetric";
    case SyntheticPattern::Antisymmetric: return "antisymmetric";
    case SyntheticPattern::Inverse: return "inverse";
    case SyntheticPattern::OneToN: return "one_to_n";
    case SyntheticPattern::NToOne: return "n_to_one";
    case SyntheticPattern::NToN: return "n_to_n";
    case SyntheticPattern::Transitive: return "transitive";
    case SyntheticPattern::SubRelation: return "sub_relation";
    case SyntheticPattern::NonCommutative: return "non_commutative";
  }
  return "?";
}

inline SyntheticPattern parse_pattern(const std::string& s) {
  for (auto p : kAllPatterns)
    if (to_string(p) == s) return p;
  throw std::invalid_argument("unknown synthetic pattern '" + s + "'");
}

/// How the size knobs are read per pattern:
///   Symmetric       entities (even), fan_out edges per entity (1 = perfect matching)
///   Antisymmetric   entities, fan_out successors per entity
///   Inverse         entities, fan_out successors per entity
///   OneToN/NToOne   groups hubs with fan_out members each
///   NToN            groups blocks of fan_out heads x fan_out tails
/// OneToN, NToOne and NToN members also get `attributes` relations, each
/// mapping the members of a group one-to-one onto fan_out shared values.
///   Transitive      entities per layer (3 layers)
///   SubRelation     entities, fan_out successors per entity
///   NonCommutative  entities per generation (3 generations)
struct SyntheticSize {
  std::size_t entities = 40;
  std::size_t groups = 10;
  std::size_t fan_out = 3;
  std::size_t attributes = 3;
  double holdout = 0.1;  // fraction of eligible triples sent to each of valid and test
};

class synthetic_pattern_error : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

namespace detail {

using TripleSet = std::set<std::tuple<std::int32_t, std::int32_t, std::int32_t>>;

inline TripleSet triple_set(const TripleStore& s, std::int32_t relation) {
  TripleSet out;
  for (auto split : {Split::Train, Split::Valid, Split::Test})
    for (const auto& t : s.split(split))
      if (t.relation == relation) out.insert({t.head, t.relation, t.tail});
  return out;
}

inline std::set<std::pair<std::int32_t, std::int32_t>> pairs_of(const TripleStore& s, std::int32_t relation) {
  std::set<std::pair<std::int32_t, std::int32_t>> out;
  for (const auto& [h, r, t] : triple_set(s, relation)) out.insert({h, t});
  return out;
}

inline std::set<std::pair<std::int32_t, std::int32_t>> compose(
    const std::set<std::pair<std::int32_t, std::int32_t>>& first,
    const std::set<std::pair<std::int32_t, std::int32_t>>& second) {
  std::multimap<std::int32_t, std::int32_t> by_head;
  for (auto [a, b] : second) by_head.emplace(a, b);
  std::set<std::pair<std::int32_t, std::int32_t>> out;
  for (auto [a, b] : first) {
    auto [lo, hi] = by_head.equal_range(b);
    for (auto it = lo; it != hi; ++it) out.insert({a, it->second});
  }
  return out;
}

inline void require(bool ok, SyntheticPattern p, const std::string& what) {
  if (!ok) throw synthetic_pattern_error(to_string(p) + " pattern violated: " + what);
}

/// Counts heads per tail and tails per head.
inline void check_fanout(const std::set<std::pair<std::int32_t, std::int32_t>>& pairs,
                         std::size_t max_heads_per_tail, std::size_t max_tails_per_head,
                         SyntheticPattern p) {
  std::map<std::int32_t, std::size_t> tails_of, heads_of;
  for (auto [h, t] : pairs) {
    ++tails_of[h];
    ++heads_of[t];
  }
  for (auto& [h, n] : tails_of) require(n <= max_tails_per_head, p, "too many tails for a head");
  for (auto& [t, n] : heads_of) require(n <= max_heads_per_tail, p, "too many heads for a tail");
}

}  // namespace detail

/// Exhaustive check that the store's full triple set realizes the pattern.
inline void verify_pattern(const TripleStore& s, SyntheticPattern p) {
  using detail::require;
  const auto r0 = detail::pairs_of(s, 0);
  require(!r0.empty(), p, "relation 0 has no triples");
  for (auto [h, t] : r0) require(h != t, p, "self loop");
  switch (p) {
    case SyntheticPattern::Symmetric:
      for (auto [h, t] : r0) require(r0.count({t, h}) == 1, p, "missing reverse triple");
      break;
    case SyntheticPattern::Antisymmetric:
      for (auto [h, t] : r0) require(r0.count({t, h}) == 0, p, "reverse triple present");
      break;
    case SyntheticPattern::Inverse: {
      const auto r1 = detail::pairs_of(s, 1);
      require(r1.size() == r0.size(), p, "inverse relation size differs");
      for (auto [h, t] : r0) require(r1.count({t, h}) == 1, p, "missing inverse triple");
      break;
    }
    case SyntheticPattern::OneToN:
    case SyntheticPattern::NToOne: {
      const bool one_to_n = p == SyntheticPattern::OneToN;
      detail::check_fanout(r0, one_to_n ? 1 : SIZE_MAX, one_to_n ? SIZE_MAX : 1, p);
      std::map<std::int32_t, std::size_t> fan;
      for (auto [h, t] : r0) ++fan[one_to_n ? h : t];
      for (auto& [e, n] : fan) require(n > 1, p, "hub with a single member");
      const auto r1 = detail::pairs_of(s, 1);
      for (auto [h, t] : r0) require(r1.count({t, h}) == 1, p, "missing inverse membership triple");
      break;
    }
    case SyntheticPattern::NToN: {
      // Complete bipartite blocks: heads sharing one tail share all tails.
      std::map<std::int32_t, std::set<std::int32_t>> tails_of, heads_of;
      for (auto [h, t] : r0) {
        tails_of[h].insert(t);
        heads_of[t].insert(h);
      }
      for (auto& [h, ts] : tails_of) {
        require(ts.size() > 1, p, "head with a single tail");
        for (auto t : ts) require(tails_of[*heads_of[t].begin()] == ts, p, "block not complete");
      }
      for (auto& [t, hs] : heads_of) require(hs.size() > 1, p, "tail with a single head");
      break;
    }
    case SyntheticPattern::Transitive: {
      // r0 is exactly r1 followed by r2.
      require(detail::compose(detail::pairs_of(s, 1), detail::pairs_of(s, 2)) == r0, p,
              "composition mismatch");
      break;
    }
    case SyntheticPattern::SubRelation: {
      const auto r1 = detail::pairs_of(s, 1);
      for (auto [h, t] : r1) require(r0.count({h, t}) == 1, p, "sub-relation triple not implied");
      require(r0.size() > r1.size(), p, "super-relation adds nothing");
      break;
    }
    case SyntheticPattern::NonCommutative: {
      const auto a = detail::pairs_of(s, 1), b = detail::pairs_of(s, 2);
      require(detail::compose(a, b) == r0, p, "r1 then r2 mismatch");
      require(detail::compose(b, a) == detail::pairs_of(s, 3), p, "r2 then r1 mismatch");
      require(r0 != detail::pairs_of(s, 3), p, "compositions coincide");
      break;
    }
  }
}

namespace detail {

struct SyntheticBuilder {
  TripleStore store;
  std::vector<Triple> all;
  // Triples that may be held out, each with the triples that must then stay
  // in training so the held-out one stays inferable.
  std::vector<std::pair<Triple, std::vector<Triple>>> eligible;

  std::int32_t entity(const std::string& name) {
    store.entities.add(name);
    return *store.entities.find(name);
  }
  std::int32_t relation(const std::string& name) {
    store.relations.add(name);
    return *store.relations.find(name);
  }
  void add(std::int32_t h, std::int32_t r, std::int32_t t) { all.push_back({h, r, t}); }
  void allow(Triple t, std::vector<Triple> keep = {}) { eligible.emplace_back(t, std::move(keep)); }

  TripleStore finish(double holdout, std::mt19937_64& rng) {
    std::sort(all.begin(), all.end());
    all.erase(std::unique(all.begin(), all.end()), all.end());
    std::set<Triple> pinned, valid, test;
    std::shuffle(eligible.begin(), eligible.end(), rng);
    const auto quota = static_cast<std::size_t>(holdout * static_cast<double>(eligible.size()));
    for (auto& [t, keep] : eligible) {
      if (valid.size() >= quota && test.size() >= quota) break;
      if (pinned.count(t) || valid.count(t) || test.count(t)) continue;
      if (std::any_of(keep.begin(), keep.end(),
                      [&](const Triple& k) { return valid.count(k) || test.count(k); }))
        continue;
      (test.size() < quota ? test : valid).insert(t);
      pinned.insert(keep.begin(), keep.end());
    }
    for (const auto& t : all) {
      if (test.count(t))
        store.test.push_back(t);
      else if (valid.count(t))
        store.valid.push_back(t);
      else
        store.train.push_back(t);
    }
    return std::move(store);
  }
};

inline void require_size(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument("infeasible synthetic size: " + what);
}

/// fan_out distinct random successors of each entity among `pool`, never itself.
inline std::vector<std::pair<std::int32_t, std::int32_t>> random_edges(
    const std::vector<std::int32_t>& ids, std::size_t fan_out, std::mt19937_64& rng,
    bool forward_only) {
  std::vector<std::pair<std::int32_t, std::int32_t>> edges;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    std::vector<std::int32_t> pool;
    for (std::size_t j = forward_only ? i + 1 : 0; j < ids.size(); ++j)
      if (j != i) pool.push_back(ids[j]);
    std::shuffle(pool.begin(), pool.end(), rng);
    for (std::size_t k = 0; k < std::min(fan_out, pool.size()); ++k) edges.emplace_back(ids[i], pool[k]);
  }
  return edges;
}

}  // namespace detail

/// Builds and verifies a graph for `pattern`. Throws invalid_argument on
/// sizes the pattern cannot be realized with.
inline TripleStore generate_synthetic_kg(SyntheticPattern pattern, const SyntheticSize& size,
                                         std::uint64_t seed) {
  using detail::require_size;
  require_size(size.holdout >= 0.0 && size.holdout < 0.5, "holdout must lie in [0, 0.5)");
  require_size(size.fan_out >= 1, "fan_out must be at least 1");
  std::mt19937_64 rng(seed);
  detail::SyntheticBuilder b;
  auto named = [&](const std::string& prefix, std::size_t n) {
    std::vector<std::int32_t> ids;
    for (std::size_t i = 0; i < n; ++i) ids.push_back(b.entity(prefix + std::to_string(i)));
    return ids;
  };
  // Attribute a is has_attr{a} with `values` value entities; the first
  // attribute assigns values in member order, later ones in shuffled order.
  using Attribute = std::pair<std::int32_t, std::vector<std::int32_t>>;
  auto add_attributes = [&](std::size_t values) {
    std::vector<Attribute> out;
    for (std::size_t a = 0; a < size.attributes; ++a) {
      const auto tag = "attr" + std::to_string(a);
      out.emplace_back(b.relation("has_" + tag), named(tag + "_", values));
    }
    return out;
  };
  auto assign_attributes = [&](const std::vector<Attribute>& attrs,
                               const std::vector<std::int32_t>& members, std::size_t offset) {
    std::vector<std::size_t> perm(members.size());
    for (std::size_t a = 0; a < attrs.size(); ++a) {
      std::iota(perm.begin(), perm.end(), std::size_t{0});
      if (a > 0) std::shuffle(perm.begin(), perm.end(), rng);
      for (std::size_t j = 0; j < members.size(); ++j)
        b.add(members[j], attrs[a].first, attrs[a].second[offset + perm[j]]);
    }
  };

  switch (pattern) {
    case SyntheticPattern::Symmetric: {
      require_size(size.entities >= 2 && size.entities % 2 == 0, "symmetric needs an even entity count >= 2");
      require_size(size.fan_out < size.entities, "fan_out must be below the entity count");
      const auto r = b.relation("symmetric_to");
      auto ids = named("e", size.entities);
      std::shuffle(ids.begin(), ids.end(), rng);
      std::set<std::pair<std::int32_t, std::int32_t>> edges;
      for (std::size_t i = 0; i + 1 < ids.size(); i += 2) edges.insert(std::minmax(ids[i], ids[i + 1]));
      if (size.fan_out > 1)
        for (auto [x, y] : detail::random_edges(ids, size.fan_out - 1, rng, false)) edges.insert(std::minmax(x, y));
      for (auto [x, y] : edges) {
        b.add(x, r, y);
        b.add(y, r, x);
        b.allow({x, r, y}, {{y, r, x}});
        b.allow({y, r, x}, {{x, r, y}});
      }
      break;
    }
    case SyntheticPattern::Antisymmetric:
    case SyntheticPattern::SubRelation: {
      require_size(size.entities >= 3, "needs at least 3 entities");
      require_size(size.fan_out < size.entities, "fan_out must be below the entity count");
      const bool sub = pattern == SyntheticPattern::SubRelation;
      const auto r0 = b.relation(sub ? "broader" : "precedes");
      auto ids = named("e", size.entities);
      std::shuffle(ids.begin(), ids.end(), rng);
      const auto edges = detail::random_edges(ids, size.fan_out, rng, !sub);
      if (!sub) {
        for (auto [x, y] : edges) {
          b.add(x, r0, y);
          b.allow({x, r0, y});
        }
        break;
      }
      // r1 is a random half of r0; held-out r0 triples keep their r1 twin.
      const auto r1 = b.relation("narrower");
      for (std::size_t i = 0; i < edges.size(); ++i) {
        auto [x, y] = edges[i];
        b.add(x, r0, y);
        if (i % 2 == 0) {
          b.add(x, r1, y);
          b.allow({x, r0, y}, {{x, r1, y}});
        }
      }
      break;
    }
    case SyntheticPattern::Inverse: {
      require_size(size.entities >= 3, "needs at least 3 entities");
      require_size(size.fan_out < size.entities, "fan_out must be below the entity count");
      const auto r0 = b.relation("forward");
      const auto r1 = b.relation("backward");
      const auto ids = named("e", size.entities);
      for (auto [x, y] : detail::random_edges(ids, size.fan_out, rng, false)) {
        b.add(x, r0, y);
        b.add(y, r1, x);
        b.allow({x, r0, y}, {{y, r1, x}});
        b.allow({y, r1, x}, {{x, r0, y}});
      }
      break;
    }
    case SyntheticPattern::OneToN:
    case SyntheticPattern::NToOne: {
      // Hubs own fan_out members; attributes shared across hubs keep a model
      // from simply merging all members of a hub.
      require_size(size.groups >= 2, "needs at least 2 groups");
      require_size(size.fan_out >= 2, "fan_out must be at least 2");
      const bool one_to_n = pattern == SyntheticPattern::OneToN;
      const auto r0 = b.relation(one_to_n ? "has_member" : "member_of");
      const auto r1 = b.relation(one_to_n ? "member_of" : "has_member");
      const auto hubs = named("hub", size.groups);
      const auto attrs = add_attributes(size.fan_out);
      for (std::size_t g = 0; g < size.groups; ++g) {
        std::vector<std::int32_t> members;
        for (std::size_t j = 0; j < size.fan_out; ++j) {
          const auto m = b.entity("member" + std::to_string(g) + "_" + std::to_string(j));
          members.push_back(m);
          const Triple down{hubs[g], one_to_n ? r0 : r1, m}, up{m, one_to_n ? r1 : r0, hubs[g]};
          b.add(down.head, down.relation, down.tail);
          b.add(up.head, up.relation, up.tail);
          b.allow(one_to_n ? down : up, {one_to_n ? up : down});
        }
        assign_attributes(attrs, members, 0);
      }
      break;
    }
    case SyntheticPattern::NToN: {
      require_size(size.groups >= 2, "needs at least 2 groups");
      require_size(size.fan_out >= 2, "fan_out must be at least 2");
      const auto r0 = b.relation("co_occurs");
      // Attributes give block members independent identities, so co_occurs
      // must discard those directions to map a whole block to one point.
      const auto attrs = add_attributes(2 * size.fan_out);
      for (std::size_t g = 0; g < size.groups; ++g) {
        std::vector<std::int32_t> heads, tails;
        for (std::size_t j = 0; j < size.fan_out; ++j) {
          heads.push_back(b.entity("left" + std::to_string(g) + "_" + std::to_string(j)));
          tails.push_back(b.entity("right" + std::to_string(g) + "_" + std::to_string(j)));
        }
        assign_attributes(attrs, heads, 0);
        assign_attributes(attrs, tails, size.fan_out);
        // Hold out at most one triple per head so every block stays connected.
        for (std::size_t i = 0; i < heads.size(); ++i)
          for (std::size_t j = 0; j < tails.size(); ++j) {
            b.add(heads[i], r0, tails[j]);
            std::vector<Triple> keep;
            for (std::size_t k = 0; k < tails.size(); ++k)
              if (k != j) keep.push_back({heads[i], r0, tails[k]});
            for (std::size_t k = 0; k < heads.size(); ++k)
              if (k != i) keep.push_back({heads[k], r0, tails[j]});
            b.allow({heads[i], r0, tails[j]}, std::move(keep));
          }
      }
      break;
    }
    case SyntheticPattern::Transitive: {
      require_size(size.entities >= 2, "needs at least 2 entities per layer");
      const auto r0 = b.relation("grand_link");
      const auto r1 = b.relation("link_a");
      const auto r2 = b.relation("link_b");
      const auto l0 = named("a", size.entities), l1 = named("b", size.entities), l2 = named("c", size.entities);
      auto p1 = l1, p2 = l2;
      std::shuffle(p1.begin(), p1.end(), rng);
      std::shuffle(p2.begin(), p2.end(), rng);
      for (std::size_t i = 0; i < size.entities; ++i) {
        b.add(l0[i], r1, p1[i]);
        b.add(p1[i], r2, p2[i]);
        b.add(l0[i], r0, p2[i]);
        b.allow({l0[i], r0, p2[i]}, {{l0[i], r1, p1[i]}, {p1[i], r2, p2[i]}});
      }
      break;
    }
    case SyntheticPattern::NonCommutative: {
      // Generations g0 -> g1 -> g2; each child in g1, g2 has one father (r1)
      // and one mother (r2) in the previous generation.
      require_size(size.entities >= 4 && size.entities % 2 == 0,
                   "needs an even count >= 4 per generation");
      const auto r0 = b.relation("father_then_mother");
      const auto r1 = b.relation("father_of");
      const auto r2 = b.relation("mother_of");
      const auto r3 = b.relation("mother_then_father");
      std::vector<std::vector<std::int32_t>> gen;
      for (int g = 0; g < 3; ++g) gen.push_back(named("g" + std::to_string(g) + "_", size.entities));
      const std::size_t half = size.entities / 2;
      std::multimap<std::int32_t, std::int32_t> father, mother;  // parent -> child
      std::uniform_int_distribution<std::size_t> pick(0, half - 1);
      for (int g = 1; g < 3; ++g)
        for (auto child : gen[static_cast<std::size_t>(g)]) {
          const auto f = gen[static_cast<std::size_t>(g - 1)][pick(rng)];
          const auto m = gen[static_cast<std::size_t>(g - 1)][half + pick(rng)];
          b.add(f, r1, child);
          b.add(m, r2, child);
          father.emplace(f, child);
          mother.emplace(m, child);
        }
      auto chain = [&](const std::multimap<std::int32_t, std::int32_t>& first,
                       const std::multimap<std::int32_t, std::int32_t>& second, std::int32_t rel,
                       std::int32_t r_first, std::int32_t r_second) {
        for (auto [a, mid] : first) {
          auto [lo, hi] = second.equal_range(mid);
          for (auto it = lo; it != hi; ++it) {
            b.add(a, rel, it->second);
            b.allow({a, rel, it->second}, {{a, r_first, mid}, {mid, r_second, it->second}});
          }
        }
      };
      chain(father, mother, r0, r1, r2);
      chain(mother, father, r3, r2, r1);
      break;
    }
  }

  TripleStore store = b.finish(size.holdout, rng);
  verify_pattern(store, pattern);
  return store;
}

}  // namespace compound_kge

#endif  // COMPOUND_KGE_SYNTHETIC_HPP
