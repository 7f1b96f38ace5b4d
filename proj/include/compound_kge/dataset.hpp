#ifndef COMPOUND_KGE_DATASET_HPP
#define COMPOUND_KGE_DATASET_HPP

// Triple files, id dictionaries, filter index and relation categorization.
//
// Directory layout: train.txt, valid.txt, test.txt with `head\trelation\ttail`
// lines, and optional entities.dict / relations.dict with `id\tname` lines.

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace compound_kge {

class dataset_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class lookup_error : public std::out_of_range {
public:
  using std::out_of_range::out_of_range;
};

struct Triple {
  std::int32_t head = 0;
  std::int32_t relation = 0;
  std::int32_t tail = 0;

  friend auto operator<=>(const Triple&, const Triple&) = default;
};

/// Bijective name <-> id map with ids 0..size-1.
class Dictionary {
public:
  std::int32_t add(const std::string& name) {
    auto [it, inserted] = ids_.try_emplace(name, static_cast<std::int32_t>(names_.size()));
    if (inserted) names_.push_back(name);
    return it->second;
  }

  std::optional<std::int32_t> find(const std::string& name) const {
    auto it = ids_.find(name);
    if (it == ids_.end()) return std::nullopt;
    return it->second;
  }

  std::int32_t id_of(const std::string& name) const {
    if (auto id = find(name)) return *id;
    throw lookup_error("unknown name '" + name + "'");
  }

  const std::string& name(std::int32_t id) const { return names_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }

private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::int32_t> ids_;
};

/// 64-bit FNV-1a over the names in id order, one '\n' after each.
inline std::uint64_t dictionary_hash(const Dictionary& d, std::uint64_t h = 14695981039346656037ull) {
  for (const auto& n : d.names()) {
    for (unsigned char c : n) {
      h ^= c;
      h *= 1099511628211ull;
    }
    h ^= static_cast<unsigned char>('\n');
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 0xf];
  return s;
}

enum class Split { Train, Valid, Test };

inline std::string to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Valid: return "valid";
    case Split::Test: return "test";
  }
  return "?";
}

struct TripleStore {
  Dictionary entities;
  Dictionary relations;
  std::vector<Triple> train;
  std::vector<Triple> valid;
  std::vector<Triple> test;

  std::size_t entity_count() const { return entities.size(); }
  std::size_t relation_count() const { return relations.size(); }

  const std::vector<Triple>& split(Split s) const {
    switch (s) {
      case Split::Train: return train;
      case Split::Valid: return valid;
      case Split::Test: return test;
    }
    return train;
  }

  /// Content hash of both dictionaries; identifies the id assignment.
  std::string dictionary_hash() const {
    return hex64(compound_kge::dictionary_hash(relations, compound_kge::dictionary_hash(entities)));
  }
};

struct LoadReport {
  std::size_t unseen_entities = 0;   // first seen in valid/test
  std::size_t unseen_relations = 0;  // first seen in valid/test
  std::size_t overlapping_triples = 0;
  bool used_dictionaries = false;
  std::vector<std::string> warnings;
};

namespace detail {

inline std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find('\t', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

inline void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

inline Dictionary read_dictionary(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw dataset_error("cannot open " + path.string());
  std::vector<std::pair<std::int64_t, std::string>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    strip_cr(line);
    if (line.empty()) continue;
    auto fields = split_tabs(line);
    if (fields.size() != 2)
      throw dataset_error(path.string() + ":" + std::to_string(lineno) +
                          ": expected `id<TAB>name`, got " + std::to_string(fields.size()) +
                          " fields");
    std::int64_t id = 0;
    try {
      std::size_t used = 0;
      id = std::stoll(fields[0], &used);
      if (used != fields[0].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw dataset_error(path.string() + ":" + std::to_string(lineno) + ": bad id '" +
                          fields[0] + "'");
    }
    rows.emplace_back(id, fields[1]);
  }
  std::sort(rows.begin(), rows.end());
  Dictionary d;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].first != static_cast<std::int64_t>(i))
      throw dataset_error(path.string() + ": ids must be exactly 0.." +
                          std::to_string(rows.size() - 1));
    if (d.add(rows[i].second) != static_cast<std::int32_t>(i))
      throw dataset_error(path.string() + ": duplicate name '" + rows[i].second + "'");
  }
  return d;
}

}  // namespace detail

/// Reads `train.txt`/`valid.txt`/`test.txt` from `dir`.
/// Without dictionary files, ids follow first appearance over train, valid, test.
inline TripleStore load_dataset(const std::filesystem::path& dir, LoadReport* report = nullptr) {
  namespace fs = std::filesystem;
  LoadReport local;
  LoadReport& rep = report ? *report : local;
  rep = {};

  if (!fs::is_directory(dir)) throw dataset_error("not a dataset directory: " + dir.string());

  TripleStore store;
  const bool fixed_entities = fs::exists(dir / "entities.dict");
  const bool fixed_relations = fs::exists(dir / "relations.dict");
  if (fixed_entities) store.entities = detail::read_dictionary(dir / "entities.dict");
  if (fixed_relations) store.relations = detail::read_dictionary(dir / "relations.dict");
  rep.used_dictionaries = fixed_entities || fixed_relations;

  auto read_split = [&](const char* file, std::vector<Triple>& out, bool is_train) {
    const fs::path path = dir / file;
    std::ifstream in(path);
    if (!in) throw dataset_error("cannot open " + path.string());
    std::string line;
    std::size_t lineno = 0;
    auto resolve = [&](Dictionary& dict, bool fixed, const std::string& name, std::size_t& unseen,
                       const char* kind) -> std::int32_t {
      if (fixed) {
        if (auto id = dict.find(name)) return *id;
        throw dataset_error(path.string() + ":" + std::to_string(lineno) + ": " + kind + " '" +
                            name + "' missing from dictionary");
      }
      const std::size_t before = dict.size();
      const auto id = dict.add(name);
      if (!is_train && dict.size() > before) ++unseen;
      return id;
    };
    while (std::getline(in, line)) {
      ++lineno;
      detail::strip_cr(line);
      if (line.empty()) continue;
      auto fields = detail::split_tabs(line);
      if (fields.size() != 3)
        throw dataset_error(path.string() + ":" + std::to_string(lineno) +
                            ": expected 3 tab-separated fields, got " +
                            std::to_string(fields.size()));
      Triple t;
      t.head = resolve(store.entities, fixed_entities, fields[0], rep.unseen_entities, "entity");
      t.relation =
          resolve(store.relations, fixed_relations, fields[1], rep.unseen_relations, "relation");
      t.tail = resolve(store.entities, fixed_entities, fields[2], rep.unseen_entities, "entity");
      out.push_back(t);
    }
  };

  read_split("train.txt", store.train, true);
  if (store.train.empty()) throw dataset_error("invalid dataset: empty train split in " + dir.string());
  read_split("valid.txt", store.valid, false);
  read_split("test.txt", store.test, false);

  if (fixed_entities || fixed_relations) {
    // With fixed ids, "unseen" means absent from training.
    std::vector<char> ent(store.entity_count(), 0), rel(store.relation_count(), 0);
    for (const auto& t : store.train) ent[t.head] = ent[t.tail] = rel[t.relation] = 1;
    std::unordered_set<std::int32_t> ue, ur;
    for (const auto* split : {&store.valid, &store.test})
      for (const auto& t : *split) {
        if (!ent[t.head]) ue.insert(t.head);
        if (!ent[t.tail]) ue.insert(t.tail);
        if (!rel[t.relation]) ur.insert(t.relation);
      }
    rep.unseen_entities = ue.size();
    rep.unseen_relations = ur.size();
  }

  std::set<Triple> seen(store.train.begin(), store.train.end());
  for (const auto* split : {&store.valid, &store.test}) {
    std::set<Triple> here(split->begin(), split->end());
    for (const auto& t : here)
      if (!seen.insert(t).second) ++rep.overlapping_triples;
  }

  if (rep.unseen_entities)
    rep.warnings.push_back(std::to_string(rep.unseen_entities) +
                           " entities appear only in valid/test");
  if (rep.unseen_relations)
    rep.warnings.push_back(std::to_string(rep.unseen_relations) +
                           " relations appear only in valid/test");
  if (rep.overlapping_triples)
    rep.warnings.push_back(std::to_string(rep.overlapping_triples) +
                           " triples occur in more than one split");
  return store;
}

inline void write_dictionary(const std::filesystem::path& path, const Dictionary& d) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw dataset_error("cannot write " + path.string());
  for (std::size_t i = 0; i < d.size(); ++i) out << i << '\t' << d.names()[i] << '\n';
}

inline void write_triples(const std::filesystem::path& path, const TripleStore& s,
                          const std::vector<Triple>& triples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw dataset_error("cannot write " + path.string());
  for (const auto& t : triples)
    out << s.entities.name(t.head) << '\t' << s.relations.name(t.relation) << '\t'
        << s.entities.name(t.tail) << '\n';
}

/// Writes the store in the on-disk layout, dictionaries included.
inline void save_dataset(const std::filesystem::path& dir, const TripleStore& s) {
  std::filesystem::create_directories(dir);
  write_triples(dir / "train.txt", s, s.train);
  write_triples(dir / "valid.txt", s, s.valid);
  write_triples(dir / "test.txt", s, s.test);
  write_dictionary(dir / "entities.dict", s.entities);
  write_dictionary(dir / "relations.dict", s.relations);
}

// ---------------------------------------------------------------------------

/// Known-true partners over train, valid and test.
class FilterIndex {
public:
  FilterIndex() = default;

  explicit FilterIndex(const TripleStore& store) {
    for (const auto* split : {&store.train, &store.valid, &store.test})
      for (const auto& t : *split) add(t);
    finalize();
  }

  void add(const Triple& t) {
    tails_[key(t.head, t.relation)].push_back(t.tail);
    heads_[key(t.relation, t.tail)].push_back(t.head);
  }

  void finalize() {
    for (auto* m : {&tails_, &heads_})
      for (auto& [k, v] : *m) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
      }
  }

  std::span<const std::int32_t> true_tails(std::int32_t head, std::int32_t relation) const {
    return lookup(tails_, key(head, relation));
  }

  std::span<const std::int32_t> true_heads(std::int32_t relation, std::int32_t tail) const {
    return lookup(heads_, key(relation, tail));
  }

private:
  using Map = std::unordered_map<std::uint64_t, std::vector<std::int32_t>>;

  static std::uint64_t key(std::int32_t a, std::int32_t b) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
           static_cast<std::uint32_t>(b);
  }

  static std::span<const std::int32_t> lookup(const Map& m, std::uint64_t k) {
    auto it = m.find(k);
    if (it == m.end()) return {};
    return it->second;
  }

  Map tails_;
  Map heads_;
};

inline FilterIndex build_filter_index(const TripleStore& store) { return FilterIndex(store); }

// ---------------------------------------------------------------------------

enum class RelationCategory { OneToOne = 0, OneToN = 1, NToOne = 2, NToN = 3 };

inline constexpr std::array<RelationCategory, 4> kAllCategories = {
    RelationCategory::OneToOne, RelationCategory::OneToN, RelationCategory::NToOne,
    RelationCategory::NToN};

inline std::string to_string(RelationCategory c) {
  switch (c) {
    case RelationCategory::OneToOne: return "1-to-1";
    case RelationCategory::OneToN: return "1-to-N";
    case RelationCategory::NToOne: return "N-to-1";
    case RelationCategory::NToN: return "N-to-N";
  }
  return "?";
}

inline RelationCategory classify(double hpt, double tph, double eta) {
  const bool many_heads = hpt >= eta;
  const bool many_tails = tph >= eta;
  if (!many_heads && !many_tails) return RelationCategory::OneToOne;
  if (!many_heads) return RelationCategory::OneToN;
  if (!many_tails) return RelationCategory::NToOne;
  return RelationCategory::NToN;
}

struct RelationStats {
  double hpt = 0.0;  // mean distinct heads per distinct tail
  double tph = 0.0;  // mean distinct tails per distinct head
  RelationCategory category = RelationCategory::OneToOne;
  std::size_t train_triples = 0;
  bool absent = false;  // no training triples; category forced to 1-to-1
};

inline constexpr double kDefaultEta = 1.5;

/// Per-relation hpt/tph over the training split, counting distinct partners.
inline std::vector<RelationStats> categorize_relations(const TripleStore& store,
                                                       double eta = kDefaultEta) {
  if (!(eta >= 0.0)) throw std::invalid_argument("eta must be non-negative");
  const std::size_t m = store.relation_count();
  std::vector<std::vector<std::pair<std::int32_t, std::int32_t>>> pairs(m);
  for (const auto& t : store.train) pairs[t.relation].emplace_back(t.head, t.tail);

  std::vector<RelationStats> out(m);
  for (std::size_t r = 0; r < m; ++r) {
    auto& p = pairs[r];
    out[r].train_triples = p.size();
    std::sort(p.begin(), p.end());
    p.erase(std::unique(p.begin(), p.end()), p.end());
    if (p.empty()) {
      out[r].absent = true;
      out[r].category = RelationCategory::OneToOne;
      continue;
    }
    std::unordered_set<std::int32_t> heads, tails;
    for (auto [h, t] : p) {
      heads.insert(h);
      tails.insert(t);
    }
    // Each distinct pair contributes one partner to its head and one to its tail.
    out[r].tph = static_cast<double>(p.size()) / static_cast<double>(heads.size());
    out[r].hpt = static_cast<double>(p.size()) / static_cast<double>(tails.size());
    out[r].category = classify(out[r].hpt, out[r].tph, eta);
  }
  return out;
}

/// Fraction of training triples whose relation is not 1-to-1.
inline double complex_triple_fraction(const TripleStore& store,
                                      const std::vector<RelationStats>& stats) {
  std::size_t complex = 0;
  for (const auto& t : store.train)
    if (stats[t.relation].category != RelationCategory::OneToOne) ++complex;
  return store.train.empty() ? 0.0
                             : static_cast<double>(complex) / static_cast<double>(store.train.size());
}

}  // namespace compound_kge

#endif  // COMPOUND_KGE_DATASET_HPP
