#ifndef COMPOUND_KGE_CHECKPOINT_HPP
#define COMPOUND_KGE_CHECKPOINT_HPP

// Binary checkpoint container:
//
//   bytes 0..7   magic "CMPE0001"
//   u64 LE       header length L
//   L bytes      UTF-8 JSON header
//   f32 LE ...   arrays, in the order of header["arrays"]
//
// Parameters live as doubles in memory and are stored as floats, so loading
// yields the float-rounded model and a second save reproduces the file.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "compound_kge/model.hpp"

namespace compound_kge {

class checkpoint_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

inline constexpr char kCheckpointMagic[] = "CMPE0001";
inline constexpr int kCheckpointFormatVersion = 1;

struct Checkpoint {
  Model model;
  std::size_t step = 0;
  std::string dataset_hash;
  std::vector<std::string> entity_names;
  std::vector<std::string> relation_names;
  std::string rng_state;           // textual std::mt19937_64 state
  nlohmann::ordered_json config;   // resolved run config, null when absent
};

inline std::string rng_state_string(const Rng& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

inline Rng rng_from_state(const std::string& s) {
  Rng rng;
  std::istringstream is(s);
  is >> rng;
  if (!is) throw checkpoint_error("unreadable RNG state in checkpoint");
  return rng;
}

namespace detail {

struct ArraySlot {
  std::string name;
  std::size_t count;
};

/// Names and sizes of all stored arrays, in file order.
inline std::vector<ArraySlot> checkpoint_layout(std::size_t entities, std::size_t relations,
                                                std::size_t dim) {
  std::vector<ArraySlot> out{{"entity", entities * dim}};
  for (const char* side : {"head", "tail"}) {
    out.push_back({std::string(side) + "_translation", relations * dim});
    out.push_back({std::string(side) + "_angles", relations * (dim / 2)});
    out.push_back({std::string(side) + "_scale", relations * dim});
  }
  return out;
}

template <typename R>  // RelationParams, possibly const
auto& relation_field(R& r, std::size_t k) {
  auto& p = k < 3 ? r.head : r.tail;
  switch (k % 3) {
    case 0: return p.translation;
    case 1: return p.angles;
    default: return p.scale;
  }
}

inline void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

inline bool get_u64(std::istream& is, std::uint64_t& v) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) return false;
  v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return true;
}

inline void put_floats(std::ostream& os, const double* src, std::size_t n) {
  std::vector<char> buf(n * 4);
  for (std::size_t i = 0; i < n; ++i) {
    auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(src[i]));
    for (int k = 0; k < 4; ++k) buf[i * 4 + static_cast<std::size_t>(k)] = static_cast<char>(bits >> (8 * k));
  }
  os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

inline void get_floats(std::istream& is, double* dst, std::size_t n, const std::string& name) {
  std::vector<unsigned char> buf(n * 4);
  is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  const auto got = static_cast<std::size_t>(is.gcount());
  if (got != buf.size())
    throw checkpoint_error("truncated checkpoint: array '" + name + "' expects " +
                           std::to_string(n) + " floats, found " + std::to_string(got / 4));
  for (std::size_t i = 0; i < n; ++i) {
    std::uint32_t bits = 0;
    for (int k = 0; k < 4; ++k) bits |= static_cast<std::uint32_t>(buf[i * 4 + static_cast<std::size_t>(k)]) << (8 * k);
    dst[i] = static_cast<double>(std::bit_cast<float>(bits));
  }
}

}  // namespace detail

inline nlohmann::ordered_json spec_json(const CompoundSpec& s) {
  nlohmann::ordered_json j;
  j["variant"] = to_string(s.variant);
  j["head_order"] = s.head_chain.to_string();
  j["tail_order"] = s.tail_chain.to_string();
  j["dim"] = s.dim;
  j["norm"] = to_string(s.norm);
  j["shared_rotation"] = s.shared_rotation;
  return j;
}

inline CompoundSpec spec_from_json(const nlohmann::json& j) {
  CompoundSpec s;
  s.variant = parse_variant(j.at("variant").get<std::string>());
  s.head_chain = OperatorChain::parse(j.at("head_order").get<std::string>());
  s.tail_chain = OperatorChain::parse(j.at("tail_order").get<std::string>());
  s.dim = j.at("dim").get<std::size_t>();
  s.norm = parse_norm(j.at("norm").get<std::string>());
  s.shared_rotation = j.at("shared_rotation").get<bool>();
  s.validate();
  return s;
}

inline nlohmann::ordered_json checkpoint_header(const Checkpoint& c) {
  const Model& m = c.model;
  nlohmann::ordered_json j;
  j["format_version"] = kCheckpointFormatVersion;
  j["preset"] = to_string(m.preset);
  j["spec"] = spec_json(m.spec);
  j["entity_count"] = m.entity_count();
  j["relation_count"] = m.relation_count();
  j["dim"] = m.spec.dim;
  j["step"] = c.step;
  j["dataset_hash"] = c.dataset_hash;
  j["rng_state"] = c.rng_state;
  j["config"] = c.config;
  j["entity_names"] = c.entity_names;
  j["relation_names"] = c.relation_names;
  auto& arrays = j["arrays"] = nlohmann::ordered_json::array();
  for (const auto& slot : detail::checkpoint_layout(m.entity_count(), m.relation_count(), m.spec.dim))
    arrays.push_back({{"name", slot.name}, {"dtype", "f32le"}, {"count", slot.count}});
  return j;
}

inline void write_checkpoint(std::ostream& os, const Checkpoint& c) {
  const Model& m = c.model;
  if (!c.entity_names.empty() && c.entity_names.size() != m.entity_count())
    throw std::invalid_argument("entity name count does not match the model");
  if (!c.relation_names.empty() && c.relation_names.size() != m.relation_count())
    throw std::invalid_argument("relation name count does not match the model");
  const std::string header = checkpoint_header(c).dump();
  os.write(kCheckpointMagic, 8);
  detail::put_u64(os, header.size());
  os.write(header.data(), static_cast<std::streamsize>(header.size()));
  detail::put_floats(os, m.entities.data().data(), m.entities.data().size());
  for (std::size_t k = 0; k < 6; ++k)
    for (const auto& r : m.relations) {
      auto& field = detail::relation_field(r, k);
      detail::put_floats(os, field.data(), field.size());
    }
}

inline void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw checkpoint_error("cannot write checkpoint " + path.string());
  write_checkpoint(out, c);
  if (!out) throw checkpoint_error("failed writing checkpoint " + path.string());
}

/// Reads magic, length prefix and JSON header, leaving `is` at the arrays.
inline nlohmann::json read_checkpoint_header(std::istream& is) {
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kCheckpointMagic, 4) != 0)
    throw checkpoint_error("not a checkpoint: bad magic");
  if (std::memcmp(magic, kCheckpointMagic, 8) != 0)
    throw checkpoint_error("unsupported checkpoint version '" + std::string(magic + 4, 4) +
                           "' (expected 0001)");
  std::uint64_t len = 0;
  if (!detail::get_u64(is, len)) throw checkpoint_error("truncated checkpoint: header length");
  if (len > (std::uint64_t{1} << 34)) throw checkpoint_error("implausible checkpoint header length");
  std::string text(static_cast<std::size_t>(len), '\0');
  if (!is.read(text.data(), static_cast<std::streamsize>(len)))
    throw checkpoint_error("truncated checkpoint: header");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw checkpoint_error(std::string("corrupt checkpoint header: ") + e.what());
  }
  if (!j.is_object() || j.value("format_version", -1) != kCheckpointFormatVersion)
    throw checkpoint_error("unsupported checkpoint format_version " +
                           (j.is_object() && j.contains("format_version") ? j["format_version"].dump()
                                                                          : std::string("(missing)")));
  return j;
}

inline nlohmann::json read_checkpoint_header(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw checkpoint_error("cannot open checkpoint " + path.string());
  return read_checkpoint_header(in);
}

inline Checkpoint read_checkpoint(std::istream& is) {
  const auto j = read_checkpoint_header(is);
  Checkpoint c;
  try {
    c.model.spec = spec_from_json(j.at("spec"));
    c.model.preset = parse_preset(j.at("preset").get<std::string>());
    c.step = j.at("step").get<std::size_t>();
    c.dataset_hash = j.at("dataset_hash").get<std::string>();
    c.rng_state = j.at("rng_state").get<std::string>();
    c.entity_names = j.at("entity_names").get<std::vector<std::string>>();
    c.relation_names = j.at("relation_names").get<std::vector<std::string>>();
    c.config = j.at("config");
  } catch (const checkpoint_error&) {
    throw;
  } catch (const std::exception& e) {
    throw checkpoint_error(std::string("bad checkpoint header: ") + e.what());
  }
  const std::size_t n = j.at("entity_count").get<std::size_t>();
  const std::size_t m = j.at("relation_count").get<std::size_t>();
  const std::size_t d = c.model.spec.dim;
  if (j.at("dim").get<std::size_t>() != d) throw checkpoint_error("checkpoint dim disagrees with spec");

  const auto layout = detail::checkpoint_layout(n, m, d);
  const auto& arrays = j.at("arrays");
  if (!arrays.is_array() || arrays.size() != layout.size())
    throw checkpoint_error("checkpoint array list does not match the expected layout");
  for (std::size_t i = 0; i < layout.size(); ++i)
    if (arrays[i].at("name") != layout[i].name || arrays[i].at("count") != layout[i].count)
      throw checkpoint_error("checkpoint array '" + arrays[i].value("name", std::string("?")) +
                             "' has unexpected name or size");

  c.model.entities = EntityTable(n, d);
  detail::get_floats(is, c.model.entities.data().data(), n * d, "entity");
  c.model.relations.assign(m, RelationParams::zeros(d, c.model.spec.rotation_is_shared()));
  for (std::size_t k = 0; k < 6; ++k) {
    std::vector<double> flat(layout[k + 1].count);
    detail::get_floats(is, flat.data(), flat.size(), layout[k + 1].name);
    const std::size_t per = m ? flat.size() / m : 0;
    for (std::size_t r = 0; r < m; ++r) {
      auto& field = detail::relation_field(c.model.relations[r], k);
      field.assign(flat.begin() + static_cast<std::ptrdiff_t>(r * per),
                   flat.begin() + static_cast<std::ptrdiff_t>((r + 1) * per));
    }
  }
  if (!c.entity_names.empty() && c.entity_names.size() != n)
    throw checkpoint_error("checkpoint entity name count disagrees with entity_count");
  if (!c.relation_names.empty() && c.relation_names.size() != m)
    throw checkpoint_error("checkpoint relation name count disagrees with relation_count");
  return c;
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw checkpoint_error("cannot open checkpoint " + path.string());
  return read_checkpoint(in);
}

/// Checkpoint of `model` trained on `store`.
inline Checkpoint make_checkpoint(const Model& model, const TripleStore& store, std::size_t step,
                                  const Rng& rng, nlohmann::ordered_json config = nullptr) {
  Checkpoint c;
  c.model = model;
  c.step = step;
  c.dataset_hash = store.dictionary_hash();
  c.entity_names = store.entities.names();
  c.relation_names = store.relations.names();
  c.rng_state = rng_state_string(rng);
  c.config = std::move(config);
  return c;
}

}  // namespace compound_kge

#endif  // COMPOUND_KGE_CHECKPOINT_HPP
