// Copyright 2026 The pclft Authors
// SPDX-License-Identifier: Apache-2.0

#include "pclft/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <nlohmann/json.hpp>
#include <sstream>

#include "pclft/error.hpp"

namespace pclft {

static_assert(std::endian::native == std::endian::little,
              "checkpoint payloads are written in host order");

namespace {

using nlohmann::json;

constexpr char kMagic[8] = {'P', 'C', 'L', 'F', 'T', 'C', 'K', 'P'};

GroupRole role_from(const std::string& s) {
  for (GroupRole r : {GroupRole::embeddings_lower, GroupRole::middle, GroupRole::upper,
                      GroupRole::head}) {
    if (to_string(r) == s) return r;
  }
  throw ParseError("checkpoint: unknown group role '" + s + "'", 0);
}

json header_of(const Checkpoint& c) {
  json h;
  h["subtask"] = static_cast<int>(c.subtask);
  h["encoder"] = {{"vocab_size", c.encoder.vocab_size}, {"d_model", c.encoder.d_model},
                  {"n_heads", c.encoder.n_heads},       {"n_layers", c.encoder.n_layers},
                  {"d_ff", c.encoder.d_ff},             {"max_len", c.encoder.max_len},
                  {"dropout_rate", c.encoder.dropout_rate}, {"pad_id", c.encoder.pad_id}};
  h["config"] = c.config;
  h["names"] = c.names;
  json sizes = json::array();
  for (const auto& v : c.values) sizes.push_back(v.size());
  h["sizes"] = sizes;
  h["rng_state"] = c.rng_state;
  if (c.optimizer) {
    const OptimizerState& o = *c.optimizer;
    json groups = json::array();
    for (const ParamGroup& g : o.groups) {
      groups.push_back({{"role", std::string(to_string(g.role))},
                        {"members", g.members},
                        {"base_lr", g.base_lr},
                        {"weight_decay", g.weight_decay}});
    }
    h["optimizer"] = {{"groups", groups},
                      {"steps", o.steps},
                      {"beta1", o.options.beta1},
                      {"beta2", o.options.beta2},
                      {"eps", o.options.eps}};
  } else {
    h["optimizer"] = nullptr;
  }
  return h;
}

void put_u64(std::ostream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_doubles(std::ostream& out, const std::vector<double>& v) {
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
}

class Reader {
 public:
  explicit Reader(std::string bytes) : bytes_(std::move(bytes)) {}

  void take(void* dst, std::size_t n) {
    if (pos_ + n > bytes_.size()) throw ParseError("checkpoint: truncated payload", 0);
    std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }
  std::uint64_t u64() {
    std::uint64_t v;
    take(&v, sizeof v);
    return v;
  }
  std::vector<double> doubles(std::size_t n) {
    std::vector<double> v(n);
    take(v.data(), n * sizeof(double));
    return v;
  }
  std::string text(std::size_t n) {
    std::string s(n, '\0');
    take(s.data(), n);
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::string bytes_;
  std::size_t pos_ = 0;
};

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string(), 0);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

std::string rng_to_string(const std::mt19937_64& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

std::mt19937_64 rng_from_string(const std::string& state) {
  std::mt19937_64 rng;
  std::istringstream is(state);
  is >> rng;
  if (!is) throw ParseError("malformed RNG state", 0);
  return rng;
}

Checkpoint Checkpoint::capture(const Classifier& model, const AdamW* optimizer,
                               const std::string& rng_state,
                               std::map<std::string, std::string> config) {
  Checkpoint c;
  c.subtask = model.subtask();
  c.encoder = model.config();
  c.config = std::move(config);
  for (const NamedParameter& p : model.parameters()) c.names.push_back(p.name);
  c.values = model.snapshot_values();
  c.rng_state = rng_state;
  if (optimizer != nullptr) {
    c.optimizer = OptimizerState{optimizer->groups(), optimizer->options(), optimizer->steps(),
                                 optimizer->moments()};
  }
  return c;
}

Classifier Checkpoint::restore_model() const {
  std::mt19937_64 scratch(0);
  Classifier model(subtask, encoder, scratch);
  const ParameterList params = model.parameters();
  if (params.size() != names.size()) {
    throw ParseError("checkpoint: parameter count does not match the encoder shape", 0);
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].name != names[i]) {
      throw ParseError("checkpoint: expected parameter " + params[i].name + ", found " + names[i],
                       0);
    }
  }
  model.load_values(values);
  return model;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c) {
  if (c.names.size() != c.values.size()) throw ContractError("checkpoint: names/values mismatch");
  if (c.optimizer && c.optimizer->moments.size() != c.values.size()) {
    throw ContractError("checkpoint: moments/values mismatch");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write checkpoint " + path.string());
  const std::string header = header_of(c).dump();
  out.write(kMagic, sizeof kMagic);
  put_u64(out, kCheckpointVersion);
  put_u64(out, header.size());
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  for (std::size_t i = 0; i < c.values.size(); ++i) {
    put_doubles(out, c.values[i]);
    if (c.optimizer) {
      put_doubles(out, c.optimizer->moments[i].first);
      put_doubles(out, c.optimizer->moments[i].second);
    }
  }
  if (!out) throw Error("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  Reader r(read_file(path));
  char magic[sizeof kMagic];
  r.take(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw ParseError(path.string() + " is not a checkpoint", 0);
  }
  const std::uint64_t version = r.u64();
  if (version != kCheckpointVersion) {
    throw ParseError("unsupported checkpoint version " + std::to_string(version), 0);
  }
  json h;
  try {
    h = json::parse(r.text(r.u64()));
  } catch (const json::exception& e) {
    throw ParseError(std::string("checkpoint header: ") + e.what(), 0);
  }

  Checkpoint c;
  try {
    c.subtask = h.at("subtask").get<int>() == 1 ? Subtask::binary : Subtask::multilabel;
    const json& e = h.at("encoder");
    c.encoder.vocab_size = e.at("vocab_size");
    c.encoder.d_model = e.at("d_model");
    c.encoder.n_heads = e.at("n_heads");
    c.encoder.n_layers = e.at("n_layers");
    c.encoder.d_ff = e.at("d_ff");
    c.encoder.max_len = e.at("max_len");
    c.encoder.dropout_rate = e.at("dropout_rate");
    c.encoder.pad_id = e.at("pad_id");
    c.config = h.at("config").get<std::map<std::string, std::string>>();
    c.names = h.at("names").get<std::vector<std::string>>();
    c.rng_state = h.at("rng_state").get<std::string>();
    const auto sizes = h.at("sizes").get<std::vector<std::size_t>>();
    if (sizes.size() != c.names.size()) throw ParseError("checkpoint: sizes/names mismatch", 0);

    const json& o = h.at("optimizer");
    if (!o.is_null()) {
      OptimizerState state;
      state.steps = o.at("steps");
      state.options.beta1 = o.at("beta1");
      state.options.beta2 = o.at("beta2");
      state.options.eps = o.at("eps");
      for (const json& g : o.at("groups")) {
        state.groups.push_back(ParamGroup{role_from(g.at("role")),
                                          g.at("members").get<std::vector<std::string>>(),
                                          g.at("base_lr"), g.at("weight_decay")});
      }
      c.optimizer = std::move(state);
    }
    for (std::size_t n : sizes) {
      c.values.push_back(r.doubles(n));
      if (c.optimizer) {
        AdamW::Moments m;
        m.first = r.doubles(n);
        m.second = r.doubles(n);
        c.optimizer->moments.push_back(std::move(m));
      }
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("checkpoint header: ") + e.what(), 0);
  }
  if (!r.done()) throw ParseError("checkpoint: trailing bytes", 0);
  return c;
}

std::string file_hash(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = kHex[h & 0xF];
  return out;
}

}  // namespace pclft
