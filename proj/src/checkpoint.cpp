// SPDX-License-Identifier: Apache-2.0
#include "advf/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

#include "json.hpp"

#include "advf/error.hpp"
#include "advf/instrument.hpp"

namespace advf {

namespace {

using nlohmann::json;

constexpr char kMagic[4] = {'A', 'V', 'F', '1'};
constexpr std::size_t kHeader = 12;

std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::to_string(s[i]);
  return out + "]";
}

std::size_t numel(const Shape& s) {
  std::size_t n = 1;
  for (auto d : s) n *= d;
  return n;
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(const unsigned char* p) {
  return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 |
         std::uint32_t(p[3]) << 24;
}

std::uint64_t fnv(const std::string& bytes, std::size_t from) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = from; i < bytes.size(); ++i) {
    h ^= static_cast<unsigned char>(bytes[i]);
    h *= 0x100000001b3ULL;
  }
  return h;
}

json config_json(const ModelConfig& c) {
  return json{{"n_layers", c.n_layers}, {"hidden", c.hidden},
              {"n_heads", c.n_heads},   {"ff_dim", c.ff_dim},
              {"vocab", c.vocab},       {"max_len", c.max_len},
              {"n_decoder_layers", c.n_decoder_layers},
              {"adapter_dim", c.adapter_dim},
              {"lora_rank", c.lora_rank},
              {"lora_alpha", c.lora_alpha},
              {"ln_eps", c.ln_eps}};
}

ModelConfig config_from(const json& j) {
  ModelConfig c;
  c.n_layers = j.at("n_layers").get<std::size_t>();
  c.hidden = j.at("hidden").get<std::size_t>();
  c.n_heads = j.at("n_heads").get<std::size_t>();
  c.ff_dim = j.at("ff_dim").get<std::size_t>();
  c.vocab = j.at("vocab").get<std::size_t>();
  c.max_len = j.at("max_len").get<std::size_t>();
  c.n_decoder_layers = j.at("n_decoder_layers").get<std::size_t>();
  c.adapter_dim = j.at("adapter_dim").get<std::size_t>();
  c.lora_rank = j.at("lora_rank").get<std::size_t>();
  c.lora_alpha = j.at("lora_alpha").get<double>();
  c.ln_eps = j.at("ln_eps").get<double>();
  return c;
}

std::string read_all(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open checkpoint " + path);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

struct Parsed {
  CheckpointManifest manifest;
  std::string bytes;
  std::size_t data_start = 0;
};

CheckpointManifest parse_manifest(const std::string& bytes, const std::string& path,
                                  std::size_t& data_start) {
  if (bytes.size() < kHeader || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw IntegrityError(path + ": not an AVF1 checkpoint");
  std::uint64_t len = 0;
  for (int i = 7; i >= 0; --i) len = len << 8 | static_cast<unsigned char>(bytes[4 + i]);
  if (len > bytes.size() - kHeader)
    throw IntegrityError(path + ": manifest length exceeds file size");
  json j;
  try {
    j = json::parse(bytes.substr(kHeader, len));
  } catch (const json::exception& e) {
    throw IntegrityError(path + ": manifest is not valid JSON: " + e.what());
  }
  CheckpointManifest m;
  try {
    m.format_version = j.at("format_version").get<int>();
  } catch (const json::exception&) {
    throw IntegrityError(path + ": manifest has no format_version");
  }
  if (m.format_version != kCheckpointVersion)
    throw VersionError(path + ": unsupported checkpoint format_version " +
                       std::to_string(m.format_version) + " (expected " +
                       std::to_string(kCheckpointVersion) + ")");
  try {
    m.config = config_from(j.at("config"));
    m.seed = j.at("seed").get<std::uint64_t>();
    const auto& a = j.at("attachment");
    m.attachment.mechanism = parse_mechanism_kind(a.at("mechanism").get<std::string>());
    m.attachment.adapter_tag = a.value("adapter_tag", "");
    m.attachment.stack_tags = a.value("stack_tags", std::vector<std::string>{});
    m.attachment.fusion_mode =
        a.value("fusion_mode", "fusion") == "advfusion" ? FusionMode::kAdvFusion
                                                        : FusionMode::kFusion;
    for (const auto& e : j.at("entries"))
      m.entries.push_back({e.at("name").get<std::string>(), e.at("shape").get<Shape>(),
                           e.at("group").get<std::string>(), e.at("offset").get<std::uint64_t>(),
                           e.at("length").get<std::uint64_t>()});
    m.checksum = std::stoull(j.at("checksum").get<std::string>(), nullptr, 16);
    if (j.contains("vocabulary")) m.vocabulary = j.at("vocabulary").get<std::string>();
    m.meta = j.value("meta", json::object()).dump();
  } catch (const json::exception& e) {
    throw IntegrityError(path + ": malformed manifest: " + e.what());
  } catch (const ConfigError& e) {
    throw IntegrityError(path + ": malformed manifest: " + e.what());
  } catch (const std::logic_error& e) {
    throw IntegrityError(path + ": malformed manifest: " + e.what());
  }
  data_start = kHeader + len;
  return m;
}

void validate_layout(const CheckpointManifest& m, std::size_t data_size, const std::string& path) {
  std::vector<std::pair<std::uint64_t, std::uint64_t>> spans;
  for (const auto& e : m.entries) {
    if (e.length != numel(e.shape) * 4)
      throw IntegrityError(path + ": entry " + e.name + " length does not match its shape");
    if (e.offset > data_size || e.length > data_size - e.offset)
      throw IntegrityError(path + ": entry " + e.name + " lies outside the data section");
    spans.emplace_back(e.offset, e.offset + e.length);
  }
  std::sort(spans.begin(), spans.end());
  for (std::size_t i = 1; i < spans.size(); ++i)
    if (spans[i].first < spans[i - 1].second)
      throw IntegrityError(path + ": overlapping entries");
  if (data_size != m.data_bytes())
    throw IntegrityError(path + ": data section is " + std::to_string(data_size) +
                         " bytes, manifest expects " + std::to_string(m.data_bytes()));
}

Parsed parse_file(const std::string& path, bool verify_data) {
  Parsed p;
  p.bytes = read_all(path);
  p.manifest = parse_manifest(p.bytes, path, p.data_start);
  if (verify_data) {
    validate_layout(p.manifest, p.bytes.size() - p.data_start, path);
    if (fnv(p.bytes, p.data_start) != p.manifest.checksum)
      throw IntegrityError(path + ": checksum mismatch");
  }
  return p;
}

std::vector<ParamSpec> group_specs(const ModelConfig& cfg, const std::string& g) {
  const std::string prefix = "adapter:";
  if (g.rfind(prefix, 0) == 0) return adapter_specs(cfg, g.substr(prefix.size()));
  if (g == group::kFusion) return fusion_specs(cfg);
  if (g == group::kLora) return lora_specs(cfg);
  std::vector<ParamSpec> out;
  for (auto& s : backbone_specs(cfg))
    if (s.group == g) out.push_back(std::move(s));
  return out;
}

}  // namespace

std::vector<std::string> CheckpointManifest::groups() const {
  std::vector<std::string> out;
  for (const auto& e : entries)
    if (std::find(out.begin(), out.end(), e.group) == out.end()) out.push_back(e.group);
  return out;
}

std::uint64_t CheckpointManifest::data_bytes() const {
  std::uint64_t end = 0;
  for (const auto& e : entries) end = std::max(end, e.offset + e.length);
  return end;
}

std::string to_string(Mechanism m) {
  switch (m) {
    case Mechanism::kNone: return "none";
    case Mechanism::kAdapter: return "adapter";
    case Mechanism::kLora: return "lora";
    case Mechanism::kFusion: return "fusion";
  }
  return "none";
}

Mechanism parse_mechanism_kind(const std::string& s) {
  if (s == "none") return Mechanism::kNone;
  if (s == "adapter") return Mechanism::kAdapter;
  if (s == "lora") return Mechanism::kLora;
  if (s == "fusion") return Mechanism::kFusion;
  throw ConfigError("unknown attachment mechanism '" + s + "'");
}

template <typename T>
Attachment attachment_of(const TransformerModel<T>& model) {
  const auto& s = model.slots();
  Attachment a;
  a.mechanism = s.mechanism;
  if (s.mechanism == Mechanism::kAdapter) a.adapter_tag = s.adapter.tag;
  if (s.mechanism == Mechanism::kFusion) {
    a.stack_tags = s.stack.tags();
    a.fusion_mode = s.fusion_mode;
  }
  return a;
}

template <typename T>
void save_checkpoint(const TransformerModel<T>& model, const std::string& path,
                     const Vocabulary* vocab, const std::string& meta) {
  std::string data;
  json entries = json::array();
  for (const auto& e : model.params().entries()) {
    const std::uint64_t offset = data.size();
    for (T v : e.tensor.values()) put_u32(data, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    entries.push_back({{"name", e.name},
                       {"shape", e.tensor.shape()},
                       {"group", e.group},
                       {"offset", offset},
                       {"length", data.size() - offset}});
  }
  const auto att = attachment_of(model);
  json j{{"format_version", kCheckpointVersion},
         {"config", config_json(model.config())},
         {"seed", model.seed()},
         {"attachment",
          {{"mechanism", to_string(att.mechanism)},
           {"adapter_tag", att.adapter_tag},
           {"stack_tags", att.stack_tags},
           {"fusion_mode", att.fusion_mode == FusionMode::kAdvFusion ? "advfusion" : "fusion"}}},
         {"entries", entries}};
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(fnv(data, 0)));
  j["checksum"] = hex;
  if (vocab) {
    std::ostringstream v;
    vocab->save(v);
    j["vocabulary"] = v.str();
  }
  try {
    j["meta"] = json::parse(meta);
  } catch (const json::exception&) {
    throw UsageError("checkpoint meta must be a JSON object");
  }
  const std::string manifest = j.dump();
  std::string out(kMagic, 4);
  const std::uint64_t len = manifest.size();
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((len >> (8 * i)) & 0xff));
  out += manifest;
  out += data;
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot write checkpoint " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw DataError("failed writing checkpoint " + path);
}

CheckpointManifest read_manifest(const std::string& path) {
  return parse_file(path, true).manifest;
}

namespace {

template <typename T>
void apply_groups(TransformerModel<T>& model, const Parsed& p, const std::set<std::string>& groups,
                  const std::string& path) {
  const auto& m = p.manifest;
  const auto present = m.groups();
  for (const auto& g : groups)
    if (std::find(present.begin(), present.end(), g) == present.end())
      throw LookupError(path + ": checkpoint has no group '" + g + "'");

  // Stage and check everything before touching the model.
  std::map<std::string, ParamSpec> expected;
  for (const auto& g : groups)
    for (auto& s : group_specs(model.config(), g)) expected.emplace(s.name, std::move(s));
  std::set<std::string> seen;
  for (const auto& e : m.entries) {
    if (!groups.count(e.group)) continue;
    const auto it = expected.find(e.name);
    if (it == expected.end() || it->second.group != e.group)
      throw LookupError(path + ": entry " + e.name + " does not belong to this model");
    const Shape& want = model.params().contains(e.name) ? model.params().get(e.name).shape()
                                                        : it->second.shape;
    if (want != e.shape)
      throw DimensionError("checkpoint entry " + e.name + " has shape " + shape_str(e.shape) +
                           ", model expects " + shape_str(want));
    seen.insert(e.name);
  }
  for (const auto& [name, spec] : expected)
    if (!seen.count(name))
      throw IntegrityError(path + ": group '" + spec.group + "' lacks entry " + name);

  const auto* data = reinterpret_cast<const unsigned char*>(p.bytes.data()) + p.data_start;
  for (const auto& e : m.entries) {
    if (!groups.count(e.group)) continue;
    if (!model.params().contains(e.name)) model.create_param(expected.at(e.name));
    auto t = model.params().get(e.name);
    auto dst = t.mutable_values();
    for (std::size_t i = 0; i < dst.size(); ++i)
      dst[i] = static_cast<T>(std::bit_cast<float>(get_u32(data + e.offset + 4 * i)));
  }
}

}  // namespace

template <typename T>
LoadedCheckpoint<T> load_checkpoint(const std::string& path) {
  const auto p = parse_file(path, true);
  const auto& m = p.manifest;
  try {
    m.config.validate();
  } catch (const ConfigError& e) {
    throw IntegrityError(path + ": invalid model config: " + e.what());
  }
  LoadedCheckpoint<T> out{TransformerModel<T>(m.config, m.seed), std::nullopt, m};
  const auto g = m.groups();
  apply_groups(out.model, p, std::set<std::string>(g.begin(), g.end()), path);
  const auto& a = m.attachment;
  switch (a.mechanism) {
    case Mechanism::kNone: break;
    case Mechanism::kAdapter: attach_adapter(out.model, a.adapter_tag); break;
    case Mechanism::kLora: attach_lora(out.model); break;
    case Mechanism::kFusion: attach_fusion(out.model, a.stack_tags, a.fusion_mode); break;
  }
  if (m.vocabulary) {
    std::istringstream in(*m.vocabulary);
    out.vocab = Vocabulary::load(in);
  }
  return out;
}

template <typename T>
void load_groups(TransformerModel<T>& model, const std::string& path,
                 const std::set<std::string>& groups) {
  apply_groups(model, parse_file(path, true), groups, path);
}

#define ADVF_INSTANTIATE(T)                                                                 \
  template Attachment attachment_of(const TransformerModel<T>&);                          \
  template void save_checkpoint(const TransformerModel<T>&, const std::string&,           \
                                const Vocabulary*, const std::string&);                   \
  template LoadedCheckpoint<T> load_checkpoint<T>(const std::string&);                    \
  template void load_groups(TransformerModel<T>&, const std::string&,                     \
                            const std::set<std::string>&);
ADVF_INSTANTIATE(float)
ADVF_INSTANTIATE(double)
#undef ADVF_INSTANTIATE

}  // namespace advf
