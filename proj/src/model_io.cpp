#include "mace/model_io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "mace/errors.hpp"
#include "mace/json_reader.hpp"

namespace mace {

namespace {

constexpr char kMagic[8] = {'M', 'A', 'C', 'E', 'M', 'D', 'L', '1'};
constexpr int kSchema = 1;

void put_u64(std::string& out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xff));
}

std::uint64_t get_u64(const std::string& in, std::size_t at) {
  std::uint64_t v = 0;
  for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[at + b])) << (8 * b);
  return v;
}

std::string joined(const std::string& prefix, const char* name) { return prefix.empty() ? name : prefix + "." + name; }

}  // namespace

nlohmann::json model_config_to_json(const MaceConfig& cfg) {
  nlohmann::json elements = nlohmann::json::array();
  for (int z : cfg.elements) elements.push_back(element_symbol(z));
  return {{"num_layers", cfg.num_layers},
          {"correlation", cfg.correlation},
          {"l_max", cfg.l_max},
          {"L_max", cfg.L_max},
          {"channels", cfg.channels},
          {"readout_mlp_width", cfg.readout_mlp_width},
          {"elements", elements},
          {"mix_a", cfg.mix_a}};
}

nlohmann::json radial_config_to_json(const RadialConfig& cfg) {
  return {{"n_basis", cfg.n_basis}, {"r_cut", cfg.r_cut}, {"envelope_p", cfg.envelope_p}, {"mlp_widths", cfg.mlp_widths}};
}

void model_config_from_json(const nlohmann::json& model, const nlohmann::json& radial, MaceConfig& cfg,
                            const std::string& path_prefix) {
  JsonReader m(model, joined(path_prefix, "model"));
  m.get("num_layers", cfg.num_layers);
  m.get("correlation", cfg.correlation);
  m.get("l_max", cfg.l_max);
  m.get("L_max", cfg.L_max);
  m.get("channels", cfg.channels);
  m.get("readout_mlp_width", cfg.readout_mlp_width);
  m.get("mix_a", cfg.mix_a);
  if (m.has("elements")) {
    std::vector<std::string> symbols;
    m.get("elements", symbols);
    cfg.elements.clear();
    for (const auto& s : symbols) {
      try {
        cfg.elements.push_back(atomic_number(s));
      } catch (const DataError&) {
        throw ConfigError(m.path_of("elements") + ": unknown element '" + s + "'");
      }
    }
  }
  m.finish();

  JsonReader r(radial, joined(path_prefix, "radial"));
  r.get("n_basis", cfg.radial.n_basis);
  r.get("r_cut", cfg.radial.r_cut);
  r.get("envelope_p", cfg.radial.envelope_p);
  r.get("mlp_widths", cfg.radial.mlp_widths);
  r.finish();
}

std::string serialize_model(const MaceModel& model, const ModelParams& params) {
  model.check_params(params);
  nlohmann::json tensors = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& t : params.tensors) {
    tensors.push_back({{"name", t.name}, {"shape", t.shape}, {"offset", offset}, {"count", t.values.size()},
                       {"decay", t.decay}});
    offset += t.values.size();
  }
  const auto& s = model.scaling();
  const nlohmann::json manifest = {
      {"schema", kSchema},
      {"model", model_config_to_json(model.config())},
      {"radial", radial_config_to_json(model.config().radial)},
      {"scaling", {{"shift", s.shift}, {"scale", s.scale}, {"neighbor_norm", s.neighbor_norm}}},
      {"tensors", tensors},
      {"blob_values", offset}};
  const std::string text = manifest.dump();

  std::string out(kMagic, sizeof kMagic);
  put_u64(out, text.size());
  out += text;
  out.reserve(out.size() + 8 * offset);
  for (const auto& t : params.tensors)
    for (double x : t.values) {
      std::uint64_t bits;
      std::memcpy(&bits, &x, sizeof bits);
      put_u64(out, bits);
    }
  return out;
}

void save_model(const std::string& path, const MaceModel& model, const ModelParams& params) {
  const std::string bytes = serialize_model(model, params);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot open '" + path + "' for writing");
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw DataError("write to '" + path + "' failed");
}

LoadedModel deserialize_model(const std::string& bytes) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0)
    throw DataError("not a model file (bad magic)");
  const std::uint64_t len = get_u64(bytes, 8);
  if (len > bytes.size() - 16) throw DataError("model file truncated in manifest");
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(bytes.substr(16, len));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("model manifest is not valid JSON: ") + e.what());
  }

  LoadedModel out;
  try {
    JsonReader top(manifest, "");
    int schema = 0;
    top.require("schema", schema);
    if (schema != kSchema) throw DataError("unsupported model schema " + std::to_string(schema));
    model_config_from_json(top.raw("model"), top.raw("radial"), out.config);
    JsonReader sc = top.child("scaling");
    sc.require("shift", out.scaling.shift);
    sc.require("scale", out.scaling.scale);
    sc.require("neighbor_norm", out.scaling.neighbor_norm);
    sc.finish();
    std::size_t blob_values = 0;
    top.require("blob_values", blob_values);
    if (bytes.size() - 16 - len != 8 * blob_values) throw DataError("model blob size does not match the manifest");

    const auto& list = top.raw("tensors");
    if (!list.is_array()) throw DataError("model manifest: tensors must be an array");
    for (std::size_t i = 0; i < list.size(); ++i) {
      JsonReader t(list[i], "tensors[" + std::to_string(i) + "]");
      NamedTensor nt;
      std::size_t offset = 0, count = 0;
      t.require("name", nt.name);
      t.require("shape", nt.shape);
      t.require("offset", offset);
      t.require("count", count);
      t.require("decay", nt.decay);
      t.finish();
      if (offset > blob_values || count > blob_values - offset)
        throw DataError("tensor '" + nt.name + "' lies outside the blob");
      nt.values.resize(count);
      for (std::size_t j = 0; j < count; ++j) {
        const std::uint64_t bits = get_u64(bytes, 16 + len + 8 * (offset + j));
        std::memcpy(&nt.values[j], &bits, sizeof bits);
      }
      out.params.tensors.push_back(std::move(nt));
    }
    top.finish();
    out.config.validate();
  } catch (const ConfigError& e) {
    throw DataError(std::string("model manifest: ") + e.what());
  }
  try {
    MaceModel(out.config, out.scaling).check_params(out.params);
  } catch (const ContractViolation& e) {
    throw DataError(std::string("model file does not match its configuration: ") + e.what());
  }
  return out;
}

LoadedModel load_model(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open model file '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return deserialize_model(ss.str());
}

}  // namespace mace
