// Copyright 2026 The mlasr Authors
// SPDX-License-Identifier: Apache-2.0

#include "mlasr/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <map>

#include <json.hpp>

#include "mlasr/config.hpp"
#include "mlasr/errors.hpp"

namespace mlasr {

using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'M', 'L', 'C', 'K'};
constexpr uint32_t kVersion = 1;
constexpr uint8_t kTensorEntry = 0;
constexpr uint8_t kBlobEntry = 1;

void write_u32(std::ostream& os, uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); }
void write_u64(std::ostream& os, uint64_t v) { os.write(reinterpret_cast<const char*>(&v), 8); }
uint32_t read_u32(std::istream& is) {
  uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), 4);
  return v;
}
uint64_t read_u64(std::istream& is) {
  uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), 8);
  return v;
}

void write_key(std::ostream& os, const std::string& key) {
  write_u32(os, static_cast<uint32_t>(key.size()));
  os.write(key.data(), static_cast<std::streamsize>(key.size()));
}

void write_tensor_entry(std::ostream& os, const std::string& key, const Tensor& t) {
  os.put(static_cast<char>(kTensorEntry));
  write_key(os, key);
  write_u32(os, static_cast<uint32_t>(t.rank()));
  for (int64_t d : t.shape()) write_u64(os, static_cast<uint64_t>(d));
  os.write(reinterpret_cast<const char*>(t.data()), static_cast<std::streamsize>(t.size() * 8));
}

void write_blob_entry(std::ostream& os, const std::string& key, const std::string& blob) {
  os.put(static_cast<char>(kBlobEntry));
  write_key(os, key);
  write_u64(os, blob.size());
  os.write(blob.data(), static_cast<std::streamsize>(blob.size()));
}

std::vector<const Param*> collect_params(const System& sys) {
  std::vector<const Param*> out;
  auto& bb = const_cast<Backbone&>(sys.backbone);
  for (Param* p : bb.all_params()) out.push_back(p);
  if (sys.bank)
    for (Param* p : const_cast<AdapterBank&>(*sys.bank).all_params()) out.push_back(p);
  if (sys.lid)
    for (Param* p : const_cast<LidHead&>(*sys.lid).params()) out.push_back(p);
  return out;
}

}  // namespace

void save_system(const System& sys, const std::filesystem::path& path,
                 const std::string& config_hash) {
  if (!path.parent_path().empty()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write checkpoint " + path.string());

  const std::vector<const Param*> params = collect_params(sys);
  os.write(kMagic, 4);
  write_u32(os, kVersion);
  write_u64(os, params.size() + 1);

  json meta = {{"kind", system_kind_name(sys.kind)},
               {"languages", sys.n_languages},
               {"model", model_config_to_json(sys.backbone.config)},
               {"vocab", sys.backbone.config.vocab},
               {"config_hash", config_hash}};
  if (sys.bank) {
    meta["lora"] = lora_config_to_json(sys.bank->config);
    meta["split_k"] = sys.backbone.config.split_k;
  }
  write_blob_entry(os, "meta", meta.dump());
  for (const Param* p : params) write_tensor_entry(os, p->name, p->value);
  if (!os) throw IoError("short write on checkpoint " + path.string());
}

LoadedSystem load_system(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DependencyError("checkpoint not found: " + path.string());
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw ParseError("checkpoint " + path.string() + ": bad magic");
  if (read_u32(is) != kVersion) throw ParseError("checkpoint " + path.string() + ": bad version");
  const uint64_t n_entries = read_u64(is);

  std::map<std::string, Tensor> tensors;
  std::string meta_blob;
  for (uint64_t e = 0; e < n_entries; ++e) {
    const int type = is.get();
    const uint32_t key_len = read_u32(is);
    std::string key(key_len, '\0');
    is.read(key.data(), key_len);
    if (type == kBlobEntry) {
      const uint64_t size = read_u64(is);
      std::string blob(size, '\0');
      is.read(blob.data(), static_cast<std::streamsize>(size));
      if (key == "meta") meta_blob = blob;
    } else if (type == kTensorEntry) {
      const uint32_t ndim = read_u32(is);
      std::vector<int64_t> shape(ndim);
      for (auto& d : shape) d = static_cast<int64_t>(read_u64(is));
      Tensor t(shape);
      is.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(t.size() * 8));
      tensors.emplace(std::move(key), std::move(t));
    } else {
      throw ParseError("checkpoint " + path.string() + ": unknown entry type");
    }
    if (!is) throw ParseError("checkpoint " + path.string() + ": truncated");
  }
  if (meta_blob.empty()) throw ParseError("checkpoint " + path.string() + ": missing meta entry");

  json meta;
  try {
    meta = json::parse(meta_blob);
  } catch (const json::exception& e) {
    throw ParseError("checkpoint " + path.string() + ": bad meta: " + e.what());
  }

  LoadedSystem out;
  out.config_hash = meta.value("config_hash", "");
  out.system.kind = system_kind_from_name(meta.at("kind").get<std::string>());
  out.system.n_languages = meta.at("languages").get<int>();
  ModelConfig mc = model_config_from_json(meta.at("model"));
  mc.vocab = meta.at("vocab").get<int64_t>();

  // Rebuild the skeleton deterministically, then overwrite every tensor.
  Rng init(0);
  out.system.backbone = Backbone::init(mc, init);
  if (out.system.kind == SystemKind::PerLanguage) {
    LoraConfig lc = lora_config_from_json(meta.at("lora"));
    out.system.bank = AdapterBank::make_per_language(lc, mc.n_layers, out.system.n_languages,
                                                     mc.hidden, mc.vocab, init);
  } else if (out.system.kind == SystemKind::Hierarchical) {
    LoraConfig lc = lora_config_from_json(meta.at("lora"));
    out.system.bank = AdapterBank::make_hierarchical(lc, mc.n_layers, mc.split_k,
                                                     out.system.n_languages, mc.hidden, mc.vocab,
                                                     init);
    out.system.lid = LidHead::init(out.system.n_languages, mc.hidden, init);
  }

  for (const Param* p : collect_params(out.system)) {
    auto it = tensors.find(p->name);
    if (it == tensors.end())
      throw ParseError("checkpoint " + path.string() + ": missing tensor " + p->name);
    if (!(it->second.shape() == p->value.shape()))
      throw ParseError("checkpoint " + path.string() + ": shape mismatch on " + p->name);
    const_cast<Param*>(p)->value = it->second;
  }
  return out;
}

}  // namespace mlasr
