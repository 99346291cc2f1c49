// Copyright 2026 The mlasr Authors
// SPDX-License-Identifier: Apache-2.0

#include "mlasr/config.hpp"

#include <cstdio>
#include <fstream>

#include "mlasr/errors.hpp"

namespace mlasr {

using nlohmann::json;

namespace {

// Reject keys the schema does not know; silent typos in configs are worse
// than a hard error.
void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        ok = true;
        break;
      }
    if (!ok) throw ConfigError("config: unknown key '" + it.key() + "' in " + where);
  }
}

template <typename T>
void maybe(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

nlohmann::json model_config_to_json(const ModelConfig& m) {
  return json{{"layers", m.n_layers},   {"split_k", m.split_k}, {"hidden", m.hidden},
              {"heads", m.heads},       {"feat_dim", m.feat_dim},
              {"downsample", m.downsample}, {"ffn_mult", m.ffn_mult}};
}

ModelConfig model_config_from_json(const json& j) {
  check_keys(j, {"layers", "split_k", "hidden", "heads", "feat_dim", "downsample", "ffn_mult"},
             "model");
  ModelConfig m;
  maybe(j, "layers", m.n_layers);
  maybe(j, "split_k", m.split_k);
  maybe(j, "hidden", m.hidden);
  maybe(j, "heads", m.heads);
  maybe(j, "feat_dim", m.feat_dim);
  maybe(j, "downsample", m.downsample);
  maybe(j, "ffn_mult", m.ffn_mult);
  return m;
}

nlohmann::json lora_config_to_json(const LoraConfig& l) {
  std::vector<std::string> targets;
  for (auto t : l.targets) {
    switch (t) {
      case LoraTarget::Q: targets.push_back("q"); break;
      case LoraTarget::K: targets.push_back("k"); break;
      case LoraTarget::V: targets.push_back("v"); break;
      case LoraTarget::Ctc: targets.push_back("ctc"); break;
    }
  }
  return json{{"rank", l.rank}, {"alpha", l.alpha}, {"targets", targets}};
}

LoraConfig lora_config_from_json(const json& j) {
  check_keys(j, {"rank", "alpha", "targets"}, "lora");
  LoraConfig l;
  maybe(j, "rank", l.rank);
  maybe(j, "alpha", l.alpha);
  if (j.contains("targets")) {
    l.targets.clear();
    for (const auto& s : j.at("targets")) {
      const std::string name = s.get<std::string>();
      if (name == "q") l.targets.push_back(LoraTarget::Q);
      else if (name == "k") l.targets.push_back(LoraTarget::K);
      else if (name == "v") l.targets.push_back(LoraTarget::V);
      else if (name == "ctc") l.targets.push_back(LoraTarget::Ctc);
      else throw ConfigError("config: unknown lora target '" + name + "'");
    }
  }
  return l;
}

void RunConfig::finalize() {
  data.feat_dim = model.feat_dim;
  gen.downsample = model.downsample;
  gen.seed = seed;
  train.seed = seed;
  model.vocab = data.vocab_size();
  model.validate();
  lora.validate();
  train.validate();
  if (train_per_language < 1 || dev_per_language < 1 || test_per_language < 1)
    throw ConfigError("config: per-language split counts must be >= 1");
}

RunConfig default_run_config() {
  RunConfig cfg;
  cfg.finalize();
  return cfg;
}

nlohmann::json run_config_to_json(const RunConfig& cfg) {
  return json{
      {"seed", cfg.seed},
      {"out_dir", cfg.out_dir},
      {"model", model_config_to_json(cfg.model)},
      {"lora", lora_config_to_json(cfg.lora)},
      {"train",
       {{"lambda_lid", cfg.train.lambda_lid},
        {"lr", cfg.train.lr},
        {"beta1", cfg.train.beta1},
        {"beta2", cfg.train.beta2},
        {"eps", cfg.train.eps},
        {"batch_size", cfg.train.batch_size},
        {"base_phase1_epochs", cfg.train.base_phase1_epochs},
        {"base_phase2_epochs", cfg.train.base_phase2_epochs},
        {"adapt_epochs", cfg.train.adapt_epochs}}},
      {"data",
       {{"languages", cfg.data.languages},
        {"tokens_per_language", cfg.data.tokens_per_language},
        {"overlap_fraction", cfg.data.overlap_fraction},
        {"frames_per_token", cfg.data.frames_per_token},
        {"noise_std", cfg.data.noise_std},
        {"offset_std", cfg.data.offset_std},
        {"char_like", cfg.data.char_like},
        {"u_min", cfg.gen.u_min},
        {"u_max", cfg.gen.u_max},
        {"train_per_language", cfg.train_per_language},
        {"target_train_per_language", cfg.target_train_per_language},
        {"dev_per_language", cfg.dev_per_language},
        {"test_per_language", cfg.test_per_language},
        {"shift",
         {{"template_jitter", cfg.shift.template_jitter},
          {"offset_shift", cfg.shift.offset_shift},
          {"noise_mult", cfg.shift.noise_mult},
          {"global_gain_jitter", cfg.shift.global_gain_jitter},
          {"global_offset_shift", cfg.shift.global_offset_shift},
          {"global_mix", cfg.shift.global_mix},
          {"lang_mix", cfg.shift.lang_mix}}}}}};
}

RunConfig run_config_from_json(const json& j) {
  check_keys(j, {"seed", "out_dir", "model", "lora", "train", "data"}, "run config");
  RunConfig cfg;
  maybe(j, "seed", cfg.seed);
  maybe(j, "out_dir", cfg.out_dir);
  if (j.contains("model")) cfg.model = model_config_from_json(j.at("model"));
  if (j.contains("lora")) cfg.lora = lora_config_from_json(j.at("lora"));
  if (j.contains("train")) {
    const json& t = j.at("train");
    check_keys(t,
               {"lambda_lid", "lr", "beta1", "beta2", "eps", "batch_size", "base_phase1_epochs",
                "base_phase2_epochs", "adapt_epochs"},
               "train");
    maybe(t, "lambda_lid", cfg.train.lambda_lid);
    maybe(t, "lr", cfg.train.lr);
    maybe(t, "beta1", cfg.train.beta1);
    maybe(t, "beta2", cfg.train.beta2);
    maybe(t, "eps", cfg.train.eps);
    maybe(t, "batch_size", cfg.train.batch_size);
    maybe(t, "base_phase1_epochs", cfg.train.base_phase1_epochs);
    maybe(t, "base_phase2_epochs", cfg.train.base_phase2_epochs);
    maybe(t, "adapt_epochs", cfg.train.adapt_epochs);
  }
  if (j.contains("data")) {
    const json& d = j.at("data");
    check_keys(d,
               {"languages", "tokens_per_language", "overlap_fraction", "frames_per_token",
                "noise_std", "offset_std", "char_like", "u_min", "u_max", "train_per_language",
                "target_train_per_language", "dev_per_language", "test_per_language", "shift"},
               "data");
    maybe(d, "languages", cfg.data.languages);
    maybe(d, "tokens_per_language", cfg.data.tokens_per_language);
    maybe(d, "overlap_fraction", cfg.data.overlap_fraction);
    maybe(d, "frames_per_token", cfg.data.frames_per_token);
    maybe(d, "noise_std", cfg.data.noise_std);
    maybe(d, "offset_std", cfg.data.offset_std);
    maybe(d, "char_like", cfg.data.char_like);
    maybe(d, "u_min", cfg.gen.u_min);
    maybe(d, "u_max", cfg.gen.u_max);
    maybe(d, "train_per_language", cfg.train_per_language);
    maybe(d, "target_train_per_language", cfg.target_train_per_language);
    maybe(d, "dev_per_language", cfg.dev_per_language);
    maybe(d, "test_per_language", cfg.test_per_language);
    if (d.contains("shift")) {
      const json& s = d.at("shift");
      check_keys(s,
                 {"template_jitter", "offset_shift", "noise_mult", "global_gain_jitter",
                  "global_offset_shift", "global_mix", "lang_mix"},
                 "data.shift");
      maybe(s, "template_jitter", cfg.shift.template_jitter);
      maybe(s, "offset_shift", cfg.shift.offset_shift);
      maybe(s, "noise_mult", cfg.shift.noise_mult);
      maybe(s, "global_gain_jitter", cfg.shift.global_gain_jitter);
      maybe(s, "global_offset_shift", cfg.shift.global_offset_shift);
      maybe(s, "global_mix", cfg.shift.global_mix);
      maybe(s, "lang_mix", cfg.shift.lang_mix);
    }
  }
  cfg.finalize();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError("config " + path.string() + ": " + e.what());
  }
  return run_config_from_json(j);
}

std::string config_hash(const RunConfig& cfg) {
  const std::string dump = run_config_to_json(cfg).dump();  // object keys are sorted
  uint64_t h = 1469598103934665603ULL;
  for (char c : dump) {
    h ^= static_cast<uint8_t>(c);
    h *= 1099511628211ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

}  // namespace mlasr
