// Copyright 2026 The mlasr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "mlasr/data.hpp"
#include "mlasr/model.hpp"
#include "mlasr/training.hpp"

namespace mlasr {

// Everything a run needs, serializable so any artifact can be reproduced
// from config + seed. The vocabulary size is derived from the data section
// and is deliberately not a key of its own.
struct RunConfig {
  uint64_t seed = 42;
  std::string out_dir = "runs/default";
  ModelConfig model;      // model.vocab filled in from data
  LoraConfig lora;
  TrainConfig train;
  LanguageSetup data;
  GenParams gen;          // counts per split live here
  int train_per_language = 400;
  int target_train_per_language = -1;  // -1: same as train_per_language
  int dev_per_language = 50;
  int test_per_language = 50;
  ShiftParams shift{0.2, 0.2, 1.5, 0.0, 0.8, 0.5, 0.25};

  int target_train_count() const {
    return target_train_per_language > 0 ? target_train_per_language : train_per_language;
  }

  void finalize();  // derive vocab, propagate seed/feat_dim, validate
};

RunConfig default_run_config();

nlohmann::json run_config_to_json(const RunConfig& cfg);
RunConfig run_config_from_json(const nlohmann::json& j);  // unknown keys rejected
RunConfig load_run_config(const std::filesystem::path& path);

// FNV-1a over the canonical (sorted-key) serialization.
std::string config_hash(const RunConfig& cfg);

nlohmann::json model_config_to_json(const ModelConfig& m);
ModelConfig model_config_from_json(const nlohmann::json& j);
nlohmann::json lora_config_to_json(const LoraConfig& l);
LoraConfig lora_config_from_json(const nlohmann::json& j);

std::string format_double(double v);  // deterministic %.12g

}  // namespace mlasr
