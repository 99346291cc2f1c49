// Copyright 2026 The mlasr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>

#include "mlasr/checkpoint.hpp"
#include "mlasr/config.hpp"
#include "mlasr/eval.hpp"

namespace mlasr {

// Canonical run-directory layout shared by every subcommand.
struct RunPaths {
  std::filesystem::path root;

  static RunPaths for_out(const std::string& out_dir) { return RunPaths{out_dir}; }
  std::filesystem::path manifest(const std::string& domain, const std::string& split) const {
    return root / "data" / domain / (split + ".jsonl");
  }
  std::filesystem::path checkpoint(const std::string& name) const {
    return root / "checkpoints" / (name + ".ckpt");
  }
  std::filesystem::path train_log(const std::string& mode) const {
    return root / "logs" / ("train-" + mode + ".jsonl");
  }
  std::filesystem::path report_dir(const std::string& tag) const { return root / "reports" / tag; }
};

// Fresh adapted systems over a frozen base backbone.
System clone_base_as_per_language(const System& base, const LoraConfig& lora, int n_languages,
                                  uint64_t seed);
System clone_base_as_hierarchical(const System& base, const LoraConfig& lora, int n_languages,
                                  int split_k, uint64_t seed);

// Generates source and shifted target corpora for all three splits and
// writes manifests + feature blobs under <out>/data/.
void pipeline_gen_data(const RunConfig& cfg);

// Base recipe on the source domain; writes <out>/checkpoints/base.ckpt and
// the training log. Returns the final dev error rate.
double pipeline_train_base(const RunConfig& cfg);

// Adapter recipes on the target domain, starting from the base checkpoint.
// `split_k` overrides the model's split for hierarchical runs (ablation) and
// `lambda` overrides the LID weight; `ckpt_name` names the output file.
double pipeline_train_adapted(const RunConfig& cfg, SystemKind kind,
                              const std::filesystem::path& base_ckpt,
                              std::optional<int> split_k = std::nullopt,
                              std::optional<double> lambda = std::nullopt,
                              const std::string& ckpt_name = "");

// Decodes a manifest with one strategy and writes the four report files
// (rates.csv, confusion.csv, timing.csv, decode.jsonl) into report_dir.
EvalOutcome pipeline_eval(const RunConfig& cfg, const std::filesystem::path& ckpt,
                          const std::filesystem::path& manifest, Strategy strategy,
                          const std::filesystem::path& report_dir);

struct AblationTable {
  std::vector<int> ks;
  std::vector<std::vector<double>> per_language;  // [lang][k]
  std::vector<double> avg;                        // [k]
};

// Trains one hierarchical system per k (shared seed), evaluates single-pass
// on the target dev set, writes <out>/reports/ablate_k.csv.
AblationTable pipeline_ablate_k(const RunConfig& cfg, const std::filesystem::path& base_ckpt,
                                const std::vector<int>& ks);

struct ConfusionComparison {
  ConfusionMatrix two_stage{1};
  ConfusionMatrix single_pass{1};
  double accuracy_delta = 0.0;  // single-pass minus two-stage
};

// Side-by-side LID confusion of the two language-agnostic strategies.
ConfusionComparison pipeline_confusion(const RunConfig& cfg,
                                       const std::filesystem::path& lidlora_ckpt,
                                       const std::filesystem::path& hlora_ckpt,
                                       const std::filesystem::path& manifest);

}  // namespace mlasr
