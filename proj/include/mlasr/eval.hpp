// Copyright 2026 The mlasr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>

#include "mlasr/inference.hpp"
#include "mlasr/metrics.hpp"

namespace mlasr {

struct EvalRecord {
  std::string utt_id;
  int true_lang = 0;
  int pred_lang = 0;
  TokenSeq ref_tokens;
  TokenSeq hyp_tokens;
  std::string strategy;
  std::vector<double> stage_ms;
};

struct EvalOutcome {
  Strategy strategy = Strategy::Known;
  MixtureRates rates;
  ConfusionMatrix confusion{1};
  TimingSummary timing;
  std::vector<EvalRecord> records;
};

// Decodes every utterance with the given strategy and scores error rates,
// LID confusion and timing. Per-utterance (lid_correct, token_error) pairs
// stay available through `records` so LID-to-ASR error propagation is
// measurable.
EvalOutcome run_eval(const System& sys, const Corpus& corpus, Strategy strategy,
                     const Tokenizer& tokenizer, const std::vector<UnitType>& units);

// Report writers. Each file's first line embeds the config hash; the rates
// and confusion CSVs are byte-deterministic for a fixed config + seed.
void write_rates_csv(const std::filesystem::path& path, const MixtureRates& rates,
                     const std::string& config_hash);
void write_confusion_csv(const std::filesystem::path& path, const ConfusionMatrix& cm,
                         const std::string& config_hash);
void write_timing_csv(const std::filesystem::path& path, const std::string& strategy,
                      const TimingSummary& timing, const std::string& config_hash);
void write_decode_log(const std::filesystem::path& path, const std::vector<EvalRecord>& records,
                      const std::string& config_hash);

std::vector<UnitType> units_from_setup(const LanguageSetup& setup);

}  // namespace mlasr
