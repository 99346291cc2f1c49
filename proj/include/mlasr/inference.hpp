// Copyright 2026 The mlasr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>

#include "mlasr/data.hpp"
#include "mlasr/model.hpp"

namespace mlasr {

enum class Strategy { Known, TwoStage, SinglePass };

const char* strategy_name(Strategy s);
Strategy strategy_from_name(const std::string& name);

// Throws ConfigError when the checkpoint kind cannot serve the strategy
// (two-stage needs a per-language bank over a base model, single-pass needs
// the hierarchical system).
void check_strategy_compat(SystemKind kind, Strategy strategy);

struct DecodeResult {
  LidTag predicted_lang;
  TokenSeq hypothesis;                 // leading language token stripped
  std::vector<double> lid_posterior;   // single-pass only
  int forward_passes = 1;
  std::vector<double> stage_ms;        // wall time per stage, monotonic clock

  double total_ms() const;
};

// One adapted forward with the supplied ground-truth language.
DecodeResult decode_language_known(const System& sys, const Utterance& utt, const LidTag& lang,
                                   const Tokenizer& tokenizer);

// Stage 1: unadapted base forward; language rule: first emitted token when
// it is a language token, else argmax over language tokens of the
// max-over-frames posterior. Stage 2: full adapted forward with the chosen
// expert.
DecodeResult decode_two_stage(const System& sys, const Utterance& utt, const Tokenizer& tokenizer);

// Lower layers once, LID posterior from X_h, route the argmax expert
// through the upper layers on the same X_h. `forced_lang` bypasses the
// posterior decision (audits only).
DecodeResult decode_single_pass(const System& sys, const Utterance& utt,
                                const Tokenizer& tokenizer,
                                std::optional<int> forced_lang = std::nullopt);

// The stage-1 decision rule, kept separately so it can be swapped out.
int stage1_language_decision(const Tensor& log_probs, const TokenSeq& decoded,
                             const Tokenizer& tokenizer);

struct TimingSummary {
  int64_t count = 0;
  double mean_ms = 0.0;
  double median_ms = 0.0;
  double mean_forward_passes = 0.0;
};

TimingSummary timing_report(const std::vector<DecodeResult>& results);

}  // namespace mlasr
