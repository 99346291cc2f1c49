// Copyright 2026 The mlasr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <optional>
#include <unordered_map>

#include "mlasr/data.hpp"
#include "mlasr/model.hpp"

namespace mlasr {

enum class TrainMode { BasePhase1, BasePhase2, PerLanguage, Hierarchical };

struct TrainConfig {
  double lambda_lid = 0.3;  // Eq-style mix: (1-lambda)*asr + lambda*lid
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int batch_size = 8;
  int base_phase1_epochs = 10;
  int base_phase2_epochs = 40;
  int adapt_epochs = 30;
  uint64_t seed = 42;

  void validate() const;
};

struct LossBreakdown {
  double l_asr = 0.0;
  std::optional<double> l_lid;  // hierarchical mode only
  double combined = 0.0;
  int lang = -1;
  int64_t step = 0;
  int skipped_utterances = 0;  // infeasible CTC targets dropped from the mean
};

struct Minibatch {
  int lang = -1;
  std::vector<int> utt_indices;
};
using EpochSchedule = std::vector<Minibatch>;

// Per-language shuffle, contiguous monolingual batches (remainders kept),
// then a global shuffle of batch order. Deterministic given the seed; every
// utterance appears exactly once.
EpochSchedule build_epoch_schedule(const Corpus& corpus, int n_languages, int batch_size,
                                   uint64_t seed);

// --- optimizer -----------------------------------------------------------

struct AdamState {
  struct Slot {
    Tensor m, v;
    int64_t t = 0;
  };
  std::unordered_map<const Param*, Slot> slots;
};

// Standard Adam with bias correction. Returns false and leaves params and
// moments untouched when any gradient is non-finite (step skipped).
bool adam_update(const std::vector<Param*>& params, const std::vector<Tensor>& grads,
                 AdamState& state, double lr, double beta1, double beta2, double eps);

// --- step + recipes ---------------------------------------------------------

// One optimizer step on a monolingual batch. The trainable set is derived
// from the mode: BasePhase1 = ctc head + layer-sum weights; BasePhase2 =
// whole backbone; PerLanguage = language-i adapters; Hierarchical = shared
// adapters + LID head + language-i adapters.
LossBreakdown train_step(System& sys, const Corpus& corpus, const Minibatch& batch,
                         const Tokenizer& tokenizer, TrainMode mode, const TrainConfig& cfg,
                         AdamState& opt);

// Writes one JSON line per step ({step, mode, lang, l_asr, l_lid, combined})
// and one per epoch with the dev error rate.
class TrainLog {
 public:
  explicit TrainLog(std::ostream* out) : out_(out) {}
  void step(TrainMode mode, const LossBreakdown& loss);
  void epoch(TrainMode mode, int epoch, double dev_error_rate);

 private:
  std::ostream* out_;
};

// Two-phase base recipe: CTC head first against language-token-prefixed
// targets, then end-to-end. Returns the dev error rate after the last epoch.
double train_base(System& sys, const Corpus& train, const Corpus& dev, const Tokenizer& tokenizer,
                  const TrainConfig& cfg, TrainLog& log);

// Per-language adapter recipe on a frozen base (adapters on every layer +
// CTC head; unprefixed targets; pure ASR loss).
double train_per_language_adapters(System& sys, const Corpus& train, const Corpus& dev,
                                   const Tokenizer& tokenizer, const TrainConfig& cfg,
                                   TrainLog& log);

// Hierarchical recipe: shared adapters + LID head update every step, one
// language expert per step, joint (1-lambda)*asr + lambda*lid objective.
double train_hierarchical(System& sys, const Corpus& train, const Corpus& dev,
                          const Tokenizer& tokenizer, const TrainConfig& cfg, TrainLog& log);

// Macro error rate over the dev set using language-known decoding.
double dev_error_rate(const System& sys, const Corpus& dev, const Tokenizer& tokenizer);

const char* train_mode_name(TrainMode m);

}  // namespace mlasr
