// Copyright 2026 The mlasr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <vector>

#include "mlasr/lora.hpp"
#include "mlasr/tape.hpp"

namespace mlasr {

struct ModelConfig {
  int n_layers = 6;    // N
  int split_k = 3;     // shared/language split; shared adapters on [0,k)
  int64_t hidden = 32;
  int heads = 4;
  int64_t vocab = 2;   // incl. blank and language tokens
  int64_t feat_dim = 16;
  int downsample = 2;  // front-end stride
  int ffn_mult = 4;

  void validate() const;
  int64_t head_dim() const { return hidden / heads; }
};

struct LayerParams {
  Param ln1_g, ln1_b, ln2_g, ln2_b;
  Param wq, bq, wk, bk, wv, bv, wo, bo;
  Param w1, b1, w2, b2;  // ffn
};

// Front-end + transformer stack + layer-sum weights + base CTC head. Frozen
// in the adapted modes, trainable during base training.
struct Backbone {
  ModelConfig config;
  Param fe_w, fe_b;  // strided window projection
  std::vector<LayerParams> layers;
  Param layer_sum_w;  // [1, N] pre-softmax aggregation weights
  Param ctc_w, ctc_b;

  static Backbone init(const ModelConfig& cfg, Rng& rng);
  std::vector<Param*> all_params();
  std::vector<Param*> ctc_head_params();  // phase-1 trainables (+ layer_sum_w)
};

struct LidHead {
  Param w, b;  // [L, d], [1, L]
  static LidHead init(int n_languages, int64_t hidden, Rng& rng);
  std::vector<Param*> params() { return {&w, &b}; }
};

enum class SystemKind { Base, PerLanguage, Hierarchical };

const char* system_kind_name(SystemKind k);  // "base" | "lidlora" | "hlora"
SystemKind system_kind_from_name(const std::string& name);

struct ForwardCounters {
  int64_t lower_passes = 0;
  int64_t upper_passes = 0;
  void reset() { lower_passes = upper_passes = 0; }
};

// A complete decodable model: backbone plus whatever the mode adds. The
// backbone inside an adapted system is the frozen base model, so a
// PerLanguage checkpoint also carries everything two-stage inference needs.
struct System {
  SystemKind kind = SystemKind::Base;
  int n_languages = 0;
  Backbone backbone;
  std::optional<AdapterBank> bank;
  std::optional<LidHead> lid;
  mutable ForwardCounters counters;
};

// Builds the encoder graph for one utterance on a tape. All three system
// kinds go through the same layer runner, so split forwards compose
// bit-identically with monolithic ones.
class ForwardGraph {
 public:
  ForwardGraph(Tape& tape, const System& sys) : tape_(tape), sys_(sys) {}

  // Strided window flatten + linear projection; no positional terms.
  Tape::Var front_end(const Tensor& features);
  Tape::Var add_positions(Tape::Var x);

  // Layers [0,k) with shared adapters when the bank has them. Counts as one
  // lower pass.
  Tape::Var forward_lower(Tape::Var x_pos);
  // Layers [k,N) with language-`lang` adapters.
  Tape::Var forward_upper(Tape::Var x_h, const LidTag& lang);
  // Layers [0,N); `lang` selects per-language adapters where registered
  // (PerLanguage banks cover every layer). Optionally collects each layer's
  // output for weighted summation.
  Tape::Var forward_all(Tape::Var x_pos, std::optional<LidTag> lang,
                        std::vector<Tape::Var>* layer_outputs = nullptr);

  Tape::Var weighted_layer_sum(const std::vector<Tape::Var>& layer_outputs);
  // Pre-softmax LID logits [1, L] from mean-pooled X_h.
  Tape::Var lid_logits(Tape::Var x_h);
  // Per-frame log-probabilities over the vocabulary; `lang` picks the
  // CTC-head adapter in adapted modes.
  Tape::Var ctc_log_probs(Tape::Var x, std::optional<LidTag> lang);

 private:
  Tape::Var run_layer(Tape::Var x, int layer_idx, const LayerAdapters* ad);
  const LayerAdapters* adapters_for_layer(int layer, std::optional<int> lang) const;

  Tape& tape_;
  const System& sys_;
};

// Posterior over languages from pre-softmax logits [1, L].
std::vector<double> softmax_vector(const Tensor& logits_row);
int argmax_lower_tie(const std::vector<double>& v);

// Strided window projection computed with plain loops; oracle for the
// tape-based front end.
Tensor front_end_reference(const Tensor& features, const Tensor& fe_w, const Tensor& fe_b,
                           int downsample);

Tensor sinusoidal_positions(int64_t t_len, int64_t dim);

}  // namespace mlasr
