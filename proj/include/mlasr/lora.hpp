// Copyright 2026 The mlasr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mlasr/rng.hpp"
#include "mlasr/tape.hpp"
#include "mlasr/tensor.hpp"

namespace mlasr {

// Dense language id plus a short display code ("L0", "L1", ...).
struct LidTag {
  int id = 0;
  std::string code;
  static LidTag make(int id) { return LidTag{id, "L" + std::to_string(id)}; }
};

enum class LoraTarget { Q, K, V, Ctc };

struct LoraConfig {
  int rank = 4;
  double alpha = 8.0;
  std::vector<LoraTarget> targets = {LoraTarget::Q, LoraTarget::K, LoraTarget::V,
                                     LoraTarget::Ctc};

  double scale() const { return alpha / static_cast<double>(rank); }
  bool has(LoraTarget t) const;
  void validate() const;
};

// Trainable low-rank delta around a frozen weight: W + (alpha/r) * B * A.
// B starts at zero so a freshly initialized adapter is an exact identity.
struct LoraAdapter {
  Param a;  // [r, d_in]
  Param b;  // [d_out, r]
  LoraConfig config;

  static LoraAdapter init(const std::string& name, int64_t d_out, int64_t d_in,
                          const LoraConfig& cfg, Rng& rng, double a_std = 0.02);
};

// Q/K/V adapters for one transformer layer.
struct LayerAdapters {
  std::optional<LoraAdapter> q, k, v;
  LoraAdapter* get(LoraTarget t);
  const LoraAdapter* get(LoraTarget t) const;
};

// One language's experts: upper-layer Q/K/V plus the CTC-head adapter.
struct LanguageExpert {
  std::map<int, LayerAdapters> layers;  // keyed by layer index
  std::optional<LoraAdapter> ctc;
};

// The full adapter inventory: shared adapters on the lower layers (always
// active) and per-language experts selected by routing. A given layer is
// owned by either the shared set or the per-language set, never both.
struct AdapterBank {
  LoraConfig config;
  std::map<int, LayerAdapters> shared;
  std::vector<LanguageExpert> per_language;

  int num_languages() const { return static_cast<int>(per_language.size()); }

  // Shared adapters on layers [0,k), per-language on [k,n_layers) + CTC.
  static AdapterBank make_hierarchical(const LoraConfig& cfg, int n_layers, int split_k,
                                       int n_languages, int64_t hidden, int64_t vocab,
                                       Rng& rng);
  // Per-language adapters on every layer + CTC; no shared set.
  static AdapterBank make_per_language(const LoraConfig& cfg, int n_layers, int n_languages,
                                       int64_t hidden, int64_t vocab, Rng& rng);

  std::vector<Param*> shared_params();
  std::vector<Param*> language_params(int lang);
  std::vector<Param*> all_params();
};

// Adapters registered under `lang` (upper-layer Q/K/V + CTC head). Shared
// adapters are excluded: they are always active, not routed. Throws
// RoutingError for an unknown language.
std::vector<const LoraAdapter*> route(const AdapterBank& bank, const LidTag& lang);

// W + (alpha/r) * B * A; pure.
Tensor lora_merge(const Tensor& w_base, const LoraAdapter& adapter);

// y = x W^T + b (+ scale * (x A^T) B^T when adapter is non-null). Gradients
// reach A and B only; the base weight enters as a leaf that is trainable
// only if the caller marked it so.
Tape::Var lora_apply(Tape& tape, Tape::Var x, const Param& w_base, const Param& bias,
                     const LoraAdapter* adapter);

}  // namespace mlasr
