// Copyright 2026 The mlasr Authors
// SPDX-License-Identifier: Apache-2.0

#include "mlasr/lora.hpp"

#include <algorithm>
#include <cmath>

#include "mlasr/errors.hpp"

namespace mlasr {

bool LoraConfig::has(LoraTarget t) const {
  return std::find(targets.begin(), targets.end(), t) != targets.end();
}

void LoraConfig::validate() const {
  if (rank < 1) throw ConfigError("lora: rank must be >= 1, got " + std::to_string(rank));
  if (!(alpha > 0.0)) throw ConfigError("lora: alpha must be > 0");
  if (!std::isfinite(scale())) throw ConfigError("lora: alpha/rank is not finite");
}

LoraAdapter LoraAdapter::init(const std::string& name, int64_t d_out, int64_t d_in,
                              const LoraConfig& cfg, Rng& rng, double a_std) {
  cfg.validate();
  LoraAdapter ad;
  ad.config = cfg;
  ad.a = Param{name + "/A", Tensor({cfg.rank, d_in})};
  ad.b = Param{name + "/B", Tensor({d_out, cfg.rank})};  // zero: fresh delta is identity
  rng.fill_normal(ad.a.value.data(), ad.a.value.size(), 0.0, a_std);
  return ad;
}

LoraAdapter* LayerAdapters::get(LoraTarget t) {
  switch (t) {
    case LoraTarget::Q: return q ? &*q : nullptr;
    case LoraTarget::K: return k ? &*k : nullptr;
    case LoraTarget::V: return v ? &*v : nullptr;
    default: return nullptr;
  }
}

const LoraAdapter* LayerAdapters::get(LoraTarget t) const {
  return const_cast<LayerAdapters*>(this)->get(t);
}

namespace {

LayerAdapters make_layer_adapters(const std::string& prefix, const LoraConfig& cfg,
                                  int64_t hidden, Rng& rng) {
  LayerAdapters la;
  if (cfg.has(LoraTarget::Q))
    la.q = LoraAdapter::init(prefix + "/q_proj", hidden, hidden, cfg, rng);
  if (cfg.has(LoraTarget::K))
    la.k = LoraAdapter::init(prefix + "/k_proj", hidden, hidden, cfg, rng);
  if (cfg.has(LoraTarget::V))
    la.v = LoraAdapter::init(prefix + "/v_proj", hidden, hidden, cfg, rng);
  return la;
}

void collect_layer(LayerAdapters& la, std::vector<Param*>& out) {
  for (auto t : {LoraTarget::Q, LoraTarget::K, LoraTarget::V}) {
    if (auto* ad = la.get(t)) {
      out.push_back(&ad->a);
      out.push_back(&ad->b);
    }
  }
}

LanguageExpert make_expert(const std::string& prefix, const LoraConfig& cfg, int layer_lo,
                           int layer_hi, int64_t hidden, int64_t vocab, Rng& rng) {
  LanguageExpert ex;
  for (int l = layer_lo; l < layer_hi; ++l)
    ex.layers[l] = make_layer_adapters(prefix + "/layer" + std::to_string(l), cfg, hidden, rng);
  if (cfg.has(LoraTarget::Ctc))
    ex.ctc = LoraAdapter::init(prefix + "/ctc", vocab, hidden, cfg, rng);
  return ex;
}

}  // namespace

AdapterBank AdapterBank::make_hierarchical(const LoraConfig& cfg, int n_layers, int split_k,
                                           int n_languages, int64_t hidden, int64_t vocab,
                                           Rng& rng) {
  cfg.validate();
  if (split_k < 1 || split_k >= n_layers)
    throw ConfigError("adapter bank: split k must satisfy 1 <= k <= N-1, got k=" +
                      std::to_string(split_k) + " with N=" + std::to_string(n_layers));
  AdapterBank bank;
  bank.config = cfg;
  for (int l = 0; l < split_k; ++l)
    bank.shared[l] = make_layer_adapters("lora/shared/layer" + std::to_string(l), cfg, hidden, rng);
  for (int i = 0; i < n_languages; ++i)
    bank.per_language.push_back(
        make_expert("lora/lang" + std::to_string(i), cfg, split_k, n_layers, hidden, vocab, rng));
  return bank;
}

AdapterBank AdapterBank::make_per_language(const LoraConfig& cfg, int n_layers, int n_languages,
                                           int64_t hidden, int64_t vocab, Rng& rng) {
  cfg.validate();
  AdapterBank bank;
  bank.config = cfg;
  for (int i = 0; i < n_languages; ++i)
    bank.per_language.push_back(
        make_expert("lora/lang" + std::to_string(i), cfg, 0, n_layers, hidden, vocab, rng));
  return bank;
}

std::vector<Param*> AdapterBank::shared_params() {
  std::vector<Param*> out;
  for (auto& [l, la] : shared) collect_layer(la, out);
  return out;
}

std::vector<Param*> AdapterBank::language_params(int lang) {
  if (lang < 0 || lang >= num_languages())
    throw RoutingError("adapter bank: unknown language id " + std::to_string(lang));
  std::vector<Param*> out;
  LanguageExpert& ex = per_language[static_cast<size_t>(lang)];
  for (auto& [l, la] : ex.layers) collect_layer(la, out);
  if (ex.ctc) {
    out.push_back(&ex.ctc->a);
    out.push_back(&ex.ctc->b);
  }
  return out;
}

std::vector<Param*> AdapterBank::all_params() {
  std::vector<Param*> out = shared_params();
  for (int i = 0; i < num_languages(); ++i) {
    auto lp = language_params(i);
    out.insert(out.end(), lp.begin(), lp.end());
  }
  return out;
}

std::vector<const LoraAdapter*> route(const AdapterBank& bank, const LidTag& lang) {
  if (lang.id < 0 || lang.id >= bank.num_languages())
    throw RoutingError("route: language id " + std::to_string(lang.id) +
                       " not in bank of " + std::to_string(bank.num_languages()) +
                       " languages (corrupted LID decision upstream?)");
  std::vector<const LoraAdapter*> out;
  const LanguageExpert& ex = bank.per_language[static_cast<size_t>(lang.id)];
  for (const auto& [l, la] : ex.layers)
    for (auto t : {LoraTarget::Q, LoraTarget::K, LoraTarget::V})
      if (const auto* ad = la.get(t)) out.push_back(ad);
  if (ex.ctc) out.push_back(&*ex.ctc);
  return out;
}

Tensor lora_merge(const Tensor& w_base, const LoraAdapter& adapter) {
  const Tensor& A = adapter.a.value;
  const Tensor& B = adapter.b.value;
  require_shape(B.rows() == w_base.rows() && A.cols() == w_base.cols() && B.cols() == A.rows(),
                "lora_merge", w_base, B);
  Tensor merged = w_base;
  const double s = adapter.config.scale();
  Tensor delta = mm_nn(B, A);
  axpy_inplace(merged, s, delta);
  return merged;
}

Tape::Var lora_apply(Tape& tape, Tape::Var x, const Param& w_base, const Param& bias,
                     const LoraAdapter* adapter) {
  Tape::Var y = linear(tape, x, tape.leaf(w_base), tape.leaf(bias));
  if (!adapter) return y;
  const Tensor& X = tape.val(x);
  const Tensor& A = adapter->a.value;
  const Tensor& B = adapter->b.value;
  require_shape(A.cols() == X.cols() && B.rows() == w_base.value.rows() && B.cols() == A.rows(),
                "lora_apply", A, B);
  Tape::Var xa = tape.matmul_nt(x, tape.leaf(adapter->a));   // [T, r]
  Tape::Var xab = tape.matmul_nt(xa, tape.leaf(adapter->b));  // [T, d_out]
  return tape.add(y, tape.scale(xab, adapter->config.scale()));
}

}  // namespace mlasr
