// Copyright 2026 The mlasr Authors
// SPDX-License-Identifier: Apache-2.0

#include "mlasr/model.hpp"

#include <cmath>

#include "mlasr/errors.hpp"

namespace mlasr {

void ModelConfig::validate() const {
  if (n_layers < 2) throw ConfigError("model: need at least 2 layers, got " + std::to_string(n_layers));
  if (split_k < 1 || split_k >= n_layers)
    throw ConfigError("model: split k must satisfy 1 <= k <= N-1, got k=" + std::to_string(split_k) +
                      " with N=" + std::to_string(n_layers));
  if (hidden < 1 || heads < 1 || hidden % heads != 0)
    throw ConfigError("model: hidden size " + std::to_string(hidden) +
                      " must be divisible by head count " + std::to_string(heads));
  if (vocab < 2) throw ConfigError("model: vocabulary must hold at least blank + 1 token");
  if (feat_dim < 1) throw ConfigError("model: feature dim must be >= 1");
  if (downsample < 1) throw ConfigError("model: downsample stride must be >= 1");
  if (ffn_mult < 1) throw ConfigError("model: ffn multiplier must be >= 1");
}

namespace {

Param xavier(const std::string& name, int64_t d_out, int64_t d_in, Rng& rng) {
  Param p{name, Tensor({d_out, d_in})};
  const double std = std::sqrt(2.0 / static_cast<double>(d_in + d_out));
  rng.fill_normal(p.value.data(), p.value.size(), 0.0, std);
  return p;
}

Param zeros_row(const std::string& name, int64_t n) { return Param{name, Tensor({1, n})}; }
Param ones_row(const std::string& name, int64_t n) {
  return Param{name, Tensor::full({1, n}, 1.0)};
}

}  // namespace

Backbone Backbone::init(const ModelConfig& cfg, Rng& rng) {
  cfg.validate();
  Backbone bb;
  bb.config = cfg;
  const int64_t d = cfg.hidden;
  const int64_t win = static_cast<int64_t>(cfg.downsample) * cfg.feat_dim;
  bb.fe_w = xavier("backbone/frontend/W", d, win, rng);
  bb.fe_b = zeros_row("backbone/frontend/b", d);
  for (int l = 0; l < cfg.n_layers; ++l) {
    const std::string p = "backbone/layer" + std::to_string(l);
    LayerParams lp;
    lp.ln1_g = ones_row(p + "/ln1/g", d);
    lp.ln1_b = zeros_row(p + "/ln1/b", d);
    lp.ln2_g = ones_row(p + "/ln2/g", d);
    lp.ln2_b = zeros_row(p + "/ln2/b", d);
    lp.wq = xavier(p + "/q_proj/W", d, d, rng);
    lp.bq = zeros_row(p + "/q_proj/b", d);
    lp.wk = xavier(p + "/k_proj/W", d, d, rng);
    lp.bk = zeros_row(p + "/k_proj/b", d);
    lp.wv = xavier(p + "/v_proj/W", d, d, rng);
    lp.bv = zeros_row(p + "/v_proj/b", d);
    lp.wo = xavier(p + "/o_proj/W", d, d, rng);
    lp.bo = zeros_row(p + "/o_proj/b", d);
    lp.w1 = xavier(p + "/ffn/W1", d * cfg.ffn_mult, d, rng);
    lp.b1 = zeros_row(p + "/ffn/b1", d * cfg.ffn_mult);
    lp.w2 = xavier(p + "/ffn/W2", d, d * cfg.ffn_mult, rng);
    lp.b2 = zeros_row(p + "/ffn/b2", d);
    bb.layers.push_back(std::move(lp));
  }
  bb.layer_sum_w = zeros_row("backbone/layer_sum/w", cfg.n_layers);
  bb.ctc_w = xavier("backbone/ctc/W", cfg.vocab, d, rng);
  bb.ctc_b = zeros_row("backbone/ctc/b", cfg.vocab);
  return bb;
}

std::vector<Param*> Backbone::all_params() {
  std::vector<Param*> out = {&fe_w, &fe_b};
  for (auto& l : layers)
    for (Param* p : {&l.ln1_g, &l.ln1_b, &l.ln2_g, &l.ln2_b, &l.wq, &l.bq, &l.wk, &l.bk,
                     &l.wv, &l.bv, &l.wo, &l.bo, &l.w1, &l.b1, &l.w2, &l.b2})
      out.push_back(p);
  out.push_back(&layer_sum_w);
  out.push_back(&ctc_w);
  out.push_back(&ctc_b);
  return out;
}

std::vector<Param*> Backbone::ctc_head_params() { return {&ctc_w, &ctc_b, &layer_sum_w}; }

LidHead LidHead::init(int n_languages, int64_t hidden, Rng& rng) {
  LidHead h;
  h.w = Param{"lid/linear/W", Tensor({n_languages, hidden})};
  const double std = std::sqrt(2.0 / static_cast<double>(hidden + n_languages));
  rng.fill_normal(h.w.value.data(), h.w.value.size(), 0.0, std);
  h.b = Param{"lid/linear/b", Tensor({1, n_languages})};
  return h;
}

const char* system_kind_name(SystemKind k) {
  switch (k) {
    case SystemKind::Base: return "base";
    case SystemKind::PerLanguage: return "lidlora";
    case SystemKind::Hierarchical: return "hlora";
  }
  return "?";
}

SystemKind system_kind_from_name(const std::string& name) {
  if (name == "base") return SystemKind::Base;
  if (name == "lidlora") return SystemKind::PerLanguage;
  if (name == "hlora") return SystemKind::Hierarchical;
  throw ConfigError("unknown system kind '" + name + "'");
}

Tensor sinusoidal_positions(int64_t t_len, int64_t dim) {
  Tensor pos({t_len, dim});
  for (int64_t t = 0; t < t_len; ++t) {
    for (int64_t j = 0; j < dim; j += 2) {
      const double rate = std::pow(10000.0, -static_cast<double>(j) / static_cast<double>(dim));
      pos.at(t, j) = std::sin(static_cast<double>(t) * rate);
      if (j + 1 < dim) pos.at(t, j + 1) = std::cos(static_cast<double>(t) * rate);
    }
  }
  return pos;
}

Tensor front_end_reference(const Tensor& features, const Tensor& fe_w, const Tensor& fe_b,
                           int downsample) {
  const int64_t T = features.rows(), F = features.cols();
  const int64_t s = downsample;
  const int64_t Tp = (T + s - 1) / s;
  const int64_t d = fe_w.rows();
  Tensor out({Tp, d});
  for (int64_t t = 0; t < Tp; ++t) {
    for (int64_t o = 0; o < d; ++o) {
      double acc = fe_b[o];
      for (int64_t w = 0; w < s; ++w) {
        const int64_t src = t * s + w;
        if (src >= T) continue;  // zero pad past the end
        for (int64_t f = 0; f < F; ++f) acc += fe_w.at(o, w * F + f) * features.at(src, f);
      }
      out.at(t, o) = acc;
    }
  }
  return out;
}

Tape::Var ForwardGraph::front_end(const Tensor& features) {
  const ModelConfig& cfg = sys_.backbone.config;
  const int64_t T = features.rows(), F = features.cols();
  if (F != cfg.feat_dim)
    throw ShapeError("front_end: expected " + std::to_string(cfg.feat_dim) + " features, got " +
                     std::to_string(F));
  const int64_t s = cfg.downsample;
  if (T < s)
    throw ConfigError("front_end: input of " + std::to_string(T) +
                      " frames is shorter than the stride " + std::to_string(s));
  const int64_t Tp = (T + s - 1) / s;
  Tensor windows({Tp, s * F});
  for (int64_t t = 0; t < Tp; ++t)
    for (int64_t w = 0; w < s; ++w) {
      const int64_t src = t * s + w;
      if (src >= T) break;
      for (int64_t f = 0; f < F; ++f) windows.at(t, w * F + f) = features.at(src, f);
    }
  return linear(tape_, tape_.constant(std::move(windows)), tape_.leaf(sys_.backbone.fe_w),
                tape_.leaf(sys_.backbone.fe_b));
}

Tape::Var ForwardGraph::add_positions(Tape::Var x) {
  const Tensor& X = tape_.val(x);
  return tape_.add(x, tape_.constant(sinusoidal_positions(X.rows(), X.cols())));
}

const LayerAdapters* ForwardGraph::adapters_for_layer(int layer, std::optional<int> lang) const {
  if (!sys_.bank) return nullptr;
  const AdapterBank& bank = *sys_.bank;
  auto sh = bank.shared.find(layer);
  const LayerAdapters* from_lang = nullptr;
  if (lang) {
    if (*lang < 0 || *lang >= bank.num_languages())
      throw RoutingError("forward: language id " + std::to_string(*lang) + " not in bank");
    const auto& ex = bank.per_language[static_cast<size_t>(*lang)];
    auto it = ex.layers.find(layer);
    if (it != ex.layers.end()) from_lang = &it->second;
  }
  if (sh != bank.shared.end() && from_lang)
    throw ConfigError("forward: layer " + std::to_string(layer) +
                      " has both shared and language adapters");
  if (sh != bank.shared.end()) return &sh->second;
  return from_lang;
}

Tape::Var ForwardGraph::run_layer(Tape::Var x, int layer_idx, const LayerAdapters* ad) {
  const LayerParams& lp = sys_.backbone.layers[static_cast<size_t>(layer_idx)];
  const ModelConfig& cfg = sys_.backbone.config;
  Tape& t = tape_;

  // pre-norm attention block
  Tape::Var h = t.layer_norm(x, t.leaf(lp.ln1_g), t.leaf(lp.ln1_b));
  Tape::Var q = lora_apply(t, h, lp.wq, lp.bq, ad ? ad->get(LoraTarget::Q) : nullptr);
  Tape::Var k = lora_apply(t, h, lp.wk, lp.bk, ad ? ad->get(LoraTarget::K) : nullptr);
  Tape::Var v = lora_apply(t, h, lp.wv, lp.bv, ad ? ad->get(LoraTarget::V) : nullptr);

  const int64_t dh = cfg.head_dim();
  std::vector<Tape::Var> heads;
  heads.reserve(static_cast<size_t>(cfg.heads));
  for (int hd = 0; hd < cfg.heads; ++hd) {
    const int64_t c0 = hd * dh;
    Tape::Var qs = t.slice_cols(q, c0, dh);
    Tape::Var ks = t.slice_cols(k, c0, dh);
    Tape::Var vs = t.slice_cols(v, c0, dh);
    Tape::Var scores = t.scale(t.matmul_nt(qs, ks), 1.0 / std::sqrt(static_cast<double>(dh)));
    heads.push_back(t.matmul(t.softmax_rows(scores), vs));
  }
  Tape::Var attn = t.concat_cols(heads);
  Tape::Var attn_out = linear(t, attn, t.leaf(lp.wo), t.leaf(lp.bo));
  Tape::Var x1 = t.add(x, attn_out);

  // pre-norm ffn block
  Tape::Var h2 = t.layer_norm(x1, t.leaf(lp.ln2_g), t.leaf(lp.ln2_b));
  Tape::Var f1 = t.gelu(linear(t, h2, t.leaf(lp.w1), t.leaf(lp.b1)));
  Tape::Var f2 = linear(t, f1, t.leaf(lp.w2), t.leaf(lp.b2));
  return t.add(x1, f2);
}

Tape::Var ForwardGraph::forward_lower(Tape::Var x_pos) {
  ++sys_.counters.lower_passes;
  Tape::Var x = x_pos;
  for (int l = 0; l < sys_.backbone.config.split_k; ++l)
    x = run_layer(x, l, adapters_for_layer(l, std::nullopt));
  return x;
}

Tape::Var ForwardGraph::forward_upper(Tape::Var x_h, const LidTag& lang) {
  ++sys_.counters.upper_passes;
  if (sys_.bank && (lang.id < 0 || lang.id >= sys_.bank->num_languages()))
    throw RoutingError("forward_upper: language id " + std::to_string(lang.id) + " not in bank");
  Tape::Var x = x_h;
  for (int l = sys_.backbone.config.split_k; l < sys_.backbone.config.n_layers; ++l)
    x = run_layer(x, l, adapters_for_layer(l, lang.id));
  return x;
}

Tape::Var ForwardGraph::forward_all(Tape::Var x_pos, std::optional<LidTag> lang,
                                    std::vector<Tape::Var>* layer_outputs) {
  ++sys_.counters.lower_passes;
  ++sys_.counters.upper_passes;
  std::optional<int> lid;
  if (lang) {
    if (sys_.bank && (lang->id < 0 || lang->id >= sys_.bank->num_languages()))
      throw RoutingError("forward_all: language id " + std::to_string(lang->id) + " not in bank");
    lid = lang->id;
  }
  Tape::Var x = x_pos;
  for (int l = 0; l < sys_.backbone.config.n_layers; ++l) {
    x = run_layer(x, l, adapters_for_layer(l, lid));
    if (layer_outputs) layer_outputs->push_back(x);
  }
  return x;
}

Tape::Var ForwardGraph::weighted_layer_sum(const std::vector<Tape::Var>& layer_outputs) {
  if (layer_outputs.empty()) throw ConfigError("weighted_layer_sum: no layer outputs");
  const Tensor& w = sys_.backbone.layer_sum_w.value;
  if (w.size() != static_cast<int64_t>(layer_outputs.size()))
    throw ConfigError("weighted_layer_sum: " + std::to_string(layer_outputs.size()) +
                      " outputs but " + std::to_string(w.size()) + " weights");
  Tape& t = tape_;
  Tape::Var sw = t.softmax_rows(t.leaf(sys_.backbone.layer_sum_w));
  Tape::Var acc = t.mul_scalar(layer_outputs[0], t.pick(sw, 0, 0));
  for (size_t l = 1; l < layer_outputs.size(); ++l)
    acc = t.add(acc, t.mul_scalar(layer_outputs[l], t.pick(sw, 0, static_cast<int64_t>(l))));
  return acc;
}

Tape::Var ForwardGraph::lid_logits(Tape::Var x_h) {
  if (!sys_.lid) throw ConfigError("lid_logits: system has no LID head");
  return linear(tape_, tape_.mean_rows(x_h), tape_.leaf(sys_.lid->w), tape_.leaf(sys_.lid->b));
}

Tape::Var ForwardGraph::ctc_log_probs(Tape::Var x, std::optional<LidTag> lang) {
  const LoraAdapter* ad = nullptr;
  if (lang && sys_.bank) {
    if (lang->id < 0 || lang->id >= sys_.bank->num_languages())
      throw RoutingError("ctc_log_probs: language id " + std::to_string(lang->id) + " not in bank");
    const auto& ex = sys_.bank->per_language[static_cast<size_t>(lang->id)];
    if (ex.ctc) ad = &*ex.ctc;
  }
  Tape::Var logits = lora_apply(tape_, x, sys_.backbone.ctc_w, sys_.backbone.ctc_b, ad);
  return tape_.log_softmax_rows(logits);
}

std::vector<double> softmax_vector(const Tensor& logits_row) {
  std::vector<double> out(static_cast<size_t>(logits_row.size()));
  double m = logits_row[0];
  for (int64_t i = 1; i < logits_row.size(); ++i) m = std::max(m, logits_row[i]);
  double s = 0.0;
  for (int64_t i = 0; i < logits_row.size(); ++i) {
    out[static_cast<size_t>(i)] = std::exp(logits_row[i] - m);
    s += out[static_cast<size_t>(i)];
  }
  for (auto& v : out) v /= s;
  return out;
}

int argmax_lower_tie(const std::vector<double>& v) {
  int best = 0;
  for (size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = static_cast<int>(i);
  return best;
}

}  // namespace mlasr
