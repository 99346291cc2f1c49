// Copyright 2026 The mlasr Authors
// SPDX-License-Identifier: Apache-2.0

#include "mlasr/training.hpp"

#include <cmath>
#include <iostream>
#include <ostream>

#include <json.hpp>

#include "mlasr/errors.hpp"
#include "mlasr/inference.hpp"
#include "mlasr/metrics.hpp"

namespace mlasr {

using nlohmann::json;

void TrainConfig::validate() const {
  if (lambda_lid < 0.0 || lambda_lid > 1.0)
    throw ConfigError("train: lambda must lie in [0,1], got " + std::to_string(lambda_lid));
  if (!(lr > 0.0)) throw ConfigError("train: learning rate must be positive");
  if (batch_size < 1) throw ConfigError("train: batch size must be >= 1");
  if (base_phase1_epochs < 0 || base_phase2_epochs < 0 || adapt_epochs < 0)
    throw ConfigError("train: epoch counts must be non-negative");
}

const char* train_mode_name(TrainMode m) {
  switch (m) {
    case TrainMode::BasePhase1: return "base-phase1";
    case TrainMode::BasePhase2: return "base-phase2";
    case TrainMode::PerLanguage: return "lidlora";
    case TrainMode::Hierarchical: return "hlora";
  }
  return "?";
}

EpochSchedule build_epoch_schedule(const Corpus& corpus, int n_languages, int batch_size,
                                   uint64_t seed) {
  if (batch_size < 1) throw ConfigError("schedule: batch size must be >= 1");
  auto by_lang = corpus.indices_by_language(n_languages);
  for (int l = 0; l < n_languages; ++l)
    if (by_lang[static_cast<size_t>(l)].empty())
      throw CorpusError("schedule: language " + std::to_string(l) + " has no training utterances");

  Rng rng(seed);
  EpochSchedule schedule;
  for (int l = 0; l < n_languages; ++l) {
    auto& ids = by_lang[static_cast<size_t>(l)];
    rng.shuffle(ids);
    for (size_t i = 0; i < ids.size(); i += static_cast<size_t>(batch_size)) {
      Minibatch b;
      b.lang = l;
      const size_t end = std::min(ids.size(), i + static_cast<size_t>(batch_size));
      b.utt_indices.assign(ids.begin() + static_cast<std::ptrdiff_t>(i),
                           ids.begin() + static_cast<std::ptrdiff_t>(end));
      schedule.push_back(std::move(b));  // remainder batches are kept
    }
  }
  rng.shuffle(schedule);
  return schedule;
}

bool adam_update(const std::vector<Param*>& params, const std::vector<Tensor>& grads,
                 AdamState& state, double lr, double beta1, double beta2, double eps) {
  if (params.size() != grads.size())
    throw ConfigError("adam: " + std::to_string(params.size()) + " params but " +
                      std::to_string(grads.size()) + " gradients");
  for (size_t i = 0; i < params.size(); ++i) {
    require_shape(params[i]->value.same_shape(grads[i]), "adam", params[i]->value, grads[i]);
    if (!grads[i].all_finite()) {
      std::cerr << "[warn] adam: non-finite gradient on " << params[i]->name
                << ", step skipped\n";
      return false;
    }
  }
  for (size_t i = 0; i < params.size(); ++i) {
    Param& p = *params[i];
    const Tensor& g = grads[i];
    auto& slot = state.slots[&p];
    if (slot.t == 0) {
      slot.m = Tensor(p.value.shape());
      slot.v = Tensor(p.value.shape());
    }
    ++slot.t;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(slot.t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(slot.t));
    for (int64_t j = 0; j < p.value.size(); ++j) {
      slot.m[j] = beta1 * slot.m[j] + (1.0 - beta1) * g[j];
      slot.v[j] = beta2 * slot.v[j] + (1.0 - beta2) * g[j] * g[j];
      const double mhat = slot.m[j] / bc1;
      const double vhat = slot.v[j] / bc2;
      p.value[j] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
  return true;
}

namespace {

std::vector<Param*> trainable_for(System& sys, TrainMode mode, int lang) {
  switch (mode) {
    case TrainMode::BasePhase1:
      return sys.backbone.ctc_head_params();
    case TrainMode::BasePhase2:
      return sys.backbone.all_params();
    case TrainMode::PerLanguage:
      return sys.bank->language_params(lang);
    case TrainMode::Hierarchical: {
      std::vector<Param*> out = sys.bank->shared_params();
      auto lidp = sys.lid->params();
      out.insert(out.end(), lidp.begin(), lidp.end());
      auto lp = sys.bank->language_params(lang);
      out.insert(out.end(), lp.begin(), lp.end());
      return out;
    }
  }
  return {};
}

}  // namespace

LossBreakdown train_step(System& sys, const Corpus& corpus, const Minibatch& batch,
                         const Tokenizer& tokenizer, TrainMode mode, const TrainConfig& cfg,
                         AdamState& opt) {
  if ((mode == TrainMode::PerLanguage || mode == TrainMode::Hierarchical) && !sys.bank)
    throw ConfigError("train_step: adapter modes need a bank");
  if (mode == TrainMode::Hierarchical && !sys.lid)
    throw ConfigError("train_step: hierarchical mode needs the LID head");
  if (batch.utt_indices.empty()) throw ConfigError("train_step: empty minibatch");

  std::vector<Param*> params = trainable_for(sys, mode, batch.lang);
  ParamSet trainable(params.begin(), params.end());
  Tape tape(&trainable);
  ForwardGraph g(tape, sys);

  const LidTag lang = LidTag::make(batch.lang);
  std::vector<Tape::Var> asr_losses;
  std::vector<Tape::Var> lid_losses;
  LossBreakdown out;
  out.lang = batch.lang;

  for (int idx : batch.utt_indices) {
    const Utterance& utt = corpus.utterances[static_cast<size_t>(idx)];
    if (utt.lang != batch.lang)
      throw CorpusError("train_step: utterance " + utt.utt_id + " violates the monolingual batch");
    Tape::Var x = g.add_positions(g.front_end(utt.features));
    Tape::Var log_probs = -1;
    TokenSeq target = utt.tokens;
    switch (mode) {
      case TrainMode::BasePhase1:
      case TrainMode::BasePhase2: {
        std::vector<Tape::Var> outs;
        g.forward_all(x, std::nullopt, &outs);
        log_probs = g.ctc_log_probs(g.weighted_layer_sum(outs), std::nullopt);
        target = prepend_language_token(utt.tokens, utt.lang, tokenizer);
        break;
      }
      case TrainMode::PerLanguage: {
        std::vector<Tape::Var> outs;
        g.forward_all(x, lang, &outs);
        log_probs = g.ctc_log_probs(g.weighted_layer_sum(outs), lang);
        break;
      }
      case TrainMode::Hierarchical: {
        Tape::Var x_h = g.forward_lower(x);
        log_probs = g.ctc_log_probs(g.forward_upper(x_h, lang), lang);
        Tape::Var ce =
            tape.scale(tape.pick(tape.log_softmax_rows(g.lid_logits(x_h)), 0, utt.lang), -1.0);
        lid_losses.push_back(ce);
        break;
      }
    }
    Tape::Var loss = tape.ctc_loss(log_probs, target, tokenizer.blank_id());
    if (!std::isfinite(tape.scalar(loss))) {
      std::cerr << "[warn] ctc: target infeasible for " << utt.utt_id
                << ", excluded from batch mean\n";
      ++out.skipped_utterances;
      continue;
    }
    asr_losses.push_back(loss);
  }

  if (asr_losses.empty()) {
    std::cerr << "[warn] train_step: every utterance in the batch was infeasible, step skipped\n";
    out.l_asr = std::numeric_limits<double>::infinity();
    out.combined = out.l_asr;
    return out;
  }

  Tape::Var l_asr = asr_losses[0];
  for (size_t i = 1; i < asr_losses.size(); ++i) l_asr = tape.add(l_asr, asr_losses[i]);
  l_asr = tape.scale(l_asr, 1.0 / static_cast<double>(asr_losses.size()));

  Tape::Var combined = l_asr;
  if (mode == TrainMode::Hierarchical) {
    Tape::Var l_lid = lid_losses[0];
    for (size_t i = 1; i < lid_losses.size(); ++i) l_lid = tape.add(l_lid, lid_losses[i]);
    l_lid = tape.scale(l_lid, 1.0 / static_cast<double>(lid_losses.size()));
    // both terms always contribute nodes; lambda only scales them
    combined = tape.add(tape.scale(l_asr, 1.0 - cfg.lambda_lid),
                        tape.scale(l_lid, cfg.lambda_lid));
    out.l_lid = tape.scalar(l_lid);
  }

  tape.backward(combined);
  std::vector<Tensor> grads;
  grads.reserve(params.size());
  for (Param* p : params) grads.push_back(tape.grad_of(*p));
  adam_update(params, grads, opt, cfg.lr, cfg.beta1, cfg.beta2, cfg.eps);

  out.l_asr = tape.scalar(l_asr);
  out.combined = tape.scalar(combined);
  return out;
}

void TrainLog::step(TrainMode mode, const LossBreakdown& loss) {
  if (!out_) return;
  json rec = {{"step", loss.step},
              {"mode", train_mode_name(mode)},
              {"lang", loss.lang},
              {"l_asr", loss.l_asr},
              {"combined", loss.combined}};
  if (loss.l_lid) rec["l_lid"] = *loss.l_lid;
  if (loss.skipped_utterances > 0) rec["skipped"] = loss.skipped_utterances;
  (*out_) << rec.dump() << "\n";
}

void TrainLog::epoch(TrainMode mode, int epoch, double dev_error_rate) {
  if (!out_) return;
  json rec = {{"epoch", epoch},
              {"mode", train_mode_name(mode)},
              {"dev_error_rate", dev_error_rate}};
  (*out_) << rec.dump() << "\n";
}

double dev_error_rate(const System& sys, const Corpus& dev, const Tokenizer& tokenizer) {
  const int L = tokenizer.num_languages();
  std::vector<ErrorCounts> counts(static_cast<size_t>(L));
  std::vector<int64_t> scored(static_cast<size_t>(L), 0);
  for (const auto& utt : dev.utterances) {
    const DecodeResult res =
        decode_language_known(sys, utt, LidTag::make(utt.lang), tokenizer);
    counts[static_cast<size_t>(utt.lang)] += edit_distance(utt.tokens, res.hypothesis);
    ++scored[static_cast<size_t>(utt.lang)];
  }
  double sum = 0.0;
  int used = 0;
  for (int l = 0; l < L; ++l) {
    if (scored[static_cast<size_t>(l)] == 0) continue;
    sum += counts[static_cast<size_t>(l)].rate();
    ++used;
  }
  return used > 0 ? sum / used : 0.0;
}

namespace {

double run_epochs(System& sys, const Corpus& train, const Corpus& dev, const Tokenizer& tokenizer,
                  const TrainConfig& cfg, TrainMode mode, int epochs, int epoch_offset,
                  TrainLog& log, AdamState& opt, int64_t& step_counter) {
  double last_dev = std::numeric_limits<double>::quiet_NaN();
  for (int e = 0; e < epochs; ++e) {
    const int global_epoch = epoch_offset + e;
    const EpochSchedule schedule =
        build_epoch_schedule(train, tokenizer.num_languages(), cfg.batch_size,
                             substream_seed(cfg.seed, "schedule", static_cast<uint64_t>(global_epoch)));
    for (const Minibatch& batch : schedule) {
      LossBreakdown loss = train_step(sys, train, batch, tokenizer, mode, cfg, opt);
      loss.step = ++step_counter;
      log.step(mode, loss);
    }
    last_dev = dev_error_rate(sys, dev, tokenizer);
    log.epoch(mode, global_epoch, last_dev);
  }
  return last_dev;
}

}  // namespace

double train_base(System& sys, const Corpus& train, const Corpus& dev, const Tokenizer& tokenizer,
                  const TrainConfig& cfg, TrainLog& log) {
  cfg.validate();
  if (sys.kind != SystemKind::Base) throw ConfigError("train_base: system is not a base model");
  AdamState opt;
  int64_t steps = 0;
  run_epochs(sys, train, dev, tokenizer, cfg, TrainMode::BasePhase1, cfg.base_phase1_epochs, 0,
             log, opt, steps);
  return run_epochs(sys, train, dev, tokenizer, cfg, TrainMode::BasePhase2,
                    cfg.base_phase2_epochs, cfg.base_phase1_epochs, log, opt, steps);
}

double train_per_language_adapters(System& sys, const Corpus& train, const Corpus& dev,
                                   const Tokenizer& tokenizer, const TrainConfig& cfg,
                                   TrainLog& log) {
  cfg.validate();
  if (sys.kind != SystemKind::PerLanguage || !sys.bank)
    throw ConfigError("train_per_language_adapters: system is not a per-language bank");
  AdamState opt;
  int64_t steps = 0;
  return run_epochs(sys, train, dev, tokenizer, cfg, TrainMode::PerLanguage, cfg.adapt_epochs, 0,
                    log, opt, steps);
}

double train_hierarchical(System& sys, const Corpus& train, const Corpus& dev,
                          const Tokenizer& tokenizer, const TrainConfig& cfg, TrainLog& log) {
  cfg.validate();
  if (sys.kind != SystemKind::Hierarchical || !sys.bank || !sys.lid)
    throw ConfigError("train_hierarchical: system lacks the hierarchical bank or LID head");
  AdamState opt;
  int64_t steps = 0;
  return run_epochs(sys, train, dev, tokenizer, cfg, TrainMode::Hierarchical, cfg.adapt_epochs, 0,
                    log, opt, steps);
}

}  // namespace mlasr
