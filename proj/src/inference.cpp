// Copyright 2026 The mlasr Authors
// SPDX-License-Identifier: Apache-2.0

#include "mlasr/inference.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "mlasr/errors.hpp"

namespace mlasr {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

// Base-path log-probs: every layer unadapted (or with the given language's
// adapters), weighted layer summation, CTC head.
Tape::Var summed_path_log_probs(ForwardGraph& g, Tape::Var x_pos, std::optional<LidTag> lang) {
  std::vector<Tape::Var> outs;
  g.forward_all(x_pos, lang, &outs);
  return g.ctc_log_probs(g.weighted_layer_sum(outs), lang);
}

}  // namespace

const char* strategy_name(Strategy s) {
  switch (s) {
    case Strategy::Known: return "known";
    case Strategy::TwoStage: return "two-stage";
    case Strategy::SinglePass: return "single-pass";
  }
  return "?";
}

Strategy strategy_from_name(const std::string& name) {
  if (name == "known") return Strategy::Known;
  if (name == "two-stage") return Strategy::TwoStage;
  if (name == "single-pass") return Strategy::SinglePass;
  throw ConfigError("unknown strategy '" + name + "'");
}

void check_strategy_compat(SystemKind kind, Strategy strategy) {
  if (strategy == Strategy::TwoStage && kind != SystemKind::PerLanguage)
    throw ConfigError(std::string("strategy two-stage needs a lidlora checkpoint, got ") +
                      system_kind_name(kind));
  if (strategy == Strategy::SinglePass && kind != SystemKind::Hierarchical)
    throw ConfigError(std::string("strategy single-pass needs an hlora checkpoint, got ") +
                      system_kind_name(kind));
}

double DecodeResult::total_ms() const {
  double s = 0.0;
  for (double v : stage_ms) s += v;
  return s;
}

DecodeResult decode_language_known(const System& sys, const Utterance& utt, const LidTag& lang,
                                   const Tokenizer& tokenizer) {
  const auto t0 = Clock::now();
  Tape tape;
  ForwardGraph g(tape, sys);
  Tape::Var x = g.add_positions(g.front_end(utt.features));
  Tape::Var lp = -1;
  switch (sys.kind) {
    case SystemKind::Base:
      lp = summed_path_log_probs(g, x, std::nullopt);
      break;
    case SystemKind::PerLanguage:
      lp = summed_path_log_probs(g, x, lang);
      break;
    case SystemKind::Hierarchical:
      lp = g.ctc_log_probs(g.forward_upper(g.forward_lower(x), lang), lang);
      break;
  }
  DecodeResult res;
  res.predicted_lang = lang;
  res.hypothesis = strip_leading_language_token(greedy_decode(tape.val(lp)), tokenizer);
  res.forward_passes = 1;
  res.stage_ms = {ms_since(t0)};
  return res;
}

int stage1_language_decision(const Tensor& log_probs, const TokenSeq& decoded,
                             const Tokenizer& tokenizer) {
  if (!decoded.empty() && tokenizer.is_language_token(decoded.front()))
    return tokenizer.language_of_token(decoded.front());
  // fallback: best max-over-frames posterior among the language tokens
  const int L = tokenizer.num_languages();
  std::vector<double> best(static_cast<size_t>(L), -std::numeric_limits<double>::infinity());
  for (int64_t t = 0; t < log_probs.rows(); ++t)
    for (int l = 0; l < L; ++l)
      best[static_cast<size_t>(l)] =
          std::max(best[static_cast<size_t>(l)], log_probs.at(t, tokenizer.language_token(l)));
  return argmax_lower_tie(best);
}

DecodeResult decode_two_stage(const System& sys, const Utterance& utt,
                              const Tokenizer& tokenizer) {
  check_strategy_compat(sys.kind, Strategy::TwoStage);
  DecodeResult res;

  // stage 1: unadapted base model
  const auto t0 = Clock::now();
  int lang_id;
  {
    Tape tape;
    ForwardGraph g(tape, sys);
    Tape::Var lp = summed_path_log_probs(g, g.add_positions(g.front_end(utt.features)),
                                         std::nullopt);
    const Tensor& log_probs = tape.val(lp);
    if (log_probs.rows() < 1) throw NumericError("two-stage: stage 1 produced no frames");
    lang_id = stage1_language_decision(log_probs, greedy_decode(log_probs), tokenizer);
  }
  res.stage_ms.push_back(ms_since(t0));

  // stage 2: full forward with the selected expert
  const auto t1 = Clock::now();
  {
    Tape tape;
    ForwardGraph g(tape, sys);
    Tape::Var lp = summed_path_log_probs(g, g.add_positions(g.front_end(utt.features)),
                                         LidTag::make(lang_id));
    res.hypothesis = strip_leading_language_token(greedy_decode(tape.val(lp)), tokenizer);
  }
  res.stage_ms.push_back(ms_since(t1));
  res.predicted_lang = LidTag::make(lang_id);
  res.forward_passes = 2;
  return res;
}

DecodeResult decode_single_pass(const System& sys, const Utterance& utt,
                                const Tokenizer& tokenizer, std::optional<int> forced_lang) {
  check_strategy_compat(sys.kind, Strategy::SinglePass);
  const auto t0 = Clock::now();
  Tape tape;
  ForwardGraph g(tape, sys);
  Tape::Var x_h = g.forward_lower(g.add_positions(g.front_end(utt.features)));

  DecodeResult res;
  res.lid_posterior = softmax_vector(tape.val(g.lid_logits(x_h)));
  if (static_cast<int>(res.lid_posterior.size()) != sys.bank->num_languages())
    throw RoutingError("single-pass: posterior over " + std::to_string(res.lid_posterior.size()) +
                       " languages but bank holds " + std::to_string(sys.bank->num_languages()));
  const int lang_id = forced_lang ? *forced_lang : argmax_lower_tie(res.lid_posterior);

  // upper forward consumes the very same X_h node; lower layers ran once
  const LidTag lang = LidTag::make(lang_id);
  Tape::Var lp = g.ctc_log_probs(g.forward_upper(x_h, lang), lang);
  res.hypothesis = strip_leading_language_token(greedy_decode(tape.val(lp)), tokenizer);
  res.predicted_lang = lang;
  res.forward_passes = 1;
  res.stage_ms = {ms_since(t0)};
  return res;
}

TimingSummary timing_report(const std::vector<DecodeResult>& results) {
  if (results.empty()) throw ConfigError("timing_report: no results");
  TimingSummary s;
  s.count = static_cast<int64_t>(results.size());
  std::vector<double> times;
  times.reserve(results.size());
  double fp = 0.0;
  for (const auto& r : results) {
    times.push_back(r.total_ms());
    s.mean_ms += r.total_ms();
    fp += r.forward_passes;
  }
  s.mean_ms /= static_cast<double>(s.count);
  s.mean_forward_passes = fp / static_cast<double>(s.count);
  std::sort(times.begin(), times.end());
  const size_t mid = times.size() / 2;
  s.median_ms = times.size() % 2 ? times[mid] : 0.5 * (times[mid - 1] + times[mid]);
  return s;
}

}  // namespace mlasr
