// Copyright 2026 The mlasr Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "mlasr/errors.hpp"
#include "mlasr/inference.hpp"
#include "mlasr/pipeline.hpp"

using namespace mlasr;

namespace {

struct Fixture {
  Tokenizer tokenizer{3, 12};
  ModelConfig model;
  System base, per_language, hierarchical;
  Utterance utt;

  Fixture() {
    model.n_layers = 3;
    model.split_k = 1;
    model.hidden = 16;
    model.heads = 2;
    model.feat_dim = 6;
    model.downsample = 2;
    model.vocab = tokenizer.vocab_size();

    Rng rng(81);
    base.kind = SystemKind::Base;
    base.n_languages = 3;
    base.backbone = Backbone::init(model, rng);

    LoraConfig lc;
    lc.rank = 2;
    lc.alpha = 4.0;
    per_language = clone_base_as_per_language(base, lc, 3, 82);
    hierarchical = clone_base_as_hierarchical(base, lc, 3, model.split_k, 82);

    // random non-zero adapters and LID head so languages genuinely differ
    Rng pert(83);
    for (Param* p : per_language.bank->all_params())
      pert.fill_normal(p->value.data(), p->value.size(), 0.0, 0.3);
    for (Param* p : hierarchical.bank->all_params())
      pert.fill_normal(p->value.data(), p->value.size(), 0.0, 0.3);
    pert.fill_normal(hierarchical.lid->w.value.data(), hierarchical.lid->w.value.size(), 0.0, 0.5);

    utt.utt_id = "probe";
    utt.lang = 1;
    utt.features = Tensor({12, 6});
    pert.fill_normal(utt.features.data(), utt.features.size(), 0.0, 1.0);
    utt.tokens = {5, 7};
  }
};

}  // namespace

TEST_SUITE_BEGIN("inference");

TEST_CASE("strategy compatibility matrix") {
  CHECK_NOTHROW(check_strategy_compat(SystemKind::Base, Strategy::Known));
  CHECK_NOTHROW(check_strategy_compat(SystemKind::PerLanguage, Strategy::Known));
  CHECK_NOTHROW(check_strategy_compat(SystemKind::Hierarchical, Strategy::Known));
  CHECK_NOTHROW(check_strategy_compat(SystemKind::PerLanguage, Strategy::TwoStage));
  CHECK_NOTHROW(check_strategy_compat(SystemKind::Hierarchical, Strategy::SinglePass));
  CHECK_THROWS_AS(check_strategy_compat(SystemKind::Hierarchical, Strategy::TwoStage), ConfigError);
  CHECK_THROWS_AS(check_strategy_compat(SystemKind::Base, Strategy::TwoStage), ConfigError);
  CHECK_THROWS_AS(check_strategy_compat(SystemKind::Base, Strategy::SinglePass), ConfigError);
  CHECK_THROWS_AS(check_strategy_compat(SystemKind::PerLanguage, Strategy::SinglePass),
                  ConfigError);
}

TEST_CASE("forward-pass counts are structural") {
  Fixture f;
  CHECK(decode_language_known(f.hierarchical, f.utt, LidTag::make(0), f.tokenizer)
            .forward_passes == 1);
  CHECK(decode_single_pass(f.hierarchical, f.utt, f.tokenizer).forward_passes == 1);
  const DecodeResult two = decode_two_stage(f.per_language, f.utt, f.tokenizer);
  CHECK(two.forward_passes == 2);
  CHECK(two.stage_ms.size() == 2);
}

TEST_CASE("single-pass runs the lower layers exactly once") {
  Fixture f;
  f.hierarchical.counters.reset();
  decode_single_pass(f.hierarchical, f.utt, f.tokenizer);
  CHECK(f.hierarchical.counters.lower_passes == 1);
  CHECK(f.hierarchical.counters.upper_passes == 1);

  f.per_language.counters.reset();
  decode_two_stage(f.per_language, f.utt, f.tokenizer);
  CHECK(f.per_language.counters.lower_passes == 2);  // one full pass per stage
}

TEST_CASE("forcing the posterior reproduces language-known decoding exactly") {
  Fixture f;
  for (int lang = 0; lang < 3; ++lang) {
    const DecodeResult forced = decode_single_pass(f.hierarchical, f.utt, f.tokenizer, lang);
    const DecodeResult known =
        decode_language_known(f.hierarchical, f.utt, LidTag::make(lang), f.tokenizer);
    CHECK(forced.hypothesis == known.hypothesis);
    CHECK(forced.predicted_lang.id == lang);
  }
}

TEST_CASE("single-pass agrees with known on whatever language it picked") {
  Fixture f;
  const DecodeResult sp = decode_single_pass(f.hierarchical, f.utt, f.tokenizer);
  const DecodeResult known =
      decode_language_known(f.hierarchical, f.utt, sp.predicted_lang, f.tokenizer);
  CHECK(sp.hypothesis == known.hypothesis);
}

TEST_CASE("single-pass posterior is a distribution over the bank") {
  Fixture f;
  const DecodeResult sp = decode_single_pass(f.hierarchical, f.utt, f.tokenizer);
  REQUIRE(sp.lid_posterior.size() == 3);
  double sum = 0.0;
  for (double p : sp.lid_posterior) sum += p;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(sp.predicted_lang.id == argmax_lower_tie(sp.lid_posterior));
}

TEST_CASE("stage-1 language rule: first token wins, posterior as fallback") {
  Tokenizer tk(3, 5);  // lang tokens 1..3
  // decoded sequence leads with language token 2 -> language 1
  Tensor lp = Tensor::full({4, tk.vocab_size()}, -10.0);
  CHECK(stage1_language_decision(lp, {2, 6, 7}, tk) == 1);
  // no language token decoded: fall back to max-over-frames posterior
  lp.at(0, tk.language_token(0)) = -5.0;
  lp.at(1, tk.language_token(1)) = -7.0;
  lp.at(2, tk.language_token(2)) = -3.0;  // best single-frame score
  CHECK(stage1_language_decision(lp, {6, 7}, tk) == 2);
  // ties break toward the lower language id
  Tensor tie = Tensor::full({2, tk.vocab_size()}, -1.0);
  CHECK(stage1_language_decision(tie, {}, tk) == 0);
}

TEST_CASE("two-stage routes the expert chosen by stage 1") {
  Fixture f;
  const DecodeResult two = decode_two_stage(f.per_language, f.utt, f.tokenizer);
  const DecodeResult known =
      decode_language_known(f.per_language, f.utt, two.predicted_lang, f.tokenizer);
  CHECK(two.hypothesis == known.hypothesis);
}

TEST_CASE("hypotheses never lead with a language token") {
  Fixture f;
  for (const DecodeResult& r :
       {decode_language_known(f.base, f.utt, LidTag::make(1), f.tokenizer),
        decode_two_stage(f.per_language, f.utt, f.tokenizer),
        decode_single_pass(f.hierarchical, f.utt, f.tokenizer)}) {
    if (!r.hypothesis.empty()) CHECK(!f.tokenizer.is_language_token(r.hypothesis.front()));
  }
}

TEST_CASE("timing report aggregates means, medians and pass counts") {
  std::vector<DecodeResult> results(3);
  results[0].stage_ms = {2.0};
  results[0].forward_passes = 1;
  results[1].stage_ms = {4.0};
  results[1].forward_passes = 1;
  results[2].stage_ms = {3.0, 3.0};
  results[2].forward_passes = 2;
  const TimingSummary s = timing_report(results);
  CHECK(s.count == 3);
  CHECK(s.mean_ms == doctest::Approx(4.0));
  CHECK(s.median_ms == doctest::Approx(4.0));
  CHECK(s.mean_forward_passes == doctest::Approx(4.0 / 3.0));
  CHECK_THROWS_AS(timing_report({}), ConfigError);
}

TEST_SUITE_END();
