// Copyright 2026 The mlasr Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "mlasr/errors.hpp"
#include "mlasr/pipeline.hpp"
#include "mlasr/training.hpp"

using namespace mlasr;

namespace {

// A complete miniature world: tiny model, tiny corpus, real recipes.
struct TinyWorld {
  LanguageSetup setup;
  Tokenizer tokenizer{1, 1};
  std::vector<LanguageSpec> specs;
  Corpus train, dev;
  ModelConfig model;
  LoraConfig lora;
  TrainConfig tc;

  explicit TinyWorld(uint64_t seed, int utts_per_lang = 6, int langs = 3) {
    setup.languages = langs;
    setup.tokens_per_language = 6;
    setup.overlap_fraction = 0.2;
    setup.feat_dim = 6;
    setup.frames_per_token = 3;
    setup.noise_std = 0.05;
    setup.offset_std = 0.8;  // fixture pins its own separability
    setup.char_like = {langs - 1};
    tokenizer = build_tokenizer(setup);
    specs = build_language_specs(setup, seed);

    GenParams gp;
    gp.count_per_language = utts_per_lang;
    gp.u_min = 2;
    gp.u_max = 4;
    gp.downsample = 2;
    gp.seed = seed;
    train = gen_corpus(specs, "source", "train", gp);
    gp.count_per_language = 3;
    dev = gen_corpus(specs, "source", "dev", gp);

    model.n_layers = 3;
    model.split_k = 1;
    model.hidden = 16;
    model.heads = 2;
    model.feat_dim = 6;
    model.downsample = 2;
    model.vocab = setup.vocab_size();
    lora.rank = 2;
    lora.alpha = 4.0;
    tc.batch_size = 3;
    tc.seed = seed;
  }

  System base_system(uint64_t seed) const {
    Rng rng(seed);
    System sys;
    sys.kind = SystemKind::Base;
    sys.n_languages = setup.languages;
    sys.backbone = Backbone::init(model, rng);
    return sys;
  }

  System hierarchical_system(uint64_t seed) const {
    return clone_base_as_hierarchical(base_system(seed), lora, setup.languages, model.split_k,
                                      seed);
  }

  System per_language_system(uint64_t seed) const {
    return clone_base_as_per_language(base_system(seed), lora, setup.languages, seed);
  }
};

std::map<std::string, uint64_t> checksums(const std::vector<Param*>& params) {
  std::map<std::string, uint64_t> out;
  for (const Param* p : params) out[p->name] = tensor_checksum(p->value);
  return out;
}

uint64_t group_checksum(const std::vector<Param*>& params) {
  uint64_t h = 14695981039346656037ULL;
  for (const Param* p : params) h = h * 1099511628211ULL ^ tensor_checksum(p->value);
  return h;
}

const Minibatch* find_batch(const EpochSchedule& schedule, int lang) {
  for (const auto& b : schedule)
    if (b.lang == lang) return &b;
  return nullptr;
}

}  // namespace

TEST_SUITE_BEGIN("training");

TEST_CASE("epoch schedule covers every utterance once in monolingual batches") {
  TinyWorld w(51, 4, 2);
  const EpochSchedule schedule = build_epoch_schedule(w.train, 2, 2, 99);
  CHECK(schedule.size() == 4);  // 2 languages x 4 utts / batch 2

  std::multiset<int> seen;
  for (const auto& batch : schedule) {
    CHECK(!batch.utt_indices.empty());
    for (int idx : batch.utt_indices) {
      CHECK(w.train.utterances[static_cast<size_t>(idx)].lang == batch.lang);
      seen.insert(idx);
    }
  }
  CHECK(seen.size() == w.train.utterances.size());
  for (size_t i = 0; i < w.train.utterances.size(); ++i)
    CHECK(seen.count(static_cast<int>(i)) == 1);
}

TEST_CASE("schedule determinism and remainder handling") {
  TinyWorld w(52, 4, 2);
  auto flatten = [](const EpochSchedule& s) {
    std::vector<std::pair<int, std::vector<int>>> out;
    for (const auto& b : s) out.push_back({b.lang, b.utt_indices});
    return out;
  };
  CHECK(flatten(build_epoch_schedule(w.train, 2, 2, 7)) ==
        flatten(build_epoch_schedule(w.train, 2, 2, 7)));
  CHECK(flatten(build_epoch_schedule(w.train, 2, 2, 7)) !=
        flatten(build_epoch_schedule(w.train, 2, 2, 8)));

  // batch 3 over 4 utts per language -> sizes {3,1}, remainders kept
  const EpochSchedule rem = build_epoch_schedule(w.train, 2, 3, 7);
  std::multiset<size_t> sizes;
  for (const auto& b : rem)
    if (b.lang == 0) sizes.insert(b.utt_indices.size());
  CHECK(sizes == std::multiset<size_t>{1, 3});
}

TEST_CASE("schedule rejects an empty language subset") {
  TinyWorld w(53, 3, 2);
  Corpus only_lang0;
  for (const auto& u : w.train.utterances)
    if (u.lang == 0) only_lang0.utterances.push_back(u);
  CHECK_THROWS_AS(build_epoch_schedule(only_lang0, 2, 2, 1), CorpusError);
}

TEST_CASE("adam: zero gradient leaves params unchanged") {
  Param p{"p", Tensor::row({1.0, -2.0})};
  AdamState st;
  const Tensor zero({1, 2});
  CHECK(adam_update({&p}, {zero}, st, 1e-3, 0.9, 0.999, 1e-8));
  CHECK(p.value[0] == 1.0);
  CHECK(p.value[1] == -2.0);
  CHECK(st.slots[&p].t == 1);
}

TEST_CASE("adam first step matches the closed form") {
  Param p{"p", Tensor::row({0.5, -1.5, 2.0})};
  const Tensor before = p.value;
  Tensor g({1, 3});
  g[0] = 0.3;
  g[1] = -0.7;
  g[2] = 1.9;
  AdamState st;
  const double lr = 1e-3, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  CHECK(adam_update({&p}, {g}, st, lr, b1, b2, eps));
  for (int i = 0; i < 3; ++i) {
    const double mhat = (1 - b1) * g[i] / (1 - b1);
    const double vhat = (1 - b2) * g[i] * g[i] / (1 - b2);
    const double expect = before[i] - lr * mhat / (std::sqrt(vhat) + eps);
    CHECK(p.value[i] == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("adam is deterministic and skips non-finite gradients") {
  auto run_twice = [] {
    Param p{"p", Tensor::row({0.5, -1.5})};
    Tensor g({1, 2});
    g[0] = 0.2;
    g[1] = -0.4;
    AdamState st;
    adam_update({&p}, {g}, st, 1e-3, 0.9, 0.999, 1e-8);
    adam_update({&p}, {g}, st, 1e-3, 0.9, 0.999, 1e-8);
    return std::pair(p.value[0], p.value[1]);
  };
  const auto a = run_twice();
  const auto b = run_twice();
  CHECK(a == b);

  Param p{"p", Tensor::row({1.0})};
  Tensor bad({1, 1});
  bad[0] = std::numeric_limits<double>::quiet_NaN();
  AdamState st;
  CHECK(!adam_update({&p}, {bad}, st, 1e-3, 0.9, 0.999, 1e-8));
  CHECK(p.value[0] == 1.0);
  CHECK(st.slots.empty());
}

TEST_CASE("combined loss is affine in lambda with exact endpoints") {
  TinyWorld w(54);
  const EpochSchedule schedule = build_epoch_schedule(w.train, 3, 3, 5);
  const Minibatch& batch = schedule.front();

  auto loss_at = [&](double lambda) {
    System sys = w.hierarchical_system(55);  // fresh copy per lambda
    TrainConfig tc = w.tc;
    tc.lambda_lid = lambda;
    AdamState opt;
    return train_step(sys, w.train, batch, w.tokenizer, TrainMode::Hierarchical, tc, opt);
  };

  const LossBreakdown l0 = loss_at(0.0);
  const LossBreakdown l1 = loss_at(1.0);
  const LossBreakdown lm = loss_at(0.5);
  REQUIRE(l0.l_lid.has_value());

  CHECK(l0.combined == l0.l_asr);   // exact endpoint
  CHECK(l1.combined == *l1.l_lid);  // exact endpoint
  CHECK(std::fabs(lm.combined - 0.5 * (l0.combined + l1.combined)) < 1e-12);
  CHECK(std::fabs(lm.combined - (0.5 * lm.l_asr + 0.5 * *lm.l_lid)) < 1e-12);
}

TEST_CASE("base and per-language breakdowns carry no LID term") {
  TinyWorld w(57);
  System sys = w.base_system(58);
  AdamState opt;
  const EpochSchedule schedule = build_epoch_schedule(w.train, 3, 3, 4);
  const LossBreakdown l =
      train_step(sys, w.train, schedule.front(), w.tokenizer, TrainMode::BasePhase1, w.tc, opt);
  CHECK(!l.l_lid.has_value());
  CHECK(l.combined == l.l_asr);
}

TEST_CASE("lambda=1 still computes ASR gradients but scales them to zero") {
  TinyWorld w(56);
  System sys = w.hierarchical_system(57);
  TrainConfig tc = w.tc;
  tc.lambda_lid = 1.0;
  const EpochSchedule schedule = build_epoch_schedule(w.train, 3, 3, 6);
  const auto lang_before = checksums(sys.bank->language_params(schedule.front().lang));
  AdamState opt;
  train_step(sys, w.train, schedule.front(), w.tokenizer, TrainMode::Hierarchical, tc, opt);
  // LID reads X_h only, so language experts receive exactly zero gradient
  CHECK(checksums(sys.bank->language_params(schedule.front().lang)) == lang_before);
}

TEST_CASE("hierarchical step updates shared+lid+one expert and nothing else") {
  TinyWorld w(58);
  System sys = w.hierarchical_system(59);
  AdamState opt;
  const EpochSchedule schedule = build_epoch_schedule(w.train, 3, 3, 7);
  const Minibatch* lang0_batch = find_batch(schedule, 0);
  REQUIRE(lang0_batch != nullptr);

  const auto backbone_before = checksums(sys.backbone.all_params());
  const auto shared_before = group_checksum(sys.bank->shared_params());
  const auto lid_before = group_checksum(sys.lid->params());
  const auto lang0_before = checksums(sys.bank->language_params(0));
  const auto lang1_before = checksums(sys.bank->language_params(1));
  const auto lang2_before = checksums(sys.bank->language_params(2));

  train_step(sys, w.train, *lang0_batch, w.tokenizer, TrainMode::Hierarchical, w.tc, opt);

  CHECK(checksums(sys.backbone.all_params()) == backbone_before);  // frozen base
  CHECK(group_checksum(sys.bank->shared_params()) != shared_before);
  CHECK(group_checksum(sys.lid->params()) != lid_before);
  CHECK(checksums(sys.bank->language_params(0)) != lang0_before);
  CHECK(checksums(sys.bank->language_params(1)) == lang1_before);
  CHECK(checksums(sys.bank->language_params(2)) == lang2_before);
}

TEST_CASE("per-language step touches only that expert, base stays frozen") {
  TinyWorld w(60);
  System sys = w.per_language_system(61);
  AdamState opt;
  const EpochSchedule schedule = build_epoch_schedule(w.train, 3, 3, 8);
  const Minibatch* lang1_batch = find_batch(schedule, 1);
  REQUIRE(lang1_batch != nullptr);

  const auto backbone_before = checksums(sys.backbone.all_params());
  const auto lang0_before = checksums(sys.bank->language_params(0));
  const auto lang2_before = checksums(sys.bank->language_params(2));

  train_step(sys, w.train, *lang1_batch, w.tokenizer, TrainMode::PerLanguage, w.tc, opt);

  CHECK(checksums(sys.backbone.all_params()) == backbone_before);  // incl. the base CTC head
  CHECK(checksums(sys.bank->language_params(0)) == lang0_before);
  CHECK(checksums(sys.bank->language_params(2)) == lang2_before);
  CHECK(checksums(sys.bank->language_params(1)) != checksums(w.per_language_system(61).bank
                                                                 ->language_params(1)));
}

TEST_CASE("base phase 1 freezes the encoder") {
  TinyWorld w(62);
  System sys = w.base_system(63);
  AdamState opt;
  const EpochSchedule schedule = build_epoch_schedule(w.train, 3, 3, 9);

  std::vector<Param*> encoder;
  for (Param* p : sys.backbone.all_params())
    if (p != &sys.backbone.ctc_w && p != &sys.backbone.ctc_b && p != &sys.backbone.layer_sum_w)
      encoder.push_back(p);
  const auto encoder_before = checksums(encoder);
  const uint64_t head_before = tensor_checksum(sys.backbone.ctc_w.value);

  for (const auto& batch : schedule)
    train_step(sys, w.train, batch, w.tokenizer, TrainMode::BasePhase1, w.tc, opt);

  CHECK(checksums(encoder) == encoder_before);
  CHECK(tensor_checksum(sys.backbone.ctc_w.value) != head_before);
}

TEST_CASE("full joint-objective gradient check through the hierarchical model") {
  TinyWorld w(64, 2);
  System sys = w.hierarchical_system(65);
  // move adapters off zero so every trainable path is generically active
  Rng rng(66);
  for (Param* p : sys.bank->all_params())
    rng.fill_normal(p->value.data(), p->value.size(), 0.0, 0.05);

  std::vector<Param*> params = sys.bank->shared_params();
  auto lang0 = sys.bank->language_params(0);
  params.insert(params.end(), lang0.begin(), lang0.end());
  params.push_back(&sys.lid->w);
  params.push_back(&sys.lid->b);

  const Minibatch batch{0, {0, 1}};
  const double lambda = 0.3;
  auto build = [&](Tape& t) {
    ForwardGraph g(t, sys);
    std::vector<Tape::Var> asr, lid;
    for (int idx : batch.utt_indices) {
      const Utterance& utt = w.train.utterances[static_cast<size_t>(idx)];
      Tape::Var x = g.add_positions(g.front_end(utt.features));
      Tape::Var x_h = g.forward_lower(x);
      Tape::Var lp = g.ctc_log_probs(g.forward_upper(x_h, LidTag::make(0)), LidTag::make(0));
      asr.push_back(t.ctc_loss(lp, utt.tokens, 0));
      lid.push_back(t.scale(t.pick(t.log_softmax_rows(g.lid_logits(x_h)), 0, utt.lang), -1.0));
    }
    Tape::Var l_asr = t.scale(t.add(asr[0], asr[1]), 0.5);
    Tape::Var l_lid = t.scale(t.add(lid[0], lid[1]), 0.5);
    return t.add(t.scale(l_asr, 1.0 - lambda), t.scale(l_lid, lambda));
  };

  const double err = grad_check(build, params, 1e-5);
  CHECK(err < 1e-4);
}

TEST_CASE("training converges on the tiny corpus") {
  TinyWorld w(70, 8);
  System sys = w.base_system(71);
  TrainConfig tc = w.tc;
  tc.base_phase1_epochs = 4;
  tc.base_phase2_epochs = 26;
  tc.lr = 2e-3;

  std::ostringstream log_stream;
  TrainLog log(&log_stream);
  train_base(sys, w.train, w.dev, w.tokenizer, tc, log);

  double first_loss = -1.0, last_loss = -1.0;
  std::istringstream lines(log_stream.str());
  std::string line;
  while (std::getline(lines, line)) {
    const auto j = nlohmann::json::parse(line);
    if (!j.contains("combined") || j["mode"] != "base-phase2") continue;
    if (first_loss < 0) first_loss = j["combined"].get<double>();
    last_loss = j["combined"].get<double>();
  }
  REQUIRE(first_loss > 0);
  CHECK(last_loss < 0.5 * first_loss);  // >= 50% reduction over the run

  // language-token emergence: base decodes lead with a language token
  int lead_lang = 0;
  for (const auto& utt : w.dev.utterances) {
    Tape t;
    ForwardGraph g(t, sys);
    std::vector<Tape::Var> outs;
    g.forward_all(g.add_positions(g.front_end(utt.features)), std::nullopt, &outs);
    const TokenSeq hyp =
        greedy_decode(t.val(g.ctc_log_probs(g.weighted_layer_sum(outs), std::nullopt)));
    lead_lang += !hyp.empty() && w.tokenizer.is_language_token(hyp.front());
  }
  CHECK(lead_lang >= static_cast<int>(0.9 * static_cast<double>(w.dev.utterances.size())));

  // per-language adaptation reduces its own loss as well
  System adapted = clone_base_as_per_language(sys, w.lora, 3, 72);
  std::ostringstream log2_stream;
  TrainLog log2(&log2_stream);
  TrainConfig tc2 = w.tc;
  tc2.adapt_epochs = 20;
  train_per_language_adapters(adapted, w.train, w.dev, w.tokenizer, tc2, log2);
  double first2 = -1.0, last2 = -1.0;
  std::istringstream lines2(log2_stream.str());
  while (std::getline(lines2, line)) {
    const auto j = nlohmann::json::parse(line);
    if (!j.contains("combined")) continue;
    if (first2 < 0) first2 = j["combined"].get<double>();
    last2 = j["combined"].get<double>();
  }
  CHECK(last2 < first2);
}

TEST_SUITE_END();
