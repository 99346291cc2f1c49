// Copyright 2026 The mlasr Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <fstream>
#include <sstream>

#include "mlasr/data.hpp"
#include "mlasr/errors.hpp"

using namespace mlasr;

namespace {

LanguageSetup small_setup() {
  LanguageSetup s;
  s.languages = 2;
  s.tokens_per_language = 5;
  s.overlap_fraction = 0.2;
  s.feat_dim = 4;
  s.frames_per_token = 3;
  s.noise_std = 0.05;
  s.char_like = {1};
  return s;
}

GenParams small_gen(uint64_t seed) {
  GenParams gp;
  gp.count_per_language = 6;
  gp.u_min = 1;
  gp.u_max = 4;
  gp.downsample = 2;
  gp.seed = seed;
  return gp;
}

std::string file_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_SUITE_BEGIN("data");

TEST_CASE("tokenizer layout and surfaces") {
  Tokenizer tk(3, 10);
  CHECK(tk.vocab_size() == 14);
  CHECK(tk.blank_id() == 0);
  CHECK(tk.language_token(0) == 1);
  CHECK(tk.language_token(2) == 3);
  CHECK_THROWS_AS(tk.language_token(3), ConfigError);
  CHECK(tk.first_content_id() == 4);
  CHECK(tk.is_language_token(2));
  CHECK(!tk.is_language_token(4));
  CHECK(tk.surface(0) == "<blk>");
  CHECK(tk.surface(2) == "<L1>");
  CHECK(tk.surface(5) == "t5");
  CHECK(tk.id_of("<L1>") == 2);
  CHECK(tk.id_of("t5") == 5);
  CHECK(tk.id_of(tk.surface(13)) == 13);
  CHECK_THROWS_AS(tk.id_of("bogus"), ConfigError);
}

TEST_CASE("language specs: inventories overlap by the shared pool") {
  const LanguageSetup setup = small_setup();
  CHECK(setup.shared_tokens() == 1);
  CHECK(setup.unique_tokens() == 4);
  const auto specs = build_language_specs(setup, 5);
  REQUIRE(specs.size() == 2);
  CHECK(specs[0].unit == UnitType::Word);
  CHECK(specs[1].unit == UnitType::Char);
  CHECK(specs[0].inventory.front() == specs[1].inventory.front());  // shared pool
  for (size_t i = 1; i < specs[0].inventory.size(); ++i)
    CHECK(specs[0].inventory[i] != specs[1].inventory[i]);
  for (const auto& sp : specs) {
    for (int64_t r = 0; r < sp.bigram.rows(); ++r) {
      double sum = 0.0;
      for (int64_t c = 0; c < sp.bigram.cols(); ++c) sum += sp.bigram.at(r, c);
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("generation is deterministic and CTC feasible") {
  const auto specs = build_language_specs(small_setup(), 5);
  const Corpus a = gen_corpus(specs, "source", "train", small_gen(7));
  const Corpus b = gen_corpus(specs, "source", "train", small_gen(7));
  REQUIRE(a.utterances.size() == b.utterances.size());
  for (size_t i = 0; i < a.utterances.size(); ++i) {
    CHECK(a.utterances[i].utt_id == b.utterances[i].utt_id);
    CHECK(a.utterances[i].tokens == b.utterances[i].tokens);
    CHECK(a.utterances[i].features.max_abs_diff(b.utterances[i].features) == 0.0);
  }
  const Corpus c = gen_corpus(specs, "source", "train", small_gen(8));
  bool any_diff = false;
  for (size_t i = 0; i < a.utterances.size() && !any_diff; ++i)
    any_diff = a.utterances[i].tokens != c.utterances[i].tokens;
  CHECK(any_diff);

  for (const auto& utt : a.utterances) {
    const int64_t t_prime = (utt.features.rows() + 1) / 2;  // ceil with stride 2
    CHECK(t_prime >= 2 * static_cast<int64_t>(utt.tokens.size()) + 1);
  }
}

TEST_CASE("generator rejects infeasible configurations before writing") {
  const auto specs = build_language_specs(small_setup(), 5);
  GenParams bad = small_gen(1);
  bad.u_min = 0;
  CHECK_THROWS_AS(gen_corpus(specs, "source", "train", bad), CorpusError);
  bad = small_gen(1);
  bad.u_max = bad.u_min - 1;
  CHECK_THROWS_AS(gen_corpus(specs, "source", "train", bad), CorpusError);
  bad = small_gen(1);
  bad.count_per_language = 0;
  CHECK_THROWS_AS(gen_corpus(specs, "source", "train", bad), CorpusError);
}

TEST_CASE("noise-free disjoint offsets are linearly separable by nearest offset") {
  LanguageSetup setup = small_setup();
  setup.noise_std = 0.0;
  auto specs = build_language_specs(setup, 5);
  // force far-apart offsets so the template contribution cannot flip a decision
  for (int64_t f = 0; f < setup.feat_dim; ++f) {
    specs[0].channel_offset[f] = -25.0;
    specs[1].channel_offset[f] = 25.0;
  }
  const Corpus corpus = gen_corpus(specs, "source", "train", small_gen(9));
  int correct = 0;
  for (const auto& utt : corpus.utterances) {
    Tensor mean({1, setup.feat_dim});
    for (int64_t t = 0; t < utt.features.rows(); ++t)
      for (int64_t f = 0; f < setup.feat_dim; ++f) mean[f] += utt.features.at(t, f);
    for (int64_t f = 0; f < setup.feat_dim; ++f) mean[f] /= static_cast<double>(utt.features.rows());
    double d0 = 0.0, d1 = 0.0;
    for (int64_t f = 0; f < setup.feat_dim; ++f) {
      d0 += std::pow(mean[f] - specs[0].channel_offset[f], 2);
      d1 += std::pow(mean[f] - specs[1].channel_offset[f], 2);
    }
    const int pred = d0 <= d1 ? 0 : 1;
    correct += pred == utt.lang;
  }
  CHECK(correct == static_cast<int>(corpus.utterances.size()));
}

TEST_CASE("domain shift: zero shift is the identity, fields carry over") {
  const auto specs = build_language_specs(small_setup(), 5);
  const ShiftParams zero{0.0, 0.0, 1.0, 0.0, 0.0};
  const LanguageSpec same = domain_shift(specs[0], zero, 5);
  CHECK(same.inventory == specs[0].inventory);
  CHECK(same.unit == specs[0].unit);
  CHECK(same.noise_std == specs[0].noise_std);
  CHECK(same.channel_offset.max_abs_diff(specs[0].channel_offset) == 0.0);
  CHECK(same.bigram.max_abs_diff(specs[0].bigram) == 0.0);
  for (size_t i = 0; i < same.templates.size(); ++i)
    CHECK(same.templates[i].max_abs_diff(specs[0].templates[i]) == 0.0);

  const ShiftParams shift{0.4, 0.5, 2.0, 0.0, 0.0};
  const LanguageSpec moved = domain_shift(specs[0], shift, 5);
  CHECK(moved.inventory == specs[0].inventory);
  CHECK(moved.unit == specs[0].unit);
  CHECK(moved.noise_std == doctest::Approx(2.0 * specs[0].noise_std));
  CHECK(moved.channel_offset.max_abs_diff(specs[0].channel_offset) > 0.0);
  CHECK(moved.templates[0].max_abs_diff(specs[0].templates[0]) > 0.0);
}

TEST_CASE("domain shift: the global recolouring is shared across languages") {
  const auto specs = build_language_specs(small_setup(), 5);
  const ShiftParams global_only{0.0, 0.0, 1.0, 0.3, 0.5};
  const LanguageSpec s0 = domain_shift(specs[0], global_only, 5);
  const LanguageSpec s1 = domain_shift(specs[1], global_only, 5);
  // both languages see the same gain: per-feature offset ratios match where
  // the template is nonzero
  const int64_t feat_dim = specs[0].channel_offset.size();
  for (int64_t f = 0; f < feat_dim; ++f) {
    const double g0 = s0.templates[0].at(0, f) / specs[0].templates[0].at(0, f);
    const double g1 = s1.templates[0].at(0, f) / specs[1].templates[0].at(0, f);
    CHECK(g0 == doctest::Approx(g1).epsilon(1e-9));
  }
  // offsets move by gain*x + the same delta
  for (int64_t f = 0; f < feat_dim; ++f) {
    const double g = s0.templates[0].at(0, f) / specs[0].templates[0].at(0, f);
    const double d0 = s0.channel_offset[f] - g * specs[0].channel_offset[f];
    const double d1 = s1.channel_offset[f] - g * specs[1].channel_offset[f];
    CHECK(d0 == doctest::Approx(d1).epsilon(1e-9));
  }
}

TEST_CASE("save / load round trip and byte determinism") {
  const auto specs = build_language_specs(small_setup(), 5);
  const Corpus corpus = gen_corpus(specs, "source", "dev", small_gen(11));
  const auto dir = std::filesystem::temp_directory_path() / "mlasr_data_test";
  std::filesystem::remove_all(dir);
  save_corpus(corpus, dir / "dev.jsonl");
  save_corpus(corpus, dir / "dev2.jsonl");
  CHECK(file_bytes(dir / "dev.jsonl") == file_bytes(dir / "dev2.jsonl"));
  CHECK(file_bytes(dir / "dev.feats") == file_bytes(dir / "dev2.feats"));

  const Corpus loaded = load_corpus(dir / "dev.jsonl", 2);
  REQUIRE(loaded.utterances.size() == corpus.utterances.size());
  CHECK(loaded.domain == "source");
  CHECK(loaded.split == "dev");
  for (size_t i = 0; i < loaded.utterances.size(); ++i) {
    CHECK(loaded.utterances[i].utt_id == corpus.utterances[i].utt_id);
    CHECK(loaded.utterances[i].lang == corpus.utterances[i].lang);
    CHECK(loaded.utterances[i].tokens == corpus.utterances[i].tokens);
    CHECK(loaded.utterances[i].features.max_abs_diff(corpus.utterances[i].features) == 0.0);
  }
}

TEST_CASE("manifest validation failures") {
  const auto dir = std::filesystem::temp_directory_path() / "mlasr_manifest_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);

  auto write = [&](const std::string& name, const std::string& body) {
    std::ofstream os(dir / name);
    os << body;
    return dir / name;
  };

  const std::string rec =
      R"({"utt_id":"u1","lang":0,"offset":0,"T":4,"F":2,"tokens":[3],"domain":"d","split":"s"})";
  CHECK_THROWS_AS(load_manifest(write("dup.jsonl", rec + "\n" + rec + "\n"), 2), CorpusError);

  const std::string bad_lang =
      R"({"utt_id":"u2","lang":7,"offset":0,"T":4,"F":2,"tokens":[3],"domain":"d","split":"s"})";
  CHECK_THROWS_AS(load_manifest(write("lang.jsonl", bad_lang + "\n"), 2), CorpusError);

  CHECK_THROWS_WITH_AS(load_manifest(write("broken.jsonl", rec + "\n{not json\n"), 2),
                       doctest::Contains("line 2"), ParseError);

  CHECK_THROWS_AS(load_manifest(dir / "missing.jsonl", 2), IoError);
}

TEST_SUITE_END();
