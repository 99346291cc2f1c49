// Copyright 2026 The mlasr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mlasr/ctc.hpp"
#include "mlasr/lora.hpp"
#include "mlasr/tensor.hpp"
#include "mlasr/tokenizer.hpp"

namespace mlasr {

enum class UnitType { Word, Char };

const char* unit_type_name(UnitType u);

// How one synthetic language sounds: which content tokens it uses, how they
// follow each other, what each token's frames look like, and the
// language-wide channel colouring.
struct LanguageSpec {
  LidTag lang;
  UnitType unit = UnitType::Word;
  std::vector<int> inventory;       // content token ids
  Tensor bigram;                    // [n,n] row-stochastic over inventory
  std::vector<Tensor> templates;    // one [dur,F] block per inventory entry
  Tensor channel_offset;            // [1,F]
  double noise_std = 0.1;
};

struct Utterance {
  std::string utt_id;
  int lang = 0;
  Tensor features;  // [T,F]
  TokenSeq tokens;  // content targets only
};

struct ManifestRecord {
  std::string utt_id;
  int lang = 0;
  int64_t offset = 0;  // byte offset of the shape header in the .feats file
  int64_t t_len = 0;
  int64_t feat_dim = 0;
  TokenSeq tokens;
  std::string domain;
  std::string split;
};

struct CorpusManifest {
  std::string domain;
  std::string split;
  std::vector<ManifestRecord> records;
};

struct Corpus {
  std::string domain;
  std::string split;
  std::vector<Utterance> utterances;

  std::vector<std::vector<int>> indices_by_language(int n_languages) const;
};

struct GenParams {
  int count_per_language = 0;
  int u_min = 3;
  int u_max = 8;
  // Silence frames are appended so that after the front-end stride the
  // sequence still admits the worst-case alignment T' >= 2U+1.
  int downsample = 2;
  uint64_t seed = 0;
};

// Deterministic synthetic corpus for one (domain, split) pair.
Corpus gen_corpus(const std::vector<LanguageSpec>& specs, const std::string& domain,
                  const std::string& split, const GenParams& params);

// The target-domain mismatch has a language-independent part (a channel
// change hitting all speakers alike: feature mixing M = I + s*R/sqrt(F),
// per-feature gain and a shared offset) and smaller per-language parts
// (another mixing, template jitter and offset noise). Linear mixing is the
// classic convolutive-channel model and is genuinely hard for low-rank
// adapters, so where the correction is learned matters.
struct ShiftParams {
  double template_jitter = 0.0;     // per-language additive jitter
  double offset_shift = 0.0;        // per-language offset noise
  double noise_mult = 1.0;
  double global_gain_jitter = 0.0;  // channel gain ~ 1 + N(0, this)
  double global_offset_shift = 0.0;
  double global_mix = 0.0;          // shared feature-mixing strength
  double lang_mix = 0.0;            // per-language feature-mixing strength
};

// Derived spec with perturbed emission statistics; inventory, bigram table
// and unit type carry over untouched.
LanguageSpec domain_shift(const LanguageSpec& spec, const ShiftParams& shift, uint64_t seed);

// Manifest as JSON lines next to a .feats blob with the same stem.
void save_corpus(const Corpus& corpus, const std::filesystem::path& manifest_path);
CorpusManifest load_manifest(const std::filesystem::path& manifest_path,
                             int expected_languages = -1);
Corpus load_corpus(const std::filesystem::path& manifest_path, int expected_languages = -1);

// Language specs derived from the run seed. Each language gets
// `unique_tokens` private content ids plus a pool of `shared_tokens` ids
// common to every language.
struct LanguageSetup {
  int languages = 3;
  int tokens_per_language = 40;
  double overlap_fraction = 0.2;
  int64_t feat_dim = 16;
  int frames_per_token = 3;
  double noise_std = 0.1;
  // languages mostly share the channel; identity lives in which templates
  // appear, so language ID needs some encoder depth
  double offset_std = 0.05;
  std::vector<int> char_like = {2};

  int shared_tokens() const;
  int unique_tokens() const { return tokens_per_language - shared_tokens(); }
  int64_t content_count() const { return shared_tokens() + static_cast<int64_t>(languages) * unique_tokens(); }
  int64_t vocab_size() const { return 1 + languages + content_count(); }
};

std::vector<LanguageSpec> build_language_specs(const LanguageSetup& setup, uint64_t seed);
Tokenizer build_tokenizer(const LanguageSetup& setup);

}  // namespace mlasr
