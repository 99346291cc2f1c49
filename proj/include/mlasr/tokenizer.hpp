// Copyright 2026 The mlasr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "mlasr/errors.hpp"

namespace mlasr {

// Fixed vocabulary layout: blank = 0, language tokens 1..L, content tokens
// L+1..V-1. The reserved region is never used for content.
class Tokenizer {
 public:
  Tokenizer(int n_languages, int64_t n_content)
      : n_languages_(n_languages), vocab_(1 + n_languages + n_content) {}

  int64_t vocab_size() const { return vocab_; }
  int num_languages() const { return n_languages_; }
  int blank_id() const { return 0; }

  int language_token(int lang) const {
    if (lang < 0 || lang >= n_languages_)
      throw ConfigError("tokenizer: no reserved token for language id " + std::to_string(lang));
    return 1 + lang;
  }
  bool is_language_token(int id) const { return id >= 1 && id <= n_languages_; }
  int language_of_token(int id) const { return id - 1; }
  int first_content_id() const { return 1 + n_languages_; }
  bool is_content(int id) const { return id >= first_content_id() && id < vocab_; }

  std::string surface(int id) const;
  int id_of(const std::string& surface) const;

 private:
  int n_languages_;
  int64_t vocab_;
};

}  // namespace mlasr
