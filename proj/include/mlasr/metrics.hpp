// Copyright 2026 The mlasr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "mlasr/ctc.hpp"
#include "mlasr/data.hpp"

namespace mlasr {

struct MetricsError : std::runtime_error {
  explicit MetricsError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ErrorCounts {
  int64_t substitutions = 0;
  int64_t insertions = 0;
  int64_t deletions = 0;
  int64_t ref_len = 0;

  int64_t total() const { return substitutions + insertions + deletions; }
  double rate() const { return static_cast<double>(total()) / static_cast<double>(std::max<int64_t>(ref_len, 1)); }
  ErrorCounts& operator+=(const ErrorCounts& o);
};

// Unit-cost Levenshtein alignment. When several alignments share the
// minimal cost the backtrace prefers substitution over deletion over
// insertion, so the count split is deterministic.
ErrorCounts edit_distance(const TokenSeq& ref, const TokenSeq& hyp);

struct MixtureRates {
  std::vector<double> per_language;
  std::vector<UnitType> units;
  std::vector<ErrorCounts> counts;
  double macro_avg = 0.0;
};

// Per-language rate over pooled counts, macro-averaged across languages.
// `scored_per_language[i]` is how many utterances fed language i; an empty
// bucket is an error.
MixtureRates mixture_error_rate(const std::vector<ErrorCounts>& per_language,
                                const std::vector<UnitType>& units,
                                const std::vector<int64_t>& scored_per_language);

// L x (L+1) count table; the extra column aggregates predictions outside
// the target-language set (the "other" bucket).
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int n_target)
      : n_(n_target), counts_(static_cast<size_t>(n_target) * (n_target + 1), 0) {}

  // pred outside [0, L) lands in the other bucket.
  void add(int true_lang, int pred);
  int64_t at(int true_lang, int col) const { return counts_[static_cast<size_t>(true_lang) * (n_ + 1) + col]; }
  int64_t row_sum(int true_lang) const;
  int64_t total() const;
  double accuracy() const;
  int target_count() const { return n_; }

 private:
  int n_;
  std::vector<int64_t> counts_;
};

}  // namespace mlasr
