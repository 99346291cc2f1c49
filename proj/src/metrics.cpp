// Copyright 2026 The mlasr Authors
// SPDX-License-Identifier: Apache-2.0

#include "mlasr/metrics.hpp"

namespace mlasr {

ErrorCounts& ErrorCounts::operator+=(const ErrorCounts& o) {
  substitutions += o.substitutions;
  insertions += o.insertions;
  deletions += o.deletions;
  ref_len += o.ref_len;
  return *this;
}

ErrorCounts edit_distance(const TokenSeq& ref, const TokenSeq& hyp) {
  const size_t n = ref.size(), m = hyp.size();
  std::vector<int64_t> dp((n + 1) * (m + 1), 0);
  auto idx = [m](size_t i, size_t j) { return i * (m + 1) + j; };
  for (size_t i = 0; i <= n; ++i) dp[idx(i, 0)] = static_cast<int64_t>(i);
  for (size_t j = 0; j <= m; ++j) dp[idx(0, j)] = static_cast<int64_t>(j);
  for (size_t i = 1; i <= n; ++i)
    for (size_t j = 1; j <= m; ++j) {
      const int64_t diag = dp[idx(i - 1, j - 1)] + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      const int64_t del = dp[idx(i - 1, j)] + 1;
      const int64_t ins = dp[idx(i, j - 1)] + 1;
      dp[idx(i, j)] = std::min(diag, std::min(del, ins));
    }

  ErrorCounts c;
  c.ref_len = static_cast<int64_t>(n);
  size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0) {
      const int64_t diag = dp[idx(i - 1, j - 1)] + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      if (dp[idx(i, j)] == diag) {  // match/substitution wins ties
        if (ref[i - 1] != hyp[j - 1]) ++c.substitutions;
        --i;
        --j;
        continue;
      }
    }
    if (i > 0 && dp[idx(i, j)] == dp[idx(i - 1, j)] + 1) {  // then deletion
      ++c.deletions;
      --i;
      continue;
    }
    ++c.insertions;
    --j;
  }
  return c;
}

MixtureRates mixture_error_rate(const std::vector<ErrorCounts>& per_language,
                                const std::vector<UnitType>& units,
                                const std::vector<int64_t>& scored_per_language) {
  if (per_language.empty() || per_language.size() != units.size() ||
      per_language.size() != scored_per_language.size())
    throw MetricsError("mixture_error_rate: inconsistent per-language inputs");
  MixtureRates out;
  out.units = units;
  out.counts = per_language;
  double sum = 0.0;
  for (size_t i = 0; i < per_language.size(); ++i) {
    if (scored_per_language[i] < 1)
      throw MetricsError("mixture_error_rate: language " + std::to_string(i) +
                         " has no scored utterances");
    const double r = per_language[i].rate();
    out.per_language.push_back(r);
    sum += r;
  }
  out.macro_avg = sum / static_cast<double>(per_language.size());
  return out;
}

void ConfusionMatrix::add(int true_lang, int pred) {
  if (true_lang < 0 || true_lang >= n_)
    throw MetricsError("confusion: true language " + std::to_string(true_lang) +
                       " outside the target set");
  const int col = (pred >= 0 && pred < n_) ? pred : n_;  // OTS bucket
  ++counts_[static_cast<size_t>(true_lang) * (n_ + 1) + col];
}

int64_t ConfusionMatrix::row_sum(int true_lang) const {
  int64_t s = 0;
  for (int c = 0; c <= n_; ++c) s += at(true_lang, c);
  return s;
}

int64_t ConfusionMatrix::total() const {
  int64_t s = 0;
  for (int r = 0; r < n_; ++r) s += row_sum(r);
  return s;
}

double ConfusionMatrix::accuracy() const {
  const int64_t tot = total();
  if (tot == 0) return 0.0;
  int64_t diag = 0;
  for (int r = 0; r < n_; ++r) diag += at(r, r);
  return static_cast<double>(diag) / static_cast<double>(tot);
}

}  // namespace mlasr
