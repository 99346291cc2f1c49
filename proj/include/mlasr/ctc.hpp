// Copyright 2026 The mlasr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "mlasr/tape.hpp"
#include "mlasr/tensor.hpp"
#include "mlasr/tokenizer.hpp"

namespace mlasr {

// Token ids in [0, V); the blank id never appears in targets.
using TokenSeq = std::vector<int>;

constexpr int kBlankId = 0;

// Blank-interleaved target of length 2U+1: z[even] = blank, z[odd] = tokens.
std::vector<int> augment_target(const TokenSeq& target, int blank);

// Minimum number of frames that admits an alignment: U plus one separating
// blank per adjacent repeat.
int64_t ctc_min_frames(const TokenSeq& target);

// -log p(target | log_probs) by the log-space alpha recursion. Infeasible
// targets (T below the minimum) yield +infinity, never a throw, so batch
// code can skip them. When grad_out is non-null and the loss is finite it
// receives d(loss)/d(log_probs) computed via the beta recursion.
double ctc_neg_log_prob(const Tensor& log_probs, const TokenSeq& target, int blank,
                        Tensor* grad_out = nullptr);

// Exhaustive oracle: enumerates all V^T frame-label paths, keeps those that
// collapse (merge repeats, drop blanks) to the target and sums their
// probabilities. Guarded to V^T <= 10^6.
double ctc_brute_force(const Tensor& log_probs, const TokenSeq& target, int blank);

// Per-frame argmax (ties to the lower id), collapse repeats, drop blanks.
TokenSeq greedy_decode(const Tensor& log_probs, int blank = kBlankId);

// [lang_token] ++ target; only base-model training uses prefixed targets.
TokenSeq prepend_language_token(const TokenSeq& target, int lang, const Tokenizer& tokenizer);

// Drops one leading language token if present; hypotheses are scored
// against unprefixed references.
TokenSeq strip_leading_language_token(TokenSeq seq, const Tokenizer& tokenizer);

}  // namespace mlasr
