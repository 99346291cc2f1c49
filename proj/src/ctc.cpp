// Copyright 2026 The mlasr Authors
// SPDX-License-Identifier: Apache-2.0

#include "mlasr/ctc.hpp"

#include <cmath>
#include <limits>

#include "mlasr/errors.hpp"

namespace mlasr {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

std::vector<int> augment_target(const TokenSeq& target, int blank) {
  std::vector<int> z(2 * target.size() + 1, blank);
  for (size_t i = 0; i < target.size(); ++i) z[2 * i + 1] = target[i];
  return z;
}

int64_t ctc_min_frames(const TokenSeq& target) {
  int64_t repeats = 0;
  for (size_t i = 1; i < target.size(); ++i)
    if (target[i] == target[i - 1]) ++repeats;
  return static_cast<int64_t>(target.size()) + repeats;
}

double ctc_neg_log_prob(const Tensor& log_probs, const TokenSeq& target, int blank,
                        Tensor* grad_out) {
  if (log_probs.rank() != 2)
    throw ShapeError("ctc: log_probs must be [T,V], got " + log_probs.shape_str());
  const int64_t T = log_probs.rows();
  const int64_t V = log_probs.cols();
  for (int tok : target) {
    if (tok == blank) throw ConfigError("ctc: target contains the blank id");
    if (tok < 0 || tok >= V)
      throw ConfigError("ctc: target token " + std::to_string(tok) + " outside vocabulary of " +
                        std::to_string(V));
  }
  if (grad_out) *grad_out = Tensor({T, V});
  if (T < ctc_min_frames(target))
    return std::numeric_limits<double>::infinity();

  const std::vector<int> z = augment_target(target, blank);
  const int64_t S = static_cast<int64_t>(z.size());
  auto lp = [&](int64_t t, int64_t s) { return log_probs.at(t, z[static_cast<size_t>(s)]); };

  // alpha[t][s]: log-prob of prefixes ending in state s having consumed
  // frames 0..t, emission at t included.
  std::vector<double> alpha(static_cast<size_t>(T * S), kNegInf);
  auto A = [&](int64_t t, int64_t s) -> double& { return alpha[static_cast<size_t>(t * S + s)]; };
  A(0, 0) = lp(0, 0);
  if (S > 1) A(0, 1) = lp(0, 1);
  for (int64_t t = 1; t < T; ++t) {
    for (int64_t s = 0; s < S; ++s) {
      double a = A(t - 1, s);
      if (s > 0) a = logsumexp2(a, A(t - 1, s - 1));
      // skipping a state is allowed unless it lands on a blank or repeats
      // the same label
      if (s > 1 && z[static_cast<size_t>(s)] != blank &&
          z[static_cast<size_t>(s)] != z[static_cast<size_t>(s - 2)])
        a = logsumexp2(a, A(t - 1, s - 2));
      A(t, s) = a + lp(t, s);
    }
  }
  const double log_z = S > 1 ? logsumexp2(A(T - 1, S - 1), A(T - 1, S - 2)) : A(T - 1, S - 1);
  if (log_z == kNegInf) return std::numeric_limits<double>::infinity();

  if (grad_out) {
    // beta[t][s]: log-prob of completing from state s after frame t,
    // emissions at t+1..T-1 only, so alpha+beta marginalizes every frame
    // exactly once.
    std::vector<double> beta(static_cast<size_t>(T * S), kNegInf);
    auto Bt = [&](int64_t t, int64_t s) -> double& { return beta[static_cast<size_t>(t * S + s)]; };
    Bt(T - 1, S - 1) = 0.0;
    if (S > 1) Bt(T - 1, S - 2) = 0.0;
    for (int64_t t = T - 2; t >= 0; --t) {
      for (int64_t s = 0; s < S; ++s) {
        double b = Bt(t + 1, s) + lp(t + 1, s);
        if (s + 1 < S) b = logsumexp2(b, Bt(t + 1, s + 1) + lp(t + 1, s + 1));
        if (s + 2 < S && z[static_cast<size_t>(s + 2)] != blank &&
            z[static_cast<size_t>(s + 2)] != z[static_cast<size_t>(s)])
          b = logsumexp2(b, Bt(t + 1, s + 2) + lp(t + 1, s + 2));
        Bt(t, s) = b;
      }
    }
    // d(-logZ)/d(log_probs[t][c]) = -P(path passes a state labelled c at t)
    for (int64_t t = 0; t < T; ++t) {
      for (int64_t s = 0; s < S; ++s) {
        const double g = A(t, s) + Bt(t, s) - log_z;
        if (g == kNegInf) continue;
        grad_out->at(t, z[static_cast<size_t>(s)]) -= std::exp(g);
      }
    }
  }
  return -log_z;
}

double ctc_brute_force(const Tensor& log_probs, const TokenSeq& target, int blank) {
  const int64_t T = log_probs.rows();
  const int64_t V = log_probs.cols();
  double paths = std::pow(static_cast<double>(V), static_cast<double>(T));
  if (paths > 1e6)
    throw NumericError("ctc_brute_force: V^T = " + std::to_string(paths) + " exceeds 10^6 guard");

  std::vector<int> path(static_cast<size_t>(T), 0);
  std::vector<double> matched;
  for (;;) {
    // collapse: merge consecutive repeats, then drop blanks
    TokenSeq collapsed;
    int prev = -1;
    for (int64_t t = 0; t < T; ++t) {
      const int c = path[static_cast<size_t>(t)];
      if (c != prev && c != blank) collapsed.push_back(c);
      prev = c;
    }
    if (collapsed == target) {
      double lp = 0.0;
      for (int64_t t = 0; t < T; ++t) lp += log_probs.at(t, path[static_cast<size_t>(t)]);
      matched.push_back(lp);
    }
    // next path in base-V counting
    int64_t pos = T - 1;
    while (pos >= 0) {
      if (++path[static_cast<size_t>(pos)] < V) break;
      path[static_cast<size_t>(pos)] = 0;
      --pos;
    }
    if (pos < 0) break;
  }
  const double lz = logsumexp(matched);
  return lz == kNegInf ? std::numeric_limits<double>::infinity() : -lz;
}

TokenSeq greedy_decode(const Tensor& log_probs, int blank) {
  const int64_t T = log_probs.rows();
  const int64_t V = log_probs.cols();
  TokenSeq out;
  int prev = -1;
  for (int64_t t = 0; t < T; ++t) {
    int best = 0;
    double bv = log_probs.at(t, 0);
    for (int64_t j = 1; j < V; ++j) {
      if (log_probs.at(t, j) > bv) {  // strict: ties stay at the lower id
        bv = log_probs.at(t, j);
        best = static_cast<int>(j);
      }
    }
    if (best != prev && best != blank) out.push_back(best);
    prev = best;
  }
  return out;
}

TokenSeq prepend_language_token(const TokenSeq& target, int lang, const Tokenizer& tokenizer) {
  TokenSeq out;
  out.reserve(target.size() + 1);
  out.push_back(tokenizer.language_token(lang));
  out.insert(out.end(), target.begin(), target.end());
  return out;
}

TokenSeq strip_leading_language_token(TokenSeq seq, const Tokenizer& tokenizer) {
  if (!seq.empty() && tokenizer.is_language_token(seq.front())) seq.erase(seq.begin());
  return seq;
}

Tape::Var Tape::ctc_loss(Var log_probs, const std::vector<int>& target, int blank) {
  const bool ng = needs_grad(log_probs);
  Tensor grad;
  const double loss = ctc_neg_log_prob(val(log_probs), target, blank, ng ? &grad : nullptr);
  Tensor y({1, 1});
  y[0] = loss;
  Var out = push(std::move(y), ng);
  if (ng)
    nodes_[out].backward = [out, log_probs, g = std::move(grad)](Tape& t) {
      const double dy = t.grad(out)[0];
      if (dy != 0.0) axpy_inplace(t.grad_mut(log_probs), dy, g);
    };
  return out;
}

}  // namespace mlasr
