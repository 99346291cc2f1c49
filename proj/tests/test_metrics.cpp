// Copyright 2026 The mlasr Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "mlasr/metrics.hpp"
#include "mlasr/rng.hpp"
#include "oracles.hpp"

using namespace mlasr;

namespace {

TokenSeq random_seq(Rng& rng, int max_len, int vocab) {
  TokenSeq s(static_cast<size_t>(rng.uniform_int(0, max_len)));
  for (auto& t : s) t = static_cast<int>(rng.uniform_int(0, vocab - 1));
  return s;
}

}  // namespace

TEST_SUITE_BEGIN("metrics");

TEST_CASE("edit distance basics") {
  const ErrorCounts same = edit_distance({1, 2, 3}, {1, 2, 3});
  CHECK(same.total() == 0);
  CHECK(same.ref_len == 3);
  CHECK(same.rate() == 0.0);

  const ErrorCounts del = edit_distance({1, 2, 3}, {1, 3});
  CHECK(del.deletions == 1);
  CHECK(del.substitutions == 0);
  CHECK(del.insertions == 0);

  const ErrorCounts ins = edit_distance({1, 3}, {1, 2, 3});
  CHECK(ins.insertions == 1);

  const ErrorCounts sub = edit_distance({1, 2}, {1, 9});
  CHECK(sub.substitutions == 1);

  const ErrorCounts empty_ref = edit_distance({}, {1, 2});
  CHECK(empty_ref.insertions == 2);
  CHECK(empty_ref.rate() == 2.0);  // denominator clamps at 1
}

TEST_CASE("total cost matches an independent DP on 500 random pairs") {
  Rng rng(31);
  for (int trial = 0; trial < 500; ++trial) {
    const TokenSeq ref = random_seq(rng, 12, 5);
    const TokenSeq hyp = random_seq(rng, 12, 5);
    const ErrorCounts c = edit_distance(ref, hyp);
    CHECK(c.total() == oracle::edit_cost_reference(ref, hyp));
    // alignment consistency: ref minus deletions plus insertions spans hyp
    CHECK(static_cast<int64_t>(ref.size()) - c.deletions + c.insertions ==
          static_cast<int64_t>(hyp.size()));
  }
}

TEST_CASE("cost symmetry and triangle inequality") {
  Rng rng(33);
  for (int trial = 0; trial < 200; ++trial) {
    const TokenSeq a = random_seq(rng, 10, 4);
    const TokenSeq b = random_seq(rng, 10, 4);
    const TokenSeq c = random_seq(rng, 10, 4);
    const int64_t ab = edit_distance(a, b).total();
    const int64_t ba = edit_distance(b, a).total();
    CHECK(ab == ba);
    CHECK(ab <= edit_distance(a, c).total() + edit_distance(c, b).total());
  }
}

TEST_CASE("mixture error rate: perfect, macro average, empty bucket") {
  const std::vector<UnitType> units = {UnitType::Word, UnitType::Char};
  {
    std::vector<ErrorCounts> counts(2);
    counts[0].ref_len = 10;
    counts[1].ref_len = 10;
    const MixtureRates r = mixture_error_rate(counts, units, {5, 5});
    CHECK(r.per_language[0] == 0.0);
    CHECK(r.per_language[1] == 0.0);
    CHECK(r.macro_avg == 0.0);
  }
  {
    std::vector<ErrorCounts> counts(2);
    counts[0] = ErrorCounts{2, 0, 0, 10};  // 0.2
    counts[1] = ErrorCounts{1, 2, 1, 10};  // 0.4
    const MixtureRates r = mixture_error_rate(counts, units, {5, 5});
    CHECK(r.per_language[0] == doctest::Approx(0.2));
    CHECK(r.per_language[1] == doctest::Approx(0.4));
    CHECK(r.macro_avg == doctest::Approx(0.3));
  }
  {
    std::vector<ErrorCounts> counts(2);
    CHECK_THROWS_AS(mixture_error_rate(counts, units, {5, 0}), MetricsError);
  }
}

TEST_CASE("char-like and word-like languages score identically on the same ids") {
  const TokenSeq ref = {4, 5, 6};
  const TokenSeq hyp = {4, 6};
  const ErrorCounts as_word = edit_distance(ref, hyp);
  const ErrorCounts as_char = edit_distance(ref, hyp);
  CHECK(as_word.total() == as_char.total());  // unit type is a reporting tag only
}

TEST_CASE("confusion matrix counting, OTS bucket and accuracy") {
  ConfusionMatrix cm(3);
  for (int l = 0; l < 3; ++l) cm.add(l, l);
  CHECK(cm.accuracy() == 1.0);
  CHECK(cm.at(1, 1) == 1);

  cm.add(0, 7);  // outside the target set
  CHECK(cm.at(0, 3) == 1);
  cm.add(2, -1);
  CHECK(cm.at(2, 3) == 1);
  CHECK(cm.row_sum(0) == 2);
  CHECK(cm.total() == 5);
  CHECK(cm.accuracy() == doctest::Approx(3.0 / 5.0));
}

TEST_CASE("accuracy matches an independent recount") {
  Rng rng(35);
  ConfusionMatrix cm(4);
  int64_t correct = 0, total = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const int truth = static_cast<int>(rng.uniform_int(0, 3));
    const int pred = static_cast<int>(rng.uniform_int(-1, 5));
    cm.add(truth, pred);
    correct += truth == pred;
    ++total;
  }
  CHECK(cm.accuracy() == doctest::Approx(static_cast<double>(correct) / total).epsilon(1e-12));
}

TEST_CASE("row sums are conserved under prediction relabeling") {
  Rng rng(36);
  std::vector<std::pair<int, int>> pairs;
  for (int trial = 0; trial < 100; ++trial)
    pairs.push_back({static_cast<int>(rng.uniform_int(0, 2)),
                     static_cast<int>(rng.uniform_int(0, 2))});
  ConfusionMatrix a(3), b(3);
  for (auto [truth, pred] : pairs) {
    a.add(truth, pred);
    b.add(truth, (pred + 1) % 3);  // relabel predictions
  }
  for (int r = 0; r < 3; ++r) CHECK(a.row_sum(r) == b.row_sum(r));
}

TEST_SUITE_END();
