// Copyright 2026 The mlasr Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "mlasr/errors.hpp"
#include "mlasr/lora.hpp"

using namespace mlasr;

namespace {

Tensor random_tensor(std::vector<int64_t> shape, Rng& rng, double std = 1.0) {
  Tensor t(std::move(shape));
  rng.fill_normal(t.data(), t.size(), 0.0, std);
  return t;
}

}  // namespace

TEST_SUITE_BEGIN("lora");

TEST_CASE("config validation") {
  LoraConfig bad;
  bad.rank = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad.rank = 4;
  bad.alpha = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  LoraConfig ok;
  CHECK(ok.scale() == doctest::Approx(2.0));
}

TEST_CASE("fresh adapter is an exact identity") {
  Rng rng(41);
  LoraConfig cfg;
  cfg.rank = 3;
  cfg.alpha = 6.0;
  LoraAdapter ad = LoraAdapter::init("lora/test", 5, 4, cfg, rng);
  Param w{"w", random_tensor({5, 4}, rng)};
  Param b{"b", random_tensor({1, 5}, rng)};
  Tensor x = random_tensor({3, 4}, rng);

  Tape t;
  Tape::Var xin = t.constant(x);
  Tape::Var with = lora_apply(t, xin, w, b, &ad);
  Tape::Var without = lora_apply(t, xin, w, b, nullptr);
  CHECK(t.val(with).max_abs_diff(t.val(without)) == 0.0);
}

TEST_CASE("hand-computable rank-1 adapter") {
  LoraConfig cfg;
  cfg.rank = 1;
  cfg.alpha = 1.0;
  LoraAdapter ad;
  ad.config = cfg;
  ad.a = Param{"A", Tensor::matrix({{1, 0}})};
  ad.b = Param{"B", Tensor::matrix({{1}, {0}})};
  Param w{"w", Tensor({2, 2})};
  Param b{"b", Tensor({1, 2})};
  Tape t;
  Tape::Var y = lora_apply(t, t.constant(Tensor::matrix({{2, 5}})), w, b, &ad);
  CHECK(t.val(y).max_abs_diff(Tensor::matrix({{2, 0}})) == 0.0);
}

TEST_CASE("merge equivalence on random instances") {
  Rng rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    LoraConfig cfg;
    cfg.rank = 1 + static_cast<int>(rng.uniform_int(0, 3));
    cfg.alpha = 0.5 + rng.uniform() * 8.0;
    const int64_t d_in = 3 + rng.uniform_int(0, 3);
    const int64_t d_out = 2 + rng.uniform_int(0, 4);
    LoraAdapter ad = LoraAdapter::init("lora/t", d_out, d_in, cfg, rng);
    rng.fill_normal(ad.b.value.data(), ad.b.value.size(), 0.0, 0.7);  // non-trivial delta
    Param w{"w", random_tensor({d_out, d_in}, rng)};
    Param b{"b", random_tensor({1, d_out}, rng)};
    Param merged{"wm", lora_merge(w.value, ad)};
    Tensor x = random_tensor({4, d_in}, rng);

    Tape t;
    Tape::Var xin = t.constant(x);
    Tape::Var applied = lora_apply(t, xin, w, b, &ad);
    Tape::Var via_merge = linear(t, xin, t.leaf(merged), t.leaf(b));
    CHECK(t.val(applied).max_abs_diff(t.val(via_merge)) < 1e-10);
  }
}

TEST_CASE("merge is pure and scales by alpha/r") {
  Rng rng(19);
  LoraConfig cfg;
  cfg.rank = 3;
  cfg.alpha = 6.0;  // alpha = 2r
  LoraAdapter ad = LoraAdapter::init("lora/t", 4, 5, cfg, rng);
  rng.fill_normal(ad.b.value.data(), ad.b.value.size(), 0.0, 1.0);

  Param w{"w", random_tensor({4, 5}, rng)};
  const Tensor w_before = w.value;
  const Tensor merged = lora_merge(w.value, ad);
  CHECK(w.value.max_abs_diff(w_before) == 0.0);

  const Tensor ba = mm_nn(ad.b.value, ad.a.value);
  for (int64_t i = 0; i < merged.size(); ++i)
    CHECK(std::fabs((merged[i] - w.value[i]) - 2.0 * ba[i]) < 1e-12);

  LoraAdapter zero = LoraAdapter::init("lora/z", 4, 5, cfg, rng);
  CHECK(lora_merge(w.value, zero).max_abs_diff(w.value) == 0.0);
}

TEST_CASE("gradients reach A and B but never the frozen base") {
  Rng rng(23);
  LoraConfig cfg;
  cfg.rank = 2;
  cfg.alpha = 4.0;
  LoraAdapter ad = LoraAdapter::init("lora/t", 3, 3, cfg, rng);
  rng.fill_normal(ad.b.value.data(), ad.b.value.size(), 0.0, 0.5);
  Param w{"w", random_tensor({3, 3}, rng)};
  Param b{"b", random_tensor({1, 3}, rng)};
  Tensor x = random_tensor({2, 3}, rng);

  ParamSet set = {&ad.a, &ad.b};
  Tape t(&set);
  Tape::Var y = lora_apply(t, t.constant(x), w, b, &ad);
  Tape::Var loss = t.pick(t.mean_rows(y), 0, 0);
  t.backward(loss);
  CHECK(t.grad_of(ad.a).all_finite());
  bool a_nonzero = false, b_nonzero = false;
  for (int64_t i = 0; i < t.grad_of(ad.a).size(); ++i)
    a_nonzero = a_nonzero || t.grad_of(ad.a)[i] != 0.0;
  for (int64_t i = 0; i < t.grad_of(ad.b).size(); ++i)
    b_nonzero = b_nonzero || t.grad_of(ad.b)[i] != 0.0;
  CHECK(a_nonzero);
  CHECK(b_nonzero);
  CHECK(t.grad_of(w).max_abs_diff(Tensor({3, 3})) == 0.0);  // frozen base: zero grad
}

TEST_CASE("routing returns exactly the language's adapters") {
  Rng rng(31);
  LoraConfig cfg;
  const int n_layers = 6, split_k = 2, langs = 3;
  AdapterBank bank =
      AdapterBank::make_hierarchical(cfg, n_layers, split_k, langs, 8, 12, rng);

  const auto routed = route(bank, LidTag::make(1));
  CHECK(routed.size() == static_cast<size_t>((n_layers - split_k) * 3 + 1));
  for (const LoraAdapter* ad : routed)
    CHECK(ad->a.name.rfind("lora/lang1/", 0) == 0);

  CHECK_THROWS_AS(route(bank, LidTag::make(5)), RoutingError);
  CHECK_THROWS_AS(route(bank, LidTag::make(-1)), RoutingError);
}

TEST_CASE("bank layout invariants") {
  Rng rng(32);
  LoraConfig cfg;
  AdapterBank h = AdapterBank::make_hierarchical(cfg, 4, 2, 2, 8, 10, rng);
  CHECK(h.shared.size() == 2);
  CHECK(h.per_language[0].layers.size() == 2);
  CHECK(h.per_language[0].layers.count(0) == 0);  // no aliasing with shared layers
  CHECK(h.per_language[0].ctc.has_value());
  CHECK_THROWS_AS(AdapterBank::make_hierarchical(cfg, 4, 0, 2, 8, 10, rng), ConfigError);
  CHECK_THROWS_AS(AdapterBank::make_hierarchical(cfg, 4, 4, 2, 8, 10, rng), ConfigError);

  AdapterBank p = AdapterBank::make_per_language(cfg, 4, 2, 8, 10, rng);
  CHECK(p.shared.empty());
  CHECK(p.per_language[1].layers.size() == 4);
}

TEST_SUITE_END();
