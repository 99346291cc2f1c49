// Copyright 2026 The mlasr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "mlasr/tensor.hpp"

namespace mlasr {

// A named trainable-or-frozen tensor. Identity is the address: optimizer
// state, tape leaves and checkpoint entries all key off `this`.
struct Param {
  std::string name;
  Tensor value;
};

using ParamSet = std::unordered_set<const Param*>;

// Reverse-mode tape. Ops append nodes in forward order; backward() replays
// them in exact reverse order, accumulating gradients only through nodes
// that transitively depend on a trainable leaf.
//
// Single-threaded per training step. Tensors handed out by val() are stable
// for the tape's lifetime.
class Tape {
 public:
  using Var = int32_t;

  // `trainable` may be null (pure evaluation, backward is a no-op).
  explicit Tape(const ParamSet* trainable = nullptr) : trainable_(trainable) {}

  Var constant(Tensor v);
  // Leaf over external parameter storage. Repeated calls with the same
  // param return the same node so gradients accumulate in one place.
  Var leaf(const Param& p);

  const Tensor& val(Var v) const { return nodes_[v].external ? *nodes_[v].external : nodes_[v].value; }
  double scalar(Var v) const { return val(v)[0]; }
  bool needs_grad(Var v) const { return nodes_[v].needs_grad; }

  // Valid after backward(), for needs_grad nodes only.
  const Tensor& grad(Var v) const { return nodes_[v].grad; }
  // Gradient of a parameter leaf; zero tensor if the param never entered
  // the graph or is frozen.
  Tensor grad_of(const Param& p) const;

  void backward(Var loss);

  // --- primitive ops -----------------------------------------------------
  Var matmul(Var a, Var b);     // [m,k]x[k,n]
  Var matmul_nt(Var a, Var b);  // [m,k] x [n,k]^T -> [m,n]
  Var add(Var a, Var b);
  Var add_bias(Var x, Var bias);  // bias [1,d] or [d] broadcast over rows
  Var scale(Var x, double c);
  Var gelu(Var x);
  Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-5);
  Var softmax_rows(Var x);
  Var log_softmax_rows(Var x);
  Var mean_rows(Var x);  // [T,d] -> [1,d]
  Var slice_cols(Var x, int64_t c0, int64_t w);
  Var concat_cols(std::span<const Var> xs);
  Var pick(Var x, int64_t r, int64_t c);  // -> [1,1]
  Var mul_scalar(Var x, Var s);           // s is a [1,1] var
  // -log p(target | log_probs) via the blank-interleaved alpha recursion;
  // custom backward through a beta recursion. Declared here, defined with
  // the rest of the CTC machinery.
  Var ctc_loss(Var log_probs, const std::vector<int>& target, int blank);

  size_t node_count() const { return nodes_.size(); }

 private:
  friend struct TapeOps;
  struct Node {
    Tensor value;
    const Tensor* external = nullptr;
    Tensor grad;
    bool needs_grad = false;
    std::function<void(Tape&)> backward;
  };

  Var push(Tensor value, bool needs_grad);
  Tensor& grad_mut(Var v) { return nodes_[v].grad; }

  std::vector<Node> nodes_;
  std::unordered_map<const Param*, Var> leaf_cache_;
  const ParamSet* trainable_;
};

// y = x W^T + b with W:[d_out,d_in], b:[1,d_out].
Tape::Var linear(Tape& t, Tape::Var x, Tape::Var w, Tape::Var b);

// Worst relative central-difference error over every coordinate of every
// param, with denominator max(|analytic|, |numeric|, 1e-8). `build_loss`
// must rebuild the whole forward pass from current param values.
double grad_check(const std::function<Tape::Var(Tape&)>& build_loss,
                  std::span<Param* const> params, double eps);

}  // namespace mlasr
