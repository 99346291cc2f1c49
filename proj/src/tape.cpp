// Copyright 2026 The mlasr Authors
// SPDX-License-Identifier: Apache-2.0

#include "mlasr/tape.hpp"

#include <cmath>
#include <limits>

#include "mlasr/errors.hpp"

namespace mlasr {

Tape::Var Tape::push(Tensor value, bool needs_grad) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = needs_grad;
  if (needs_grad) n.grad = Tensor(n.value.shape());
  nodes_.push_back(std::move(n));
  return static_cast<Var>(nodes_.size() - 1);
}

Tape::Var Tape::constant(Tensor v) { return push(std::move(v), false); }

Tape::Var Tape::leaf(const Param& p) {
  auto it = leaf_cache_.find(&p);
  if (it != leaf_cache_.end()) return it->second;
  Node n;
  n.external = &p.value;
  n.needs_grad = trainable_ != nullptr && trainable_->count(&p) > 0;
  if (n.needs_grad) n.grad = Tensor(p.value.shape());
  nodes_.push_back(std::move(n));
  Var v = static_cast<Var>(nodes_.size() - 1);
  leaf_cache_.emplace(&p, v);
  return v;
}

Tensor Tape::grad_of(const Param& p) const {
  auto it = leaf_cache_.find(&p);
  if (it == leaf_cache_.end() || !nodes_[it->second].needs_grad)
    return Tensor(p.value.shape());
  return nodes_[it->second].grad;
}

void Tape::backward(Var loss) {
  const Tensor& lv = val(loss);
  if (lv.size() != 1) throw ShapeError("backward: loss must be a scalar, got " + lv.shape_str());
  if (!nodes_[loss].needs_grad) return;  // nothing trainable upstream
  grad_mut(loss)[0] = 1.0;
  for (Var v = loss; v >= 0; --v) {
    Node& n = nodes_[v];
    if (n.needs_grad && n.backward) n.backward(*this);
  }
}

Tape::Var Tape::matmul(Var a, Var b) {
  Tensor c = mm_nn(val(a), val(b));
  const bool ng = needs_grad(a) || needs_grad(b);
  Var out = push(std::move(c), ng);
  if (ng)
    nodes_[out].backward = [out, a, b](Tape& t) {
      const Tensor& dc = t.grad(out);
      if (t.needs_grad(a)) mm_nt_acc(dc, t.val(b), t.grad_mut(a));
      if (t.needs_grad(b)) mm_tn_acc(t.val(a), dc, t.grad_mut(b));
    };
  return out;
}

Tape::Var Tape::matmul_nt(Var a, Var b) {
  Tensor c = mm_nt(val(a), val(b));
  const bool ng = needs_grad(a) || needs_grad(b);
  Var out = push(std::move(c), ng);
  if (ng)
    nodes_[out].backward = [out, a, b](Tape& t) {
      const Tensor& dc = t.grad(out);
      if (t.needs_grad(a)) mm_nn_acc(dc, t.val(b), t.grad_mut(a));
      if (t.needs_grad(b)) mm_tn_acc(dc, t.val(a), t.grad_mut(b));
    };
  return out;
}

Tape::Var Tape::add(Var a, Var b) {
  const Tensor& A = val(a);
  const Tensor& B = val(b);
  require_shape(A.same_shape(B), "add", A, B);
  Tensor c = A;
  add_inplace(c, B);
  const bool ng = needs_grad(a) || needs_grad(b);
  Var out = push(std::move(c), ng);
  if (ng)
    nodes_[out].backward = [out, a, b](Tape& t) {
      const Tensor& dc = t.grad(out);
      if (t.needs_grad(a)) add_inplace(t.grad_mut(a), dc);
      if (t.needs_grad(b)) add_inplace(t.grad_mut(b), dc);
    };
  return out;
}

Tape::Var Tape::add_bias(Var x, Var bias) {
  const Tensor& X = val(x);
  const Tensor& B = val(bias);
  require_shape(X.rank() == 2 && B.size() == X.cols(), "add_bias", X, B);
  Tensor y = X;
  const int64_t T = X.rows(), d = X.cols();
  for (int64_t t = 0; t < T; ++t)
    for (int64_t j = 0; j < d; ++j) y.at(t, j) += B[j];
  const bool ng = needs_grad(x) || needs_grad(bias);
  Var out = push(std::move(y), ng);
  if (ng)
    nodes_[out].backward = [out, x, bias, T, d](Tape& t) {
      const Tensor& dy = t.grad(out);
      if (t.needs_grad(x)) add_inplace(t.grad_mut(x), dy);
      if (t.needs_grad(bias)) {
        Tensor& db = t.grad_mut(bias);
        for (int64_t r = 0; r < T; ++r)
          for (int64_t j = 0; j < d; ++j) db[j] += dy.at(r, j);
      }
    };
  return out;
}

Tape::Var Tape::scale(Var x, double c) {
  Tensor y = val(x);
  for (int64_t i = 0; i < y.size(); ++i) y[i] *= c;
  const bool ng = needs_grad(x);
  Var out = push(std::move(y), ng);
  if (ng)
    nodes_[out].backward = [out, x, c](Tape& t) {
      axpy_inplace(t.grad_mut(x), c, t.grad(out));
    };
  return out;
}

namespace {
// exact gelu: x * Phi(x)
inline double gelu_fwd(double v) { return 0.5 * v * (1.0 + std::erf(v * M_SQRT1_2)); }
inline double gelu_bwd(double v) {
  const double phi = std::exp(-0.5 * v * v) / std::sqrt(2.0 * M_PI);
  return 0.5 * (1.0 + std::erf(v * M_SQRT1_2)) + v * phi;
}
}  // namespace

Tape::Var Tape::gelu(Var x) {
  Tensor y = val(x);
  for (int64_t i = 0; i < y.size(); ++i) y[i] = gelu_fwd(y[i]);
  const bool ng = needs_grad(x);
  Var out = push(std::move(y), ng);
  if (ng)
    nodes_[out].backward = [out, x](Tape& t) {
      const Tensor& X = t.val(x);
      const Tensor& dy = t.grad(out);
      Tensor& dx = t.grad_mut(x);
      for (int64_t i = 0; i < X.size(); ++i) dx[i] += dy[i] * gelu_bwd(X[i]);
    };
  return out;
}

Tape::Var Tape::layer_norm(Var x, Var gain, Var bias, double eps) {
  const Tensor& X = val(x);
  const Tensor& G = val(gain);
  const Tensor& B = val(bias);
  require_shape(X.rank() == 2 && G.size() == X.cols(), "layer_norm gain", X, G);
  require_shape(B.size() == X.cols(), "layer_norm bias", X, B);
  const int64_t T = X.rows(), d = X.cols();
  Tensor y({T, d});
  Tensor xhat({T, d});
  std::vector<double> inv_sigma(static_cast<size_t>(T));
  for (int64_t t = 0; t < T; ++t) {
    double mu = 0.0;
    for (int64_t j = 0; j < d; ++j) mu += X.at(t, j);
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (int64_t j = 0; j < d; ++j) {
      const double c = X.at(t, j) - mu;
      var += c * c;
    }
    var /= static_cast<double>(d);
    const double is = 1.0 / std::sqrt(var + eps);
    inv_sigma[static_cast<size_t>(t)] = is;
    for (int64_t j = 0; j < d; ++j) {
      const double h = (X.at(t, j) - mu) * is;
      xhat.at(t, j) = h;
      y.at(t, j) = G[j] * h + B[j];
    }
  }
  const bool ng = needs_grad(x) || needs_grad(gain) || needs_grad(bias);
  Var out = push(std::move(y), ng);
  if (ng)
    nodes_[out].backward = [out, x, gain, bias, xh = std::move(xhat),
                            is = std::move(inv_sigma), T, d](Tape& t) {
      const Tensor& dy = t.grad(out);
      const Tensor& G = t.val(gain);
      if (t.needs_grad(gain)) {
        Tensor& dg = t.grad_mut(gain);
        for (int64_t r = 0; r < T; ++r)
          for (int64_t j = 0; j < d; ++j) dg[j] += dy.at(r, j) * xh.at(r, j);
      }
      if (t.needs_grad(bias)) {
        Tensor& db = t.grad_mut(bias);
        for (int64_t r = 0; r < T; ++r)
          for (int64_t j = 0; j < d; ++j) db[j] += dy.at(r, j);
      }
      if (t.needs_grad(x)) {
        Tensor& dx = t.grad_mut(x);
        const double dn = static_cast<double>(d);
        for (int64_t r = 0; r < T; ++r) {
          double sum_dh = 0.0, sum_dh_xh = 0.0;
          for (int64_t j = 0; j < d; ++j) {
            const double dh = dy.at(r, j) * G[j];
            sum_dh += dh;
            sum_dh_xh += dh * xh.at(r, j);
          }
          for (int64_t j = 0; j < d; ++j) {
            const double dh = dy.at(r, j) * G[j];
            dx.at(r, j) += is[static_cast<size_t>(r)] *
                           (dh - sum_dh / dn - xh.at(r, j) * sum_dh_xh / dn);
          }
        }
      }
    };
  return out;
}

Tape::Var Tape::softmax_rows(Var x) {
  const Tensor& X = val(x);
  require_shape(X.rank() == 2 && X.cols() >= 1, "softmax_rows", X, X);
  const int64_t T = X.rows(), d = X.cols();
  Tensor y({T, d});
  for (int64_t t = 0; t < T; ++t) {
    double m = -std::numeric_limits<double>::infinity();
    for (int64_t j = 0; j < d; ++j) m = std::max(m, X.at(t, j));
    double s = 0.0;
    for (int64_t j = 0; j < d; ++j) s += std::exp(X.at(t, j) - m);
    for (int64_t j = 0; j < d; ++j) y.at(t, j) = std::exp(X.at(t, j) - m) / s;
  }
  const bool ng = needs_grad(x);
  Var out = push(std::move(y), ng);
  if (ng)
    nodes_[out].backward = [out, x, T, d](Tape& t) {
      const Tensor& Y = t.val(out);
      const Tensor& dy = t.grad(out);
      Tensor& dx = t.grad_mut(x);
      for (int64_t r = 0; r < T; ++r) {
        double dot = 0.0;
        for (int64_t j = 0; j < d; ++j) dot += dy.at(r, j) * Y.at(r, j);
        for (int64_t j = 0; j < d; ++j)
          dx.at(r, j) += Y.at(r, j) * (dy.at(r, j) - dot);
      }
    };
  return out;
}

Tape::Var Tape::log_softmax_rows(Var x) {
  const Tensor& X = val(x);
  require_shape(X.rank() == 2 && X.cols() >= 1, "log_softmax_rows", X, X);
  const int64_t T = X.rows(), d = X.cols();
  Tensor y({T, d});
  for (int64_t t = 0; t < T; ++t) {
    double m = -std::numeric_limits<double>::infinity();
    for (int64_t j = 0; j < d; ++j) m = std::max(m, X.at(t, j));
    double s = 0.0;
    for (int64_t j = 0; j < d; ++j) s += std::exp(X.at(t, j) - m);
    const double lse = m + std::log(s);
    for (int64_t j = 0; j < d; ++j) y.at(t, j) = X.at(t, j) - lse;
  }
  const bool ng = needs_grad(x);
  Var out = push(std::move(y), ng);
  if (ng)
    nodes_[out].backward = [out, x, T, d](Tape& t) {
      const Tensor& Y = t.val(out);
      const Tensor& dy = t.grad(out);
      Tensor& dx = t.grad_mut(x);
      for (int64_t r = 0; r < T; ++r) {
        double s = 0.0;
        for (int64_t j = 0; j < d; ++j) s += dy.at(r, j);
        for (int64_t j = 0; j < d; ++j)
          dx.at(r, j) += dy.at(r, j) - std::exp(Y.at(r, j)) * s;
      }
    };
  return out;
}

Tape::Var Tape::mean_rows(Var x) {
  const Tensor& X = val(x);
  require_shape(X.rank() == 2 && X.rows() >= 1, "mean_rows", X, X);
  const int64_t T = X.rows(), d = X.cols();
  Tensor y({1, d});
  for (int64_t t = 0; t < T; ++t)
    for (int64_t j = 0; j < d; ++j) y[j] += X.at(t, j);
  for (int64_t j = 0; j < d; ++j) y[j] /= static_cast<double>(T);
  const bool ng = needs_grad(x);
  Var out = push(std::move(y), ng);
  if (ng)
    nodes_[out].backward = [out, x, T, d](Tape& t) {
      const Tensor& dy = t.grad(out);
      Tensor& dx = t.grad_mut(x);
      const double inv = 1.0 / static_cast<double>(T);
      for (int64_t r = 0; r < T; ++r)
        for (int64_t j = 0; j < d; ++j) dx.at(r, j) += dy[j] * inv;
    };
  return out;
}

Tape::Var Tape::slice_cols(Var x, int64_t c0, int64_t w) {
  const Tensor& X = val(x);
  require_shape(X.rank() == 2 && c0 >= 0 && w >= 1 && c0 + w <= X.cols(), "slice_cols", X, X);
  const int64_t T = X.rows();
  Tensor y({T, w});
  for (int64_t t = 0; t < T; ++t)
    for (int64_t j = 0; j < w; ++j) y.at(t, j) = X.at(t, c0 + j);
  const bool ng = needs_grad(x);
  Var out = push(std::move(y), ng);
  if (ng)
    nodes_[out].backward = [out, x, c0, w, T](Tape& t) {
      const Tensor& dy = t.grad(out);
      Tensor& dx = t.grad_mut(x);
      for (int64_t r = 0; r < T; ++r)
        for (int64_t j = 0; j < w; ++j) dx.at(r, c0 + j) += dy.at(r, j);
    };
  return out;
}

Tape::Var Tape::concat_cols(std::span<const Var> xs) {
  if (xs.empty()) throw ShapeError("concat_cols: empty input");
  const int64_t T = val(xs[0]).rows();
  int64_t total = 0;
  bool ng = false;
  for (Var v : xs) {
    const Tensor& X = val(v);
    require_shape(X.rank() == 2 && X.rows() == T, "concat_cols", val(xs[0]), X);
    total += X.cols();
    ng = ng || needs_grad(v);
  }
  Tensor y({T, total});
  int64_t off = 0;
  for (Var v : xs) {
    const Tensor& X = val(v);
    for (int64_t t = 0; t < T; ++t)
      for (int64_t j = 0; j < X.cols(); ++j) y.at(t, off + j) = X.at(t, j);
    off += X.cols();
  }
  Var out = push(std::move(y), ng);
  if (ng)
    nodes_[out].backward = [out, parts = std::vector<Var>(xs.begin(), xs.end()), T](Tape& t) {
      const Tensor& dy = t.grad(out);
      int64_t o = 0;
      for (Var v : parts) {
        const int64_t w = t.val(v).cols();
        if (t.needs_grad(v)) {
          Tensor& dx = t.grad_mut(v);
          for (int64_t r = 0; r < T; ++r)
            for (int64_t j = 0; j < w; ++j) dx.at(r, j) += dy.at(r, o + j);
        }
        o += w;
      }
    };
  return out;
}

Tape::Var Tape::pick(Var x, int64_t r, int64_t c) {
  const Tensor& X = val(x);
  require_shape(X.rank() == 2 && r >= 0 && r < X.rows() && c >= 0 && c < X.cols(), "pick", X, X);
  Tensor y({1, 1});
  y[0] = X.at(r, c);
  const bool ng = needs_grad(x);
  Var out = push(std::move(y), ng);
  if (ng)
    nodes_[out].backward = [out, x, r, c](Tape& t) {
      t.grad_mut(x).at(r, c) += t.grad(out)[0];
    };
  return out;
}

Tape::Var Tape::mul_scalar(Var x, Var s) {
  const Tensor& X = val(x);
  const Tensor& S = val(s);
  require_shape(S.size() == 1, "mul_scalar", X, S);
  Tensor y = X;
  for (int64_t i = 0; i < y.size(); ++i) y[i] *= S[0];
  const bool ng = needs_grad(x) || needs_grad(s);
  Var out = push(std::move(y), ng);
  if (ng)
    nodes_[out].backward = [out, x, s](Tape& t) {
      const Tensor& dy = t.grad(out);
      const double sv = t.val(s)[0];
      if (t.needs_grad(x)) axpy_inplace(t.grad_mut(x), sv, dy);
      if (t.needs_grad(s)) {
        const Tensor& X = t.val(x);
        double acc = 0.0;
        for (int64_t i = 0; i < X.size(); ++i) acc += dy[i] * X[i];
        t.grad_mut(s)[0] += acc;
      }
    };
  return out;
}

Tape::Var linear(Tape& t, Tape::Var x, Tape::Var w, Tape::Var b) {
  const Tensor& X = t.val(x);
  const Tensor& W = t.val(w);
  require_shape(X.rank() == 2 && W.rank() == 2 && X.cols() == W.cols(), "linear", X, W);
  return t.add_bias(t.matmul_nt(x, w), b);
}

double grad_check(const std::function<Tape::Var(Tape&)>& build_loss,
                  std::span<Param* const> params, double eps) {
  ParamSet trainable;
  for (Param* p : params) trainable.insert(p);
  Tape tape(&trainable);
  Tape::Var loss = build_loss(tape);
  if (!std::isfinite(tape.scalar(loss)))
    throw NumericError("grad_check: non-finite loss at the unperturbed point");
  tape.backward(loss);

  std::vector<Tensor> analytic;
  analytic.reserve(params.size());
  for (Param* p : params) analytic.push_back(tape.grad_of(*p));

  auto eval = [&](const Param* which, int64_t coord) -> double {
    Tape probe;  // nothing trainable; forward only
    const double v = probe.scalar(build_loss(probe));
    if (!std::isfinite(v))
      throw NumericError("grad_check: non-finite loss probing " + which->name + "[" +
                         std::to_string(coord) + "]");
    return v;
  };

  double worst = 0.0;
  for (size_t pi = 0; pi < params.size(); ++pi) {
    Param* p = params[pi];
    for (int64_t i = 0; i < p->value.size(); ++i) {
      const double orig = p->value[i];
      p->value[i] = orig + eps;
      const double fp = eval(p, i);
      p->value[i] = orig - eps;
      const double fm = eval(p, i);
      p->value[i] = orig;
      const double numeric = (fp - fm) / (2.0 * eps);
      const double a = analytic[pi][i];
      const double denom = std::max({std::fabs(a), std::fabs(numeric), 1e-8});
      worst = std::max(worst, std::fabs(a - numeric) / denom);
    }
  }
  return worst;
}

}  // namespace mlasr
