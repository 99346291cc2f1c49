// Copyright 2026 The mlasr Authors
// SPDX-License-Identifier: Apache-2.0

#include "mlasr/tensor.hpp"

#include <cmath>
#include <cstring>
#include <limits>
#include <sstream>

#include "mlasr/errors.hpp"

namespace mlasr {

namespace {
int64_t shape_product(const std::vector<int64_t>& shape) {
  int64_t n = 1;
  for (int64_t d : shape) {
    if (d < 0) throw ShapeError("negative dimension in shape");
    n *= d;
  }
  return n;
}
}  // namespace

Tensor::Tensor(std::vector<int64_t> shape)
    : shape_(std::move(shape)), data_(static_cast<size_t>(shape_product(shape_)), 0.0) {}

Tensor::Tensor(std::vector<int64_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_product(shape_) != static_cast<int64_t>(data_.size()))
    throw ShapeError("tensor data length does not match shape product");
}

Tensor Tensor::full(std::vector<int64_t> shape, double v) {
  Tensor t(std::move(shape));
  for (auto& x : t.data_) x = v;
  return t;
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
  int64_t r = static_cast<int64_t>(rows.size());
  int64_t c = r > 0 ? static_cast<int64_t>(rows.begin()->size()) : 0;
  Tensor t({r, c});
  int64_t i = 0;
  for (const auto& row : rows) {
    if (static_cast<int64_t>(row.size()) != c)
      throw ShapeError("ragged matrix literal");
    for (double v : row) t.data_[i++] = v;
  }
  return t;
}

Tensor Tensor::row(std::initializer_list<double> vals) {
  Tensor t({1, static_cast<int64_t>(vals.size())});
  int64_t i = 0;
  for (double v : vals) t.data_[i++] = v;
  return t;
}

std::string Tensor::shape_str() const {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < shape_.size(); ++i) os << (i ? "," : "") << shape_[i];
  os << "]";
  return os.str();
}

bool Tensor::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

double Tensor::max_abs_diff(const Tensor& o) const {
  if (!same_shape(o)) throw ShapeError("max_abs_diff: shape mismatch " + shape_str() + " vs " + o.shape_str());
  double m = 0.0;
  for (size_t i = 0; i < data_.size(); ++i) m = std::max(m, std::fabs(data_[i] - o.data_[i]));
  return m;
}

void require_shape(bool ok, const std::string& what, const Tensor& a, const Tensor& b) {
  if (!ok)
    throw ShapeError(what + ": incompatible shapes " + a.shape_str() + " and " + b.shape_str());
}

void mm_nn_acc(const Tensor& a, const Tensor& b, Tensor& c) {
  require_shape(a.rank() == 2 && b.rank() == 2 && a.cols() == b.rows(), "mm_nn", a, b);
  const int64_t m = a.rows(), k = a.cols(), n = b.cols();
  const double* pa = a.data();
  const double* pb = b.data();
  double* pc = c.data();
  for (int64_t i = 0; i < m; ++i) {
    const double* ai = pa + i * k;
    double* ci = pc + i * n;
    for (int64_t p = 0; p < k; ++p) {
      const double av = ai[p];
      if (av == 0.0) continue;
      const double* bp = pb + p * n;
      for (int64_t j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

void mm_nt_acc(const Tensor& a, const Tensor& b, Tensor& c) {
  require_shape(a.rank() == 2 && b.rank() == 2 && a.cols() == b.cols(), "mm_nt", a, b);
  const int64_t m = a.rows(), k = a.cols(), n = b.rows();
  const double* pa = a.data();
  const double* pb = b.data();
  double* pc = c.data();
  for (int64_t i = 0; i < m; ++i) {
    const double* ai = pa + i * k;
    double* ci = pc + i * n;
    for (int64_t j = 0; j < n; ++j) {
      const double* bj = pb + j * k;
      double s = 0.0;
      for (int64_t p = 0; p < k; ++p) s += ai[p] * bj[p];
      ci[j] += s;
    }
  }
}

void mm_tn_acc(const Tensor& a, const Tensor& b, Tensor& c) {
  require_shape(a.rank() == 2 && b.rank() == 2 && a.rows() == b.rows(), "mm_tn", a, b);
  const int64_t m = a.rows(), k = a.cols(), n = b.cols();
  const double* pa = a.data();
  const double* pb = b.data();
  double* pc = c.data();
  for (int64_t i = 0; i < m; ++i) {
    const double* ai = pa + i * k;
    const double* bi = pb + i * n;
    for (int64_t p = 0; p < k; ++p) {
      const double av = ai[p];
      if (av == 0.0) continue;
      double* cp = pc + p * n;
      for (int64_t j = 0; j < n; ++j) cp[j] += av * bi[j];
    }
  }
}

Tensor mm_nn(const Tensor& a, const Tensor& b) {
  Tensor c({a.rows(), b.cols()});
  mm_nn_acc(a, b, c);
  return c;
}

Tensor mm_nt(const Tensor& a, const Tensor& b) {
  Tensor c({a.rows(), b.rows()});
  mm_nt_acc(a, b, c);
  return c;
}

Tensor mm_tn(const Tensor& a, const Tensor& b) {
  Tensor c({a.cols(), b.cols()});
  mm_tn_acc(a, b, c);
  return c;
}

void add_inplace(Tensor& dst, const Tensor& src) {
  require_shape(dst.same_shape(src), "add_inplace", dst, src);
  double* d = dst.data();
  const double* s = src.data();
  for (int64_t i = 0; i < dst.size(); ++i) d[i] += s[i];
}

void axpy_inplace(Tensor& dst, double alpha, const Tensor& src) {
  require_shape(dst.same_shape(src), "axpy_inplace", dst, src);
  double* d = dst.data();
  const double* s = src.data();
  for (int64_t i = 0; i < dst.size(); ++i) d[i] += alpha * s[i];
}

uint64_t tensor_checksum(const Tensor& t) {
  uint64_t h = 1469598103934665603ULL;
  const double* p = t.data();
  for (int64_t i = 0; i < t.size(); ++i) {
    uint64_t bits;
    std::memcpy(&bits, &p[i], sizeof(bits));
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xffULL;
      h *= 1099511628211ULL;
    }
  }
  return h;
}

double logsumexp(const std::vector<double>& xs) {
  const double neg_inf = -std::numeric_limits<double>::infinity();
  if (xs.empty()) return neg_inf;
  double m = neg_inf;
  for (double x : xs) m = std::max(m, x);
  if (m == neg_inf) return neg_inf;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

double logsumexp2(double a, double b) {
  const double m = std::max(a, b);
  if (m == -std::numeric_limits<double>::infinity()) return m;
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

double logsumexp3(double a, double b, double c) {
  const double m = std::max(a, std::max(b, c));
  if (m == -std::numeric_limits<double>::infinity()) return m;
  return m + std::log(std::exp(a - m) + std::exp(b - m) + std::exp(c - m));
}

}  // namespace mlasr
