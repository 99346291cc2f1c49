// Copyright 2026 The mlasr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mlasr {

// Dense row-major float64 tensor. Rank is dynamic but almost everything in
// this codebase is a matrix [rows, cols] or a row vector [1, n].
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int64_t> shape);
  Tensor(std::vector<int64_t> shape, std::vector<double> data);

  static Tensor zeros(std::vector<int64_t> shape) { return Tensor(std::move(shape)); }
  static Tensor full(std::vector<int64_t> shape, double v);
  // Row-major matrix literal, e.g. Tensor::matrix({{1,2},{3,4}}).
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);
  static Tensor row(std::initializer_list<double> vals);

  const std::vector<int64_t>& shape() const { return shape_; }
  int64_t dim(size_t i) const { return shape_[i]; }
  size_t rank() const { return shape_.size(); }
  int64_t size() const { return static_cast<int64_t>(data_.size()); }

  // Matrix accessors; valid only for rank-2 tensors.
  int64_t rows() const { return shape_[0]; }
  int64_t cols() const { return shape_[1]; }
  double& at(int64_t r, int64_t c) { return data_[r * shape_[1] + c]; }
  double at(int64_t r, int64_t c) const { return data_[r * shape_[1] + c]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  double& operator[](int64_t i) { return data_[i]; }
  double operator[](int64_t i) const { return data_[i]; }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
  std::string shape_str() const;

  bool all_finite() const;
  double max_abs_diff(const Tensor& o) const;

 private:
  std::vector<int64_t> shape_;
  std::vector<double> data_;
};

// Raw matrix products used by the tape forward and backward kernels.
// c (+)= a x b with the indicated transpositions; accumulate adds into c.
Tensor mm_nn(const Tensor& a, const Tensor& b);           // [m,k]x[k,n]
Tensor mm_nt(const Tensor& a, const Tensor& b);           // [m,k]x[n,k]^T
Tensor mm_tn(const Tensor& a, const Tensor& b);           // [m,k]^T x [m,n]
void mm_nn_acc(const Tensor& a, const Tensor& b, Tensor& c);
void mm_nt_acc(const Tensor& a, const Tensor& b, Tensor& c);
void mm_tn_acc(const Tensor& a, const Tensor& b, Tensor& c);

void add_inplace(Tensor& dst, const Tensor& src);
void axpy_inplace(Tensor& dst, double alpha, const Tensor& src);

// FNV-1a over the raw float64 bytes; used for parameter-isolation audits.
uint64_t tensor_checksum(const Tensor& t);

// log(sum_i exp(xs_i)) with max shift; empty input yields -infinity and
// -infinity elements act as identities.
double logsumexp(const std::vector<double>& xs);
double logsumexp2(double a, double b);
double logsumexp3(double a, double b, double c);

void require_shape(bool ok, const std::string& what, const Tensor& a, const Tensor& b);

}  // namespace mlasr
