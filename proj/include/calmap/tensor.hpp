#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "calmap/errors.hpp"

namespace calmap {

/// Dense row-major array of doubles with up to four dimensions.
/// Copies share storage (numpy-style); use clone() for an independent buffer.
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
    alloc();
  }

  static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }

  static Tensor full(std::vector<int> shape, double v) {
    Tensor t(std::move(shape));
    std::fill(t.data(), t.data() + t.size(), v);
    return t;
  }

  static Tensor scalar(double v) { return full({1}, v); }

  static Tensor from(std::vector<int> shape, std::vector<double> values) {
    Tensor t;
    t.shape_ = std::move(shape);
    int64_t n = t.count();
    if (static_cast<int64_t>(values.size()) != n)
      throw ShapeError("Tensor::from: value count does not match shape");
    t.buf_ = std::make_shared<std::vector<double>>(std::move(values));
    return t;
  }

  bool defined() const { return static_cast<bool>(buf_); }
  int dim() const { return static_cast<int>(shape_.size()); }
  const std::vector<int>& shape() const { return shape_; }
  int shape(int i) const { return shape_.at(i); }
  int64_t size() const { return buf_ ? static_cast<int64_t>(buf_->size()) : 0; }

  double* data() { return buf_->data(); }
  const double* data() const { return buf_->data(); }

  double& operator[](int64_t i) { return (*buf_)[i]; }
  double operator[](int64_t i) const { return (*buf_)[i]; }

  double& at(int i, int j) { return (*buf_)[static_cast<int64_t>(i) * shape_[1] + j]; }
  double at(int i, int j) const { return (*buf_)[static_cast<int64_t>(i) * shape_[1] + j]; }
  double& at(int i, int j, int k) {
    return (*buf_)[(static_cast<int64_t>(i) * shape_[1] + j) * shape_[2] + k];
  }
  double at(int i, int j, int k) const {
    return (*buf_)[(static_cast<int64_t>(i) * shape_[1] + j) * shape_[2] + k];
  }
  double& at(int i, int j, int k, int l) {
    return (*buf_)[((static_cast<int64_t>(i) * shape_[1] + j) * shape_[2] + k) * shape_[3] + l];
  }
  double at(int i, int j, int k, int l) const {
    return (*buf_)[((static_cast<int64_t>(i) * shape_[1] + j) * shape_[2] + k) * shape_[3] + l];
  }

  double item() const {
    if (size() != 1) throw ShapeError("item() on non-scalar tensor");
    return (*buf_)[0];
  }

  Tensor clone() const {
    Tensor t;
    t.shape_ = shape_;
    t.buf_ = std::make_shared<std::vector<double>>(*buf_);
    return t;
  }

  Tensor reshaped(std::vector<int> shape) const {
    Tensor t;
    t.shape_ = std::move(shape);
    if (t.count() != size()) throw ShapeError("reshaped: size mismatch");
    t.buf_ = buf_;
    return t;
  }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  bool all_finite() const {
    for (int64_t i = 0; i < size(); ++i)
      if (!std::isfinite((*buf_)[i])) return false;
    return true;
  }

  void fill(double v) { std::fill(buf_->begin(), buf_->end(), v); }

  double sum() const {
    double s = 0;
    for (int64_t i = 0; i < size(); ++i) s += (*buf_)[i];
    return s;
  }
  double mean() const { return size() ? sum() / static_cast<double>(size()) : 0.0; }
  double min() const {
    double m = (*buf_)[0];
    for (int64_t i = 1; i < size(); ++i) m = std::min(m, (*buf_)[i]);
    return m;
  }
  double max() const {
    double m = (*buf_)[0];
    for (int64_t i = 1; i < size(); ++i) m = std::max(m, (*buf_)[i]);
    return m;
  }
  double std() const {
    if (size() < 2) return 0.0;
    double m = mean(), s = 0;
    for (int64_t i = 0; i < size(); ++i) {
      double d = (*buf_)[i] - m;
      s += d * d;
    }
    return std::sqrt(s / static_cast<double>(size()));
  }

  std::string shape_str() const {
    std::string s = "(";
    for (size_t i = 0; i < shape_.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(shape_[i]);
    }
    return s + ")";
  }

 private:
  int64_t count() const {
    int64_t n = 1;
    for (int d : shape_) {
      if (d <= 0) throw ShapeError("non-positive dimension in tensor shape");
      n *= d;
    }
    return n;
  }
  void alloc() { buf_ = std::make_shared<std::vector<double>>(count(), 0.0); }

  std::vector<int> shape_;
  std::shared_ptr<std::vector<double>> buf_;
};

}  // namespace calmap
