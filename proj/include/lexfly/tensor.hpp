#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "lexfly/errors.hpp"
#include "lexfly/rng.hpp"

namespace lexfly {

using Shape = std::vector<int>;

inline std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
  os << ']';
  return os.str();
}

// Dense row-major array of 64-bit floats. Rank 1 and 2 are what the models
// use; the container itself does not care.
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(Shape shape) : shape_(std::move(shape)) {
    data_.assign(count(shape_), 0.0);
  }

  Tensor(Shape shape, std::vector<double> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (count(shape_) != data_.size())
      throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                       " does not match shape " + shape_str(shape_));
  }

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }

  static Tensor full(Shape shape, double v) {
    Tensor t(std::move(shape));
    for (auto& x : t.data_) x = v;
    return t;
  }

  static Tensor scalar(double v) { return Tensor({1}, {v}); }

  static Tensor uniform(Shape shape, Rng& rng, double lo = -0.1,
                        double hi = 0.1) {
    Tensor t(std::move(shape));
    for (auto& x : t.data_) x = rng.uniform(lo, hi);
    return t;
  }

  const Shape& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  std::size_t size() const { return data_.size(); }

  int rows() const { return rank() == 2 ? shape_[0] : (rank() == 1 ? 1 : rank_err()); }
  int cols() const { return rank() == 2 ? shape_[1] : (rank() == 1 ? shape_[0] : rank_err()); }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double& at(int r, int c) { return data_[static_cast<std::size_t>(r) * cols() + c]; }
  double at(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols() + c]; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  bool all_zero() const {
    for (double v : data_)
      if (v != 0.0) return false;
    return true;
  }

  bool all_finite() const {
    for (double v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  Tensor& operator+=(const Tensor& o) {
    if (!same_shape(o))
      throw ShapeError("tensor += shape mismatch: " + shape_str(shape_) +
                       " vs " + shape_str(o.shape_));
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }

  void fill(double v) {
    for (auto& x : data_) x = v;
  }

  static std::size_t count(const Shape& s) {
    std::size_t n = 1;
    for (int d : s) {
      if (d <= 0) throw ShapeError("non-positive dimension in " + shape_str(s));
      n *= static_cast<std::size_t>(d);
    }
    return n;
  }

 private:
  [[noreturn]] int rank_err() const {
    throw ShapeError("expected rank-1/2 tensor, got " + shape_str(shape_));
  }

  Shape shape_;
  std::vector<double> data_;
};

}  // namespace lexfly
