#ifndef OODIL_TENSOR_HPP_
#define OODIL_TENSOR_HPP_

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace oodil {

// Dense row-major tensor of 64-bit floats. Shape is a list of dimension
// sizes; data length always equals the product of the shape entries.
struct Tensor {
  std::vector<size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<size_t> s) : shape(std::move(s)) {
    data.assign(numel_of(shape), 0.0);
  }
  Tensor(std::vector<size_t> s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
    if (data.size() != numel_of(shape)) {
      throw std::invalid_argument("tensor: data length does not match shape");
    }
  }

  static size_t numel_of(const std::vector<size_t>& s) {
    size_t n = 1;
    for (size_t d : s) n *= d;
    return n;
  }

  size_t numel() const { return data.size(); }
  size_t rows() const { return shape.empty() ? 0 : shape[0]; }
  size_t cols() const { return shape.size() < 2 ? 1 : shape[1]; }

  double& at(size_t r, size_t c) { return data[r * cols() + c]; }
  double at(size_t r, size_t c) const { return data[r * cols() + c]; }

  double* row(size_t r) { return data.data() + r * cols(); }
  const double* row(size_t r) const { return data.data() + r * cols(); }

  void fill(double v) { std::fill(data.begin(), data.end(), v); }

  bool all_finite() const {
    for (double v : data) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  void check_finite(const std::string& what) const {
    if (!all_finite()) throw std::runtime_error("non-finite values in " + what);
  }
};

inline Tensor zeros_like(const Tensor& t) { return Tensor(t.shape); }

inline bool same_shape(const Tensor& a, const Tensor& b) { return a.shape == b.shape; }

}  // namespace oodil

#endif  // OODIL_TENSOR_HPP_
