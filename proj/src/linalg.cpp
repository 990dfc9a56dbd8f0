#include "oodil/linalg.hpp"

#include <stdexcept>

#include "oodil/parallel.hpp"

namespace oodil {

namespace {

void check_2d(const Tensor& t, const char* name) {
  if (t.shape.size() != 2) throw std::invalid_argument(std::string(name) + ": expected rank-2 tensor");
}

// axpy over a contiguous row: c += s * b. No reduction, so -O3 vectorizes it.
inline void axpy(double s, const double* b, double* c, size_t n) {
  for (size_t i = 0; i < n; i++) c[i] += s * b[i];
}

constexpr size_t kParallelFlopCutoff = 1u << 20;

}  // namespace

void matmul_nn(const Tensor& a, const Tensor& b, Tensor& c) {
  check_2d(a, "matmul_nn a");
  check_2d(b, "matmul_nn b");
  check_2d(c, "matmul_nn c");
  const size_t m = a.shape[0], k = a.shape[1], n = b.shape[1];
  if (b.shape[0] != k || c.shape[0] != m || c.shape[1] != n) {
    throw std::invalid_argument("matmul_nn: shape mismatch");
  }
  auto body = [&](size_t mb, size_t me) {
    for (size_t i = mb; i < me; i++) {
      const double* arow = a.row(i);
      double* crow = c.row(i);
      for (size_t p = 0; p < k; p++) axpy(arow[p], b.row(p), crow, n);
    }
  };
  if (m * k * n >= kParallelFlopCutoff) {
    parallel_for(m, body);
  } else {
    body(0, m);
  }
}

void matmul_nt(const Tensor& a, const Tensor& b, Tensor& c) {
  check_2d(a, "matmul_nt a");
  check_2d(b, "matmul_nt b");
  const size_t k = a.shape[1];
  if (b.shape[1] != k) throw std::invalid_argument("matmul_nt: inner dimension mismatch");
  // Transpose b once so the inner kernel is the contiguous axpy form.
  Tensor bt({k, b.shape[0]});
  for (size_t r = 0; r < b.shape[0]; r++) {
    const double* brow = b.row(r);
    for (size_t q = 0; q < k; q++) bt.at(q, r) = brow[q];
  }
  matmul_nn(a, bt, c);
}

void matmul_tn(const Tensor& a, const Tensor& b, Tensor& c) {
  check_2d(a, "matmul_tn a");
  check_2d(b, "matmul_tn b");
  check_2d(c, "matmul_tn c");
  const size_t k = a.shape[0], m = a.shape[1], n = b.shape[1];
  if (b.shape[0] != k || c.shape[0] != m || c.shape[1] != n) {
    throw std::invalid_argument("matmul_tn: shape mismatch");
  }
  auto body = [&](size_t mb, size_t me) {
    for (size_t p = 0; p < k; p++) {
      const double* arow = a.row(p);
      const double* brow = b.row(p);
      for (size_t i = mb; i < me; i++) axpy(arow[i], brow, c.row(i), n);
    }
  };
  if (m * k * n >= kParallelFlopCutoff) {
    parallel_for(m, body);
  } else {
    body(0, m);
  }
}

void col_sums(const Tensor& a, Tensor& c) {
  check_2d(a, "col_sums a");
  const size_t m = a.shape[0], n = a.shape[1];
  if (c.numel() != n) throw std::invalid_argument("col_sums: output size mismatch");
  for (size_t i = 0; i < m; i++) axpy(1.0, a.row(i), c.data.data(), n);
}

double dot(const double* a, const double* b, size_t n) {
  double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; i++) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

}  // namespace oodil
