#ifndef OODIL_LINALG_HPP_
#define OODIL_LINALG_HPP_

#include <cstddef>

#include "oodil/tensor.hpp"

namespace oodil {

// Batched dense kernels used by the network code. All accumulate into C
// (callers zero it first when needed). Per-row arithmetic order is fixed, and
// threading partitions output rows, so results do not depend on the worker
// count.

// C (M x N) += A (M x K) * B (K x N)
void matmul_nn(const Tensor& a, const Tensor& b, Tensor& c);

// C (M x N) += A (M x K) * B(N x K)^T
void matmul_nt(const Tensor& a, const Tensor& b, Tensor& c);

// C (M x N) += A(K x M)^T * B (K x N)
void matmul_tn(const Tensor& a, const Tensor& b, Tensor& c);

// c (N) += column sums of A (M x N)
void col_sums(const Tensor& a, Tensor& c);

double dot(const double* a, const double* b, size_t n);

}  // namespace oodil

#endif  // OODIL_LINALG_HPP_
