#ifndef OODIL_RNN_HPP_
#define OODIL_RNN_HPP_

#include <string>
#include <utility>
#include <vector>

#include "oodil/rng.hpp"
#include "oodil/tensor.hpp"

namespace oodil {

// Single-layer gated recurrent cell (minimal gated unit):
//   f_t = sigmoid(W_f x_t + U_f h_{t-1} + b_f)
//   c_t = tanh(W_c x_t + U_c (f_t . h_{t-1}) + b_c)
//   h_t = (1 - f_t) . h_{t-1} + f_t . c_t
// Initial hidden state is zero; the sequence encoding is the final hidden
// state, L2-normalized to unit norm.
struct RecurrentParams {
  Tensor w_f, u_f, b_f;
  Tensor w_c, u_c, b_c;

  static RecurrentParams create(size_t input_dim, size_t hidden, Rng& rng);

  size_t hidden() const { return u_f.shape[0]; }
  size_t input_dim() const { return w_f.shape[1]; }
  size_t param_count() const;

  std::vector<Tensor*> tensors();
  std::vector<const Tensor*> tensors() const;
  std::vector<std::pair<std::string, Tensor*>> named_tensors(const std::string& prefix);
};

// Per-step values kept for backpropagation through time.
struct RnnCache {
  size_t batch = 0;
  size_t steps = 0;
  std::vector<Tensor> h_prev;  // per step, B x H
  std::vector<Tensor> f;       // per step, B x H
  std::vector<Tensor> hh;      // per step, f . h_prev
  std::vector<Tensor> c;       // per step, B x H
  Tensor h_final;              // pre-normalization, B x H
  std::vector<double> norms;   // per row
};

// Encode a batch of equal-length sequences, shape {B, T, input_dim}.
// Returns row-normalized features (B x H).
Tensor rnn_encode_batch(const RecurrentParams& params, const Tensor& sequences, RnnCache* cache);

// Single sequence {T, input_dim} -> unit-norm feature {H}. T >= 1 required.
Tensor rnn_encode(const RecurrentParams& params, const Tensor& sequence);

// Backward through normalization and time; accumulates into `grads`
// (zero-initialized RecurrentParams of matching shapes).
void rnn_encode_backward(const RecurrentParams& params, const Tensor& sequences,
                         const RnnCache& cache, const Tensor& upstream, RecurrentParams* grads);

RecurrentParams zero_grads_like(const RecurrentParams& params);

}  // namespace oodil

#endif  // OODIL_RNN_HPP_
