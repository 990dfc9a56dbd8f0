#ifndef OODIL_NETS_HPP_
#define OODIL_NETS_HPP_

#include <string>
#include <utility>
#include <vector>

#include "oodil/rng.hpp"
#include "oodil/tensor.hpp"

namespace oodil {

enum class Activation { kIdentity, kTanh, kSigmoid };

struct MlpLayer {
  Tensor w;  // out x in
  Tensor b;  // out
  Activation act = Activation::kIdentity;
};

// L-layer perceptron. Weights are Xavier-uniform initialized, biases zero.
struct MlpParams {
  std::vector<MlpLayer> layers;

  static MlpParams create(const std::vector<size_t>& dims, const std::vector<Activation>& acts,
                          Rng& rng);

  size_t input_dim() const { return layers.front().w.shape[1]; }
  size_t output_dim() const { return layers.back().w.shape[0]; }
  size_t param_count() const;

  std::vector<Tensor*> tensors();
  std::vector<const Tensor*> tensors() const;
  std::vector<std::pair<std::string, Tensor*>> named_tensors(const std::string& prefix);
};

// Post-activation values per layer; activations[0] is the input. Enough to
// run the exact backward pass (tanh' and sigmoid' are functions of the
// post-activation value).
struct MlpCache {
  std::vector<Tensor> activations;
};

// Forward pass for a batch (B x in) -> (B x out). Rank-1 input is treated as
// a batch of one and returns rank-1 output.
Tensor mlp_forward(const MlpParams& params, const Tensor& input);
Tensor mlp_forward_cached(const MlpParams& params, const Tensor& input, MlpCache* cache);

// Exact gradients of the forward map. upstream has the output shape; grads
// accumulate into `grads` (same layer structure, already sized); returns the
// gradient w.r.t. the input.
Tensor mlp_backward_cached(const MlpParams& params, const MlpCache& cache, const Tensor& upstream,
                           MlpParams* grads);

struct MlpBackwardResult {
  MlpParams grads;
  Tensor input_grad;
};
MlpBackwardResult mlp_backward(const MlpParams& params, const Tensor& input,
                               const Tensor& upstream);

MlpParams zero_grads_like(const MlpParams& params);

// Xavier-uniform fill: +-sqrt(6 / (fan_in + fan_out)).
void xavier_fill(Tensor& w, size_t fan_in, size_t fan_out, Rng& rng);

}  // namespace oodil

#endif  // OODIL_NETS_HPP_
