#include "oodil/nets.hpp"

#include <cmath>
#include <stdexcept>

#include "oodil/linalg.hpp"

namespace oodil {

namespace {

inline double apply_act(Activation act, double a) {
  switch (act) {
    case Activation::kTanh:
      return std::tanh(a);
    case Activation::kSigmoid:
      return 1.0 / (1.0 + std::exp(-a));
    case Activation::kIdentity:
      return a;
  }
  return a;
}

// derivative expressed through the post-activation value z
inline double act_deriv(Activation act, double z) {
  switch (act) {
    case Activation::kTanh:
      return 1.0 - z * z;
    case Activation::kSigmoid:
      return z * (1.0 - z);
    case Activation::kIdentity:
      return 1.0;
  }
  return 1.0;
}

Tensor as_batch(const Tensor& t) {
  if (t.shape.size() == 1) return Tensor({1, t.shape[0]}, t.data);
  if (t.shape.size() == 2) return t;
  throw std::invalid_argument("mlp: input must be rank 1 or 2");
}

}  // namespace

void xavier_fill(Tensor& w, size_t fan_in, size_t fan_out, Rng& rng) {
  double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (double& v : w.data) v = rng.uniform(-bound, bound);
}

MlpParams MlpParams::create(const std::vector<size_t>& dims, const std::vector<Activation>& acts,
                            Rng& rng) {
  if (dims.size() < 2 || acts.size() != dims.size() - 1) {
    throw std::invalid_argument("mlp: need L+1 dims and L activations");
  }
  MlpParams p;
  for (size_t i = 0; i + 1 < dims.size(); i++) {
    MlpLayer layer;
    layer.w = Tensor({dims[i + 1], dims[i]});
    layer.b = Tensor({dims[i + 1]});
    layer.act = acts[i];
    xavier_fill(layer.w, dims[i], dims[i + 1], rng);
    p.layers.push_back(std::move(layer));
  }
  return p;
}

size_t MlpParams::param_count() const {
  size_t n = 0;
  for (const auto& l : layers) n += l.w.numel() + l.b.numel();
  return n;
}

std::vector<Tensor*> MlpParams::tensors() {
  std::vector<Tensor*> out;
  for (auto& l : layers) {
    out.push_back(&l.w);
    out.push_back(&l.b);
  }
  return out;
}

std::vector<const Tensor*> MlpParams::tensors() const {
  std::vector<const Tensor*> out;
  for (const auto& l : layers) {
    out.push_back(&l.w);
    out.push_back(&l.b);
  }
  return out;
}

std::vector<std::pair<std::string, Tensor*>> MlpParams::named_tensors(const std::string& prefix) {
  std::vector<std::pair<std::string, Tensor*>> out;
  for (size_t i = 0; i < layers.size(); i++) {
    out.emplace_back(prefix + ".w" + std::to_string(i), &layers[i].w);
    out.emplace_back(prefix + ".b" + std::to_string(i), &layers[i].b);
  }
  return out;
}

MlpParams zero_grads_like(const MlpParams& params) {
  MlpParams g;
  for (const auto& l : params.layers) {
    MlpLayer gl;
    gl.w = zeros_like(l.w);
    gl.b = zeros_like(l.b);
    gl.act = l.act;
    g.layers.push_back(std::move(gl));
  }
  return g;
}

Tensor mlp_forward_cached(const MlpParams& params, const Tensor& input, MlpCache* cache) {
  Tensor z = as_batch(input);
  if (z.shape[1] != params.input_dim()) {
    throw std::invalid_argument("mlp_forward: input dim " + std::to_string(z.shape[1]) +
                                " != layer dim " + std::to_string(params.input_dim()));
  }
  if (cache) {
    cache->activations.clear();
    cache->activations.push_back(z);
  }
  const size_t batch = z.shape[0];
  for (const auto& layer : params.layers) {
    const size_t out_dim = layer.w.shape[0];
    Tensor a({batch, out_dim});
    for (size_t r = 0; r < batch; r++) {
      double* arow = a.row(r);
      for (size_t j = 0; j < out_dim; j++) arow[j] = layer.b.data[j];
    }
    matmul_nt(z, layer.w, a);
    for (double& v : a.data) v = apply_act(layer.act, v);
    z = std::move(a);
    if (cache) cache->activations.push_back(z);
  }
  z.check_finite("mlp_forward output");
  if (input.shape.size() == 1) return Tensor({z.shape[1]}, z.data);
  return z;
}

Tensor mlp_forward(const MlpParams& params, const Tensor& input) {
  return mlp_forward_cached(params, input, nullptr);
}

Tensor mlp_backward_cached(const MlpParams& params, const MlpCache& cache, const Tensor& upstream,
                           MlpParams* grads) {
  const size_t n_layers = params.layers.size();
  if (cache.activations.size() != n_layers + 1) {
    throw std::invalid_argument("mlp_backward: cache does not match network depth");
  }
  Tensor dz = as_batch(upstream);
  if (!same_shape(dz, cache.activations.back())) {
    throw std::invalid_argument("mlp_backward: upstream gradient shape mismatch");
  }
  for (size_t li = n_layers; li-- > 0;) {
    const auto& layer = params.layers[li];
    const Tensor& z_out = cache.activations[li + 1];
    const Tensor& z_in = cache.activations[li];
    // da = dz * act'(z_out)
    Tensor da = dz;
    for (size_t i = 0; i < da.data.size(); i++) da.data[i] *= act_deriv(layer.act, z_out.data[i]);
    if (grads) {
      matmul_tn(da, z_in, grads->layers[li].w);
      col_sums(da, grads->layers[li].b);
    }
    Tensor dz_prev({z_in.shape[0], z_in.shape[1]});
    matmul_nn(da, layer.w, dz_prev);
    dz = std::move(dz_prev);
  }
  return dz;
}

MlpBackwardResult mlp_backward(const MlpParams& params, const Tensor& input,
                               const Tensor& upstream) {
  MlpCache cache;
  mlp_forward_cached(params, input, &cache);
  MlpBackwardResult result;
  result.grads = zero_grads_like(params);
  Tensor dx = mlp_backward_cached(params, cache, upstream, &result.grads);
  if (input.shape.size() == 1) {
    result.input_grad = Tensor({dx.shape[1]}, dx.data);
  } else {
    result.input_grad = std::move(dx);
  }
  return result;
}

}  // namespace oodil
