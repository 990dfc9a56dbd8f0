#include "oodil/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace oodil {

AdamState AdamState::init(const std::vector<Tensor*>& params, double lr) {
  AdamState st;
  st.lr = lr;
  for (const Tensor* p : params) {
    st.m.push_back(zeros_like(*p));
    st.v.push_back(zeros_like(*p));
  }
  return st;
}

void adam_step(const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads,
               AdamState& state) {
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    throw std::invalid_argument("adam_step: parameter/gradient/state count mismatch");
  }
  for (size_t i = 0; i < params.size(); i++) {
    if (!same_shape(*params[i], *grads[i])) {
      throw std::invalid_argument("adam_step: gradient shape mismatch");
    }
    if (!grads[i]->all_finite()) {
      throw std::runtime_error("adam_step: non-finite gradient, update not applied");
    }
  }
  state.t++;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  for (size_t i = 0; i < params.size(); i++) {
    Tensor& p = *params[i];
    const Tensor& g = *grads[i];
    Tensor& m = state.m[i];
    Tensor& v = state.v[i];
    for (size_t j = 0; j < p.data.size(); j++) {
      m.data[j] = state.beta1 * m.data[j] + (1.0 - state.beta1) * g.data[j];
      v.data[j] = state.beta2 * v.data[j] + (1.0 - state.beta2) * g.data[j] * g.data[j];
      const double mhat = m.data[j] / bc1;
      const double vhat = v.data[j] / bc2;
      p.data[j] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
    }
  }
}

}  // namespace oodil
