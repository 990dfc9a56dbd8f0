#ifndef OODIL_ADAM_HPP_
#define OODIL_ADAM_HPP_

#include <cstdint>
#include <vector>

#include "oodil/tensor.hpp"

namespace oodil {

// Bias-corrected adaptive-moment optimizer. Accumulators mirror the
// parameter shapes; t increases by exactly 1 per applied step.
struct AdamState {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  uint64_t t = 0;
  std::vector<Tensor> m;
  std::vector<Tensor> v;

  static AdamState init(const std::vector<Tensor*>& params, double lr);
};

// Applies one update in place. Throws on any non-finite gradient entry and
// leaves parameters, accumulators and t untouched in that case.
void adam_step(const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads,
               AdamState& state);

}  // namespace oodil

#endif  // OODIL_ADAM_HPP_
