#ifndef OODIL_GRAD_CHECK_HPP_
#define OODIL_GRAD_CHECK_HPP_

#include <cstdint>
#include <functional>
#include <vector>

#include "oodil/tensor.hpp"

namespace oodil {

// loss_fn(nullptr) returns the loss at the current parameter values;
// loss_fn(&grads) additionally fills analytic gradients aligned with
// `params`. The function must be deterministic given the parameters.
using LossWithGrads = std::function<double(std::vector<Tensor>* grads)>;

struct GradCheckResult {
  double max_rel_err = 0.0;
  size_t entries_checked = 0;
};

// Central finite differences over every parameter entry, or a fixed-seed
// random subset of max_entries when the parameter count exceeds it.
// Relative error per entry: |analytic - numeric| / max(1, |analytic|, |numeric|).
GradCheckResult grad_check(const LossWithGrads& loss_fn, const std::vector<Tensor*>& params,
                           double h = 1e-5, size_t max_entries = 1000, uint64_t seed = 0);

}  // namespace oodil

#endif  // OODIL_GRAD_CHECK_HPP_
