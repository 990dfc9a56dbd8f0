#include "oodil/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "oodil/rng.hpp"

namespace oodil {

GradCheckResult grad_check(const LossWithGrads& loss_fn, const std::vector<Tensor*>& params,
                           double h, size_t max_entries, uint64_t seed) {
  std::vector<Tensor> analytic;
  loss_fn(&analytic);

  // flat index space over all parameter entries
  size_t total = 0;
  for (const Tensor* p : params) total += p->numel();

  std::vector<size_t> indices;
  if (total <= max_entries) {
    indices.resize(total);
    for (size_t i = 0; i < total; i++) indices[i] = i;
  } else {
    Rng rng(derive_seed(seed, "grad_check_subset"));
    indices.reserve(max_entries);
    for (size_t i = 0; i < max_entries; i++) indices.push_back(rng.uniform_int(total));
    std::sort(indices.begin(), indices.end());
    indices.erase(std::unique(indices.begin(), indices.end()), indices.end());
  }

  GradCheckResult result;
  for (size_t flat : indices) {
    // locate tensor and offset
    size_t ti = 0, off = flat;
    while (off >= params[ti]->numel()) {
      off -= params[ti]->numel();
      ti++;
    }
    double& slot = params[ti]->data[off];
    const double saved = slot;
    slot = saved + h;
    const double lp = loss_fn(nullptr);
    slot = saved - h;
    const double lm = loss_fn(nullptr);
    slot = saved;
    const double numeric = (lp - lm) / (2.0 * h);
    const double a = analytic[ti].data[off];
    const double denom = std::max({1.0, std::fabs(a), std::fabs(numeric)});
    result.max_rel_err = std::max(result.max_rel_err, std::fabs(a - numeric) / denom);
    result.entries_checked++;
  }
  return result;
}

}  // namespace oodil
