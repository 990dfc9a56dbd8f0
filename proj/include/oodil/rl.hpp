#ifndef OODIL_RL_HPP_
#define OODIL_RL_HPP_

#include <functional>
#include <vector>

#include "oodil/adam.hpp"
#include "oodil/envs.hpp"
#include "oodil/nets.hpp"

namespace oodil {

struct RlHyper {
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double clip_ratio = 0.2;
  int epochs = 4;
  int steps_per_batch = 2048;
  int minibatch = 256;
  double lr_policy = 3e-4;
  double lr_value = 1e-3;
  double entropy_coef = 0.01;
};

// Gaussian policy over the 1-D action: the network outputs the mean, a
// learned global log-std (clamped to [-4, 1]) sets the spread, and samples
// are squashed to [-1, 1] by tanh.
struct Policy {
  MlpParams net;
  Tensor log_std{std::vector<size_t>{1}};

  static Policy create(size_t state_dim, Rng& rng);

  // stochastic action; reports the pre-squash sample and its Gaussian log-density
  double act(const std::vector<double>& state, Rng& rng, double* pre_squash = nullptr,
             double* logp = nullptr) const;
  // deterministic action tanh(mean), used for evaluation
  double mean_action(const std::vector<double>& state) const;

  PolicyFn stochastic_fn() const;
  PolicyFn deterministic_fn() const;

  std::vector<Tensor*> tensors();
  std::vector<std::pair<std::string, Tensor*>> named_tensors(const std::string& prefix);
  void clamp_log_std();
};

struct ValueFn {
  MlpParams net;
  static ValueFn create(size_t state_dim, Rng& rng);
  double value(const std::vector<double>& state) const;
};

// (s, s') -> scalar; during imitation this is the discriminator reward and
// the environment reward is never consulted.
using RewardFn =
    std::function<double(const std::vector<double>& s, const std::vector<double>& s_next)>;

struct RolloutBatch {
  Tensor states;       // n x dim
  Tensor next_states;  // n x dim
  std::vector<double> pre_squash;
  std::vector<double> actions;
  std::vector<double> logp;
  std::vector<double> rewards;
  std::vector<uint8_t> terminal;  // episode ended at this step
  size_t size() const { return rewards.size(); }
};

// Exactly n_steps of experience across auto-reset episodes.
RolloutBatch collect_batch(Env& env, const Policy& policy, const RewardFn& reward_fn, int n_steps,
                           Rng& rng);

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;  // value-regression targets
};

// Generalized advantage estimation; episodes end at terminal flags, the
// batch tail bootstraps from the value of the last next-state. Advantages
// are normalized to zero mean / unit variance unless disabled.
GaeResult gae_advantages(const RolloutBatch& batch, const ValueFn& value_fn, double gamma,
                         double gae_lambda, bool normalize = true);

struct UpdateDiagnostics {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  bool aborted = false;
};

struct SurrogateGrads {
  MlpParams net;
  double log_std = 0.0;
};

// Clipped-surrogate objective (with entropy bonus) on one sample set;
// optionally fills exact gradients w.r.t. the policy parameters.
double ppo_surrogate_loss(const Policy& policy, const Tensor& states,
                          const std::vector<double>& pre_squash,
                          const std::vector<double>& logp_old,
                          const std::vector<double>& advantages, const RlHyper& hyper,
                          SurrogateGrads* grads = nullptr);

// Clipped-surrogate policy-gradient epochs plus value regression. On a
// non-finite loss the update is aborted: parameters and optimizer state are
// rolled back and the diagnostics flag it.
UpdateDiagnostics policy_update(Policy& policy, ValueFn& value_fn, const RolloutBatch& batch,
                                const GaeResult& gae, const RlHyper& hyper, AdamState& policy_opt,
                                AdamState& value_opt, Rng& rng);

// Owns the optimizer state across iterations of a training loop.
class PpoTrainer {
 public:
  PpoTrainer(size_t state_dim, const RlHyper& hyper, Rng& rng);

  UpdateDiagnostics train_iteration(Env& env, const RewardFn& reward_fn, Rng& rng,
                                    RolloutBatch* batch_out = nullptr);

  Policy& policy() { return policy_; }
  const Policy& policy() const { return policy_; }
  ValueFn& value_fn() { return value_; }
  const RlHyper& hyper() const { return hyper_; }

 private:
  RlHyper hyper_;
  Policy policy_;
  ValueFn value_;
  AdamState policy_opt_;
  AdamState value_opt_;
};

}  // namespace oodil

#endif  // OODIL_RL_HPP_
