#include "oodil/rl.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace oodil {

namespace {

constexpr double kLogStdMin = -4.0;
constexpr double kLogStdMax = 1.0;
constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5 * log(2*pi)

double gaussian_logp(double u, double mean, double log_std) {
  const double z = (u - mean) * std::exp(-log_std);
  return -0.5 * z * z - log_std - kHalfLog2Pi;
}

}  // namespace

Policy Policy::create(size_t state_dim, Rng& rng) {
  Policy p;
  p.net = MlpParams::create({state_dim, 64, 64, 1},
                            {Activation::kTanh, Activation::kTanh, Activation::kIdentity}, rng);
  p.log_std.data[0] = -0.5;
  return p;
}

double Policy::act(const std::vector<double>& state, Rng& rng, double* pre_squash,
                   double* logp) const {
  Tensor x({state.size()}, state);
  const double mean = mlp_forward(net, x).data[0];
  const double std_dev = std::exp(log_std.data[0]);
  const double u = mean + std_dev * rng.normal();
  if (pre_squash) *pre_squash = u;
  if (logp) *logp = gaussian_logp(u, mean, log_std.data[0]);
  return std::tanh(u);
}

double Policy::mean_action(const std::vector<double>& state) const {
  Tensor x({state.size()}, state);
  return std::tanh(mlp_forward(net, x).data[0]);
}

PolicyFn Policy::stochastic_fn() const {
  return [this](const std::vector<double>& state, Rng& rng) { return act(state, rng); };
}

PolicyFn Policy::deterministic_fn() const {
  return [this](const std::vector<double>& state, Rng&) { return mean_action(state); };
}

std::vector<Tensor*> Policy::tensors() {
  std::vector<Tensor*> out = net.tensors();
  out.push_back(&log_std);
  return out;
}

std::vector<std::pair<std::string, Tensor*>> Policy::named_tensors(const std::string& prefix) {
  auto out = net.named_tensors(prefix);
  out.emplace_back(prefix + ".log_std", &log_std);
  return out;
}

void Policy::clamp_log_std() {
  log_std.data[0] = std::clamp(log_std.data[0], kLogStdMin, kLogStdMax);
}

ValueFn ValueFn::create(size_t state_dim, Rng& rng) {
  ValueFn v;
  v.net = MlpParams::create({state_dim, 64, 64, 1},
                            {Activation::kTanh, Activation::kTanh, Activation::kIdentity}, rng);
  return v;
}

double ValueFn::value(const std::vector<double>& state) const {
  Tensor x({state.size()}, state);
  return mlp_forward(net, x).data[0];
}

RolloutBatch collect_batch(Env& env, const Policy& policy, const RewardFn& reward_fn, int n_steps,
                           Rng& rng) {
  if (n_steps < 1) throw std::invalid_argument("collect_batch: n_steps must be >= 1");
  const size_t dim = env.state_dim();
  RolloutBatch batch;
  batch.states = Tensor({static_cast<size_t>(n_steps), dim});
  batch.next_states = Tensor({static_cast<size_t>(n_steps), dim});
  batch.pre_squash.reserve(n_steps);
  if (env.done()) env.reset(rng);
  for (int t = 0; t < n_steps; t++) {
    const std::vector<double> s = env.state();
    double u = 0.0, logp = 0.0;
    const double a = policy.act(s, rng, &u, &logp);
    StepResult r = env.step(a);
    std::copy(s.begin(), s.end(), batch.states.row(t));
    std::copy(r.next_state.begin(), r.next_state.end(), batch.next_states.row(t));
    batch.pre_squash.push_back(u);
    batch.actions.push_back(a);
    batch.logp.push_back(logp);
    batch.rewards.push_back(reward_fn(s, r.next_state));
    batch.terminal.push_back(r.terminal() ? 1 : 0);
    if (r.terminal()) env.reset(rng);
  }
  return batch;
}

GaeResult gae_advantages(const RolloutBatch& batch, const ValueFn& value_fn, double gamma,
                         double gae_lambda, bool normalize) {
  const size_t n = batch.size();
  if (n == 0) throw std::invalid_argument("gae_advantages: empty batch");
  const size_t dim = batch.states.shape[1];

  std::vector<double> values(n), next_values(n);
  for (size_t t = 0; t < n; t++) {
    std::vector<double> s(batch.states.row(t), batch.states.row(t) + dim);
    values[t] = value_fn.value(s);
  }
  // only the batch tail needs a bootstrap value; terminal steps drop it
  {
    std::vector<double> s(batch.next_states.row(n - 1), batch.next_states.row(n - 1) + dim);
    next_values[n - 1] = value_fn.value(s);
  }
  for (size_t t = 0; t + 1 < n; t++) next_values[t] = values[t + 1];

  GaeResult out;
  out.advantages.assign(n, 0.0);
  out.returns.assign(n, 0.0);
  double carry = 0.0;
  for (size_t t = n; t-- > 0;) {
    const double nonterminal = batch.terminal[t] ? 0.0 : 1.0;
    // next_values[t] is stale right after a reset; the nonterminal factor
    // removes it from delta in exactly that case
    const double delta = batch.rewards[t] + gamma * next_values[t] * nonterminal - values[t];
    carry = delta + gamma * gae_lambda * nonterminal * carry;
    out.advantages[t] = carry;
    out.returns[t] = carry + values[t];
  }

  if (normalize) {
    double mean = std::accumulate(out.advantages.begin(), out.advantages.end(), 0.0) / n;
    double var = 0.0;
    for (double a : out.advantages) var += (a - mean) * (a - mean);
    var /= n;
    const double inv = 1.0 / (std::sqrt(var) + 1e-8);
    for (double& a : out.advantages) a = (a - mean) * inv;
  }
  return out;
}

double ppo_surrogate_loss(const Policy& policy, const Tensor& states,
                          const std::vector<double>& pre_squash,
                          const std::vector<double>& logp_old,
                          const std::vector<double>& advantages, const RlHyper& hyper,
                          SurrogateGrads* grads) {
  const size_t m = states.shape[0];
  if (pre_squash.size() != m || logp_old.size() != m || advantages.size() != m) {
    throw std::invalid_argument("ppo_surrogate_loss: sample count mismatch");
  }
  MlpCache cache;
  Tensor mean = mlp_forward_cached(policy.net, states, grads ? &cache : nullptr);
  const double log_std = policy.log_std.data[0];
  const double inv_var = std::exp(-2.0 * log_std);
  Tensor dmean({m, 1});
  double dlog_std = 0.0;
  double loss = 0.0;
  const double entropy = log_std + 0.5 + kHalfLog2Pi;  // Gaussian entropy, 1-D
  for (size_t i = 0; i < m; i++) {
    const double u = pre_squash[i];
    const double adv = advantages[i];
    const double logp_new = gaussian_logp(u, mean.data[i], log_std);
    const double ratio = std::exp(logp_new - logp_old[i]);
    const double clipped = std::clamp(ratio, 1.0 - hyper.clip_ratio, 1.0 + hyper.clip_ratio);
    const double surr1 = ratio * adv;
    const double surr2 = clipped * adv;
    double dlogp = 0.0;
    if (surr1 <= surr2) {
      loss += -surr1;
      dlogp = -adv * ratio;
    } else {
      loss += -surr2;  // clipped branch: zero gradient
    }
    dlogp /= static_cast<double>(m);
    // d logp / d mean and d logp / d log_std
    const double diff = u - mean.data[i];
    dmean.data[i] = dlogp * diff * inv_var;
    dlog_std += dlogp * (diff * diff * inv_var - 1.0);
  }
  loss /= static_cast<double>(m);
  loss -= hyper.entropy_coef * entropy;
  dlog_std -= hyper.entropy_coef;  // d entropy / d log_std = 1
  if (grads) {
    grads->net = zero_grads_like(policy.net);
    mlp_backward_cached(policy.net, cache, dmean, &grads->net);
    grads->log_std = dlog_std;
  }
  return loss;
}

UpdateDiagnostics policy_update(Policy& policy, ValueFn& value_fn, const RolloutBatch& batch,
                                const GaeResult& gae, const RlHyper& hyper, AdamState& policy_opt,
                                AdamState& value_opt, Rng& rng) {
  const size_t n = batch.size();
  const size_t dim = batch.states.shape[1];
  UpdateDiagnostics diag;

  // snapshot for rollback on a non-finite loss
  const Policy policy_backup = policy;
  const ValueFn value_backup = value_fn;
  const AdamState popt_backup = policy_opt;
  const AdamState vopt_backup = value_opt;

  std::vector<size_t> indices(n);
  std::iota(indices.begin(), indices.end(), 0);
  const size_t mb_size = std::min<size_t>(hyper.minibatch, n);

  bool bad = false;
  double last_policy_loss = 0.0, last_value_loss = 0.0;
  for (int epoch = 0; epoch < hyper.epochs && !bad; epoch++) {
    // deterministic shuffle
    for (size_t i = 0; i + 1 < n; i++) {
      const size_t j = i + rng.uniform_int(n - i);
      std::swap(indices[i], indices[j]);
    }
    for (size_t start = 0; start + mb_size <= n && !bad; start += mb_size) {
      const size_t m = mb_size;
      Tensor mb_states({m, dim});
      std::vector<double> mb_u(m), mb_logp(m), mb_adv(m);
      for (size_t i = 0; i < m; i++) {
        const size_t src = indices[start + i];
        std::copy(batch.states.row(src), batch.states.row(src) + dim, mb_states.row(i));
        mb_u[i] = batch.pre_squash[src];
        mb_logp[i] = batch.logp[src];
        mb_adv[i] = gae.advantages[src];
      }

      // --- policy step ---
      SurrogateGrads pgrads;
      const double policy_loss =
          ppo_surrogate_loss(policy, mb_states, mb_u, mb_logp, mb_adv, hyper, &pgrads);
      if (!std::isfinite(policy_loss)) {
        bad = true;
        break;
      }
      std::vector<Tensor*> pparams = policy.net.tensors();
      pparams.push_back(&policy.log_std);
      std::vector<const Tensor*> pg;
      for (Tensor* t : pgrads.net.tensors()) pg.push_back(t);
      Tensor ls_grad({1}, {pgrads.log_std});
      pg.push_back(&ls_grad);
      adam_step(pparams, pg, policy_opt);
      policy.clamp_log_std();
      diag.entropy = policy.log_std.data[0] + 0.5 + kHalfLog2Pi;

      // --- value step ---
      MlpCache vcache;
      Tensor v = mlp_forward_cached(value_fn.net, mb_states, &vcache);
      Tensor dv({m, 1});
      double value_loss = 0.0;
      for (size_t i = 0; i < m; i++) {
        const size_t src = indices[start + i];
        const double err = v.data[i] - gae.returns[src];
        value_loss += 0.5 * err * err;
        dv.data[i] = err / static_cast<double>(m);
      }
      value_loss /= static_cast<double>(m);
      if (!std::isfinite(value_loss)) {
        bad = true;
        break;
      }
      MlpParams vgrads = zero_grads_like(value_fn.net);
      mlp_backward_cached(value_fn.net, vcache, dv, &vgrads);
      std::vector<const Tensor*> vg;
      for (Tensor* t : vgrads.tensors()) vg.push_back(t);
      adam_step(value_fn.net.tensors(), vg, value_opt);

      last_policy_loss = policy_loss;
      last_value_loss = value_loss;
    }
  }

  if (bad) {
    policy = policy_backup;
    value_fn = value_backup;
    policy_opt = popt_backup;
    value_opt = vopt_backup;
    diag.aborted = true;
    return diag;
  }

  // KL estimate over the full batch under the updated policy
  Tensor mean = mlp_forward(policy.net, batch.states);
  double kl = 0.0;
  for (size_t i = 0; i < n; i++) {
    kl += batch.logp[i] - gaussian_logp(batch.pre_squash[i], mean.data[i], policy.log_std.data[0]);
  }
  diag.approx_kl = kl / static_cast<double>(n);
  diag.policy_loss = last_policy_loss;
  diag.value_loss = last_value_loss;
  return diag;
}

PpoTrainer::PpoTrainer(size_t state_dim, const RlHyper& hyper, Rng& rng)
    : hyper_(hyper),
      policy_(Policy::create(state_dim, rng)),
      value_(ValueFn::create(state_dim, rng)),
      policy_opt_(AdamState::init(policy_.tensors(), hyper.lr_policy)),
      value_opt_(AdamState::init(value_.net.tensors(), hyper.lr_value)) {}

UpdateDiagnostics PpoTrainer::train_iteration(Env& env, const RewardFn& reward_fn, Rng& rng,
                                              RolloutBatch* batch_out) {
  RolloutBatch batch = collect_batch(env, policy_, reward_fn, hyper_.steps_per_batch, rng);
  GaeResult gae = gae_advantages(batch, value_, hyper_.gamma, hyper_.gae_lambda);
  UpdateDiagnostics diag = policy_update(policy_, value_, batch, gae, hyper_, policy_opt_,
                                         value_opt_, rng);
  if (batch_out) *batch_out = std::move(batch);
  return diag;
}

}  // namespace oodil
