#include <cmath>
#include <numeric>

#include "doctest.h"
#include "oodil/grad_check.hpp"
#include "oodil/rl.hpp"

using namespace oodil;

namespace {

// 1-step bandit: reward -(a - 0.5)^2, used to check policy-gradient sanity
class BanditEnv : public Env {
 public:
  size_t state_dim() const override { return 1; }
  std::vector<double> reset(Rng&) override {
    done_ = false;
    return state_;
  }
  std::vector<double> reset_to(std::vector<double>) override { return reset(dummy_); }
  StepResult step(double action) override {
    StepResult r;
    r.next_state = state_;
    r.reward = -(action - 0.5) * (action - 0.5);
    r.status = StepStatus::kTimeout;
    done_ = true;
    return r;
  }
  const std::vector<double>& state() const override { return state_; }
  bool done() const override { return done_; }
  std::unique_ptr<Env> fresh_copy() const override { return std::make_unique<BanditEnv>(); }

 private:
  std::vector<double> state_{0.0};
  bool done_ = true;
  Rng dummy_{0};
};

RewardFn zero_reward() {
  return [](const std::vector<double>&, const std::vector<double>&) { return 0.0; };
}

}  // namespace

TEST_CASE("collect_batch delivers exactly n_steps with the requested rewards") {
  DrivingConfig c;
  DrivingEnv env(c);
  Rng rng(3);
  Policy policy = Policy::create(2, rng);
  RolloutBatch batch = collect_batch(env, policy, zero_reward(), 137, rng);
  CHECK(batch.size() == 137);
  for (double r : batch.rewards) CHECK(r == 0.0);
}

TEST_CASE("collect_batch is deterministic under a fixed seed") {
  DrivingConfig c;
  Rng prng(5);
  Policy policy = Policy::create(2, prng);
  DrivingEnv e1(c), e2(c);
  Rng r1(9), r2(9);
  auto b1 = collect_batch(e1, policy, zero_reward(), 64, r1);
  auto b2 = collect_batch(e2, policy, zero_reward(), 64, r2);
  CHECK(b1.states.data == b2.states.data);
  CHECK(b1.actions == b2.actions);
  CHECK(b1.logp == b2.logp);
}

TEST_CASE("policy samples stay in [-1,1] and log_std stays clamped") {
  Rng rng(7);
  Policy policy = Policy::create(2, rng);
  policy.log_std.data[0] = 5.0;
  policy.clamp_log_std();
  CHECK(policy.log_std.data[0] == 1.0);
  policy.log_std.data[0] = -9.0;
  policy.clamp_log_std();
  CHECK(policy.log_std.data[0] == -4.0);
  for (int i = 0; i < 1000; i++) {
    double a = policy.act({0.3, 0.9}, rng);
    CHECK(a >= -1.0);
    CHECK(a <= 1.0);
  }
}

TEST_CASE("gae hand computation on a 3-step episode") {
  // V = 0, gamma = 1, lambda = 1: advantage_t = sum of future rewards
  RolloutBatch batch;
  batch.states = Tensor({3, 1});
  batch.next_states = Tensor({3, 1});
  batch.pre_squash = {0, 0, 0};
  batch.actions = {0, 0, 0};
  batch.logp = {0, 0, 0};
  batch.rewards = {1.0, 2.0, 3.0};
  batch.terminal = {0, 0, 1};
  Rng rng(1);
  ValueFn zero_v;
  zero_v.net = MlpParams::create({1, 1}, {Activation::kIdentity}, rng);
  zero_v.net.layers[0].w.fill(0.0);
  zero_v.net.layers[0].b.fill(0.0);

  GaeResult raw = gae_advantages(batch, zero_v, 1.0, 1.0, false);
  CHECK(raw.advantages[0] == doctest::Approx(6.0));
  CHECK(raw.advantages[1] == doctest::Approx(5.0));
  CHECK(raw.advantages[2] == doctest::Approx(3.0));
  CHECK(raw.returns[0] == doctest::Approx(6.0));

  // normalized: zero mean, unit variance
  GaeResult norm = gae_advantages(batch, zero_v, 1.0, 1.0, true);
  const double mean = std::accumulate(norm.advantages.begin(), norm.advantages.end(), 0.0) / 3.0;
  CHECK(std::fabs(mean) < 1e-12);
}

TEST_CASE("gae single-step episode is r - V(s) before normalization") {
  RolloutBatch batch;
  batch.states = Tensor({1, 1}, {0.0});
  batch.next_states = Tensor({1, 1}, {0.0});
  batch.pre_squash = {0};
  batch.actions = {0};
  batch.logp = {0};
  batch.rewards = {2.5};
  batch.terminal = {1};
  Rng rng(2);
  ValueFn v;
  v.net = MlpParams::create({1, 1}, {Activation::kIdentity}, rng);
  v.net.layers[0].w.fill(0.0);
  v.net.layers[0].b.data[0] = 0.75;
  GaeResult raw = gae_advantages(batch, v, 0.99, 0.95, false);
  CHECK(raw.advantages[0] == doctest::Approx(2.5 - 0.75));
}

TEST_CASE("gae with perfect value function and constant rewards is near zero") {
  // 4-step episodes, reward 1, gamma=1: V(s) = steps remaining; use a value
  // net that can't see the clock, so instead make every step terminal
  RolloutBatch batch;
  batch.states = Tensor({4, 1});
  batch.next_states = Tensor({4, 1});
  batch.pre_squash = {0, 0, 0, 0};
  batch.actions = {0, 0, 0, 0};
  batch.logp = {0, 0, 0, 0};
  batch.rewards = {1.0, 1.0, 1.0, 1.0};
  batch.terminal = {1, 1, 1, 1};
  Rng rng(3);
  ValueFn v;
  v.net = MlpParams::create({1, 1}, {Activation::kIdentity}, rng);
  v.net.layers[0].w.fill(0.0);
  v.net.layers[0].b.data[0] = 1.0;  // exactly the 1-step return
  GaeResult raw = gae_advantages(batch, v, 1.0, 1.0, false);
  for (double a : raw.advantages) CHECK(std::fabs(a) < 1e-12);
}

TEST_CASE("policy_update with zero advantages and no entropy bonus is a no-op") {
  Rng rng(11);
  Policy policy = Policy::create(1, rng);
  ValueFn value = ValueFn::create(1, rng);
  const std::vector<double> w_before = policy.net.layers[0].w.data;
  const double ls_before = policy.log_std.data[0];

  RolloutBatch batch;
  const size_t n = 8;
  batch.states = Tensor({n, 1});
  batch.next_states = Tensor({n, 1});
  for (size_t i = 0; i < n; i++) {
    batch.pre_squash.push_back(0.1 * i);
    batch.actions.push_back(std::tanh(0.1 * i));
    batch.logp.push_back(-1.0);
    batch.rewards.push_back(0.0);
    batch.terminal.push_back(1);
  }
  GaeResult gae;
  gae.advantages.assign(n, 0.0);
  gae.returns.assign(n, 0.0);

  RlHyper hyper;
  hyper.entropy_coef = 0.0;
  hyper.minibatch = 4;
  hyper.epochs = 2;
  AdamState popt = AdamState::init([&] {
    auto t = policy.net.tensors();
    t.push_back(&policy.log_std);
    return t;
  }(), hyper.lr_policy);
  AdamState vopt = AdamState::init(value.net.tensors(), hyper.lr_value);
  Rng urng(13);
  policy_update(policy, value, batch, gae, hyper, popt, vopt, urng);
  CHECK(policy.net.layers[0].w.data == w_before);
  CHECK(policy.log_std.data[0] == ls_before);
}

TEST_CASE("surrogate gradient matches finite differences") {
  Rng rng(17);
  Policy policy = Policy::create(2, rng);
  // small net keeps finite differences cheap
  policy.net = MlpParams::create({2, 8, 1}, {Activation::kTanh, Activation::kIdentity}, rng);

  const size_t m = 16;
  Tensor states({m, 2});
  std::vector<double> u(m), logp_old(m), adv(m);
  for (size_t i = 0; i < m; i++) {
    states.at(i, 0) = rng.normal();
    states.at(i, 1) = rng.normal();
    u[i] = rng.normal();
    logp_old[i] = -1.2 + 0.1 * rng.normal();
    adv[i] = rng.normal();
  }
  RlHyper hyper;

  std::vector<Tensor*> params = policy.net.tensors();
  params.push_back(&policy.log_std);
  auto loss_fn = [&](std::vector<Tensor>* grads) {
    SurrogateGrads g;
    const double loss = ppo_surrogate_loss(policy, states, u, logp_old, adv, hyper,
                                           grads ? &g : nullptr);
    if (grads) {
      grads->clear();
      for (Tensor* t : g.net.tensors()) grads->push_back(*t);
      grads->push_back(Tensor({1}, {g.log_std}));
    }
    return loss;
  };
  auto res = grad_check(loss_fn, params);
  CHECK(res.max_rel_err < 1e-4);
}

TEST_CASE("policy gradient solves the 1-step bandit") {
  RlHyper hyper;
  hyper.steps_per_batch = 256;
  hyper.minibatch = 64;
  Rng rng(19);
  Policy policy = Policy::create(1, rng);
  ValueFn value = ValueFn::create(1, rng);
  AdamState popt = AdamState::init([&] {
    auto t = policy.net.tensors();
    t.push_back(&policy.log_std);
    return t;
  }(), hyper.lr_policy);
  AdamState vopt = AdamState::init(value.net.tensors(), hyper.lr_value);

  // the bandit reward depends on the action, so collect manually
  Rng loop_rng(23);
  for (int it = 0; it < 200; it++) {
    RolloutBatch batch;
    const size_t n = hyper.steps_per_batch;
    batch.states = Tensor({n, 1});
    batch.next_states = Tensor({n, 1});
    for (size_t i = 0; i < n; i++) {
      double u, logp;
      const double a = policy.act({0.0}, loop_rng, &u, &logp);
      batch.pre_squash.push_back(u);
      batch.actions.push_back(a);
      batch.logp.push_back(logp);
      batch.rewards.push_back(-(a - 0.5) * (a - 0.5));
      batch.terminal.push_back(1);
    }
    GaeResult gae = gae_advantages(batch, value, hyper.gamma, hyper.gae_lambda);
    policy_update(policy, value, batch, gae, hyper, popt, vopt, loop_rng);
  }
  CHECK(std::fabs(policy.mean_action({0.0}) - 0.5) < 0.1);
}

TEST_CASE("ppo beats the random policy on the point mass") {
  PointMassConfig cfg;
  RlHyper hyper;
  hyper.steps_per_batch = 1024;
  Rng rng(29);
  PpoTrainer trainer(2, hyper, rng);
  PointMassEnv env(cfg);
  RewardFn env_reward = [&](const std::vector<double>&, const std::vector<double>& s2) {
    return -std::fabs(s2[0] - cfg.target);
  };
  Rng train_rng(31);
  for (int it = 0; it < 40; it++) trainer.train_iteration(env, env_reward, train_rng);

  auto eval_policy = [&](const PolicyFn& fn, Rng& eval_rng) {
    std::vector<double> returns;
    PointMassEnv eval_env(cfg);
    for (int ep = 0; ep < 20; ep++) {
      auto rec = rollout(eval_env, fn, eval_rng, cfg.max_steps, 1.0);
      returns.push_back(rec.undiscounted_return);
    }
    double mean = std::accumulate(returns.begin(), returns.end(), 0.0) / returns.size();
    double var = 0;
    for (double r : returns) var += (r - mean) * (r - mean);
    var /= returns.size();
    return std::pair<double, double>(mean, std::sqrt(var / returns.size()));
  };

  Rng e1(41), e2(41);
  auto [learned_mean, learned_se] = eval_policy(trainer.policy().deterministic_fn(), e1);
  auto [random_mean, random_se] =
      eval_policy([](const std::vector<double>&, Rng& r) { return r.uniform(-1.0, 1.0); }, e2);
  const double margin = 3.0 * std::sqrt(learned_se * learned_se + random_se * random_se);
  CHECK(learned_mean > random_mean + margin);
}

TEST_CASE("policy update aborts and rolls back on non-finite rewards") {
  Rng rng(37);
  Policy policy = Policy::create(1, rng);
  ValueFn value = ValueFn::create(1, rng);
  const std::vector<double> w_before = policy.net.layers[0].w.data;

  RolloutBatch batch;
  const size_t n = 4;
  batch.states = Tensor({n, 1});
  batch.next_states = Tensor({n, 1});
  for (size_t i = 0; i < n; i++) {
    batch.pre_squash.push_back(0.0);
    batch.actions.push_back(0.0);
    batch.logp.push_back(-1.0);
    batch.rewards.push_back(0.0);
    batch.terminal.push_back(1);
  }
  GaeResult gae;
  gae.advantages = {1.0, std::numeric_limits<double>::infinity(), 0.0, 0.0};
  gae.returns = {0, 0, 0, 0};
  RlHyper hyper;
  hyper.minibatch = 4;
  AdamState popt = AdamState::init([&] {
    auto t = policy.net.tensors();
    t.push_back(&policy.log_std);
    return t;
  }(), hyper.lr_policy);
  AdamState vopt = AdamState::init(value.net.tensors(), hyper.lr_value);
  Rng urng(39);
  auto diag = policy_update(policy, value, batch, gae, hyper, popt, vopt, urng);
  CHECK(diag.aborted);
  CHECK(policy.net.layers[0].w.data == w_before);
}
