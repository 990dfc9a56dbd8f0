#include "oodil/envs.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace oodil {

const char* step_status_name(StepStatus s) {
  switch (s) {
    case StepStatus::kRunning:
      return "running";
    case StepStatus::kGoal:
      return "goal";
    case StepStatus::kCollision:
      return "collision";
    case StepStatus::kTimeout:
      return "timeout";
  }
  return "unknown";
}

void DrivingConfig::validate() const {
  for (double w : obstacle_widths) {
    if (!(w > 0.0 && w < 1.0)) throw std::invalid_argument("driving: obstacle width must be in (0,1)");
  }
  if (!(speed > 0.0)) throw std::invalid_argument("driving: speed must be positive");
  if (!(step_size > 0.0)) throw std::invalid_argument("driving: step size must be positive");
  if (max_steps < 1) throw std::invalid_argument("driving: max_steps must be >= 1");
}

std::array<double, 2> DrivingConfig::obstacle_extent(int i) const {
  const double c = kObstacleCenters[i];
  const double half = 0.5 * obstacle_widths[i];
  return {std::max(0.0, c - half), std::min(1.0, c + half)};
}

bool DrivingConfig::inside_obstacle(double x, double y) const {
  if (y < kBandLow || y > kBandHigh) return false;
  for (int i = 0; i < 2; i++) {
    auto [lo, hi] = obstacle_extent(i);
    if (x >= lo && x <= hi) return true;
  }
  return false;
}

std::vector<double> driving_reset(const DrivingConfig& config, Rng& rng) {
  config.validate();
  return {rng.uniform(), 0.0};
}

namespace {

double clamp_action(double action, int* warnings) {
  if (action < -1.0 || action > 1.0) {
    if (warnings) (*warnings)++;
    return std::clamp(action, -1.0, 1.0);
  }
  return action;
}

}  // namespace

StepResult driving_step(const DrivingConfig& config, const std::vector<double>& state,
                        double action, int steps_taken, int* warnings) {
  if (state.size() != 2) throw std::invalid_argument("driving_step: state must be (x, y)");
  const double a = clamp_action(action, warnings);
  const double advance = config.step_size * config.speed;
  StepResult result;
  const double x = std::clamp(state[0] + a * advance, 0.0, 1.0);
  const double y = state[1] + advance;
  result.next_state = {x, y};
  result.reward = DrivingConfig::kStepReward;
  if (y >= DrivingConfig::kGoalY) {
    result.reward += DrivingConfig::kGoalBonus;
    result.status = StepStatus::kGoal;
  } else if (config.inside_obstacle(x, y)) {
    result.reward += DrivingConfig::kCollisionPenalty;
    result.status = StepStatus::kCollision;
  } else if (steps_taken + 1 >= config.max_steps) {
    result.status = StepStatus::kTimeout;
  }
  return result;
}

void PointMassConfig::validate() const {
  if (!(force_gain > 0.0)) throw std::invalid_argument("pointmass: force gain must be positive");
  if (drag < 0.0) throw std::invalid_argument("pointmass: drag must be >= 0");
  if (!(step_size > 0.0)) throw std::invalid_argument("pointmass: step size must be positive");
  if (max_steps < 1) throw std::invalid_argument("pointmass: max_steps must be >= 1");
}

StepResult pointmass_step(const PointMassConfig& config, const std::vector<double>& state,
                          double action, int steps_taken, int* warnings) {
  if (state.size() != 2) throw std::invalid_argument("pointmass_step: state must be (x, v)");
  const double a = clamp_action(action, warnings);
  StepResult result;
  const double v = state[1] + config.step_size * (config.force_gain * a - config.drag * state[1]);
  const double x = state[0] + config.step_size * v;
  result.next_state = {x, v};
  result.reward = -std::fabs(x - config.target);
  if (steps_taken + 1 >= config.max_steps) result.status = StepStatus::kTimeout;
  return result;
}

DrivingEnv::DrivingEnv(DrivingConfig config) : config_(config) { config_.validate(); }

std::vector<double> DrivingEnv::reset(Rng& rng) {
  state_ = driving_reset(config_, rng);
  steps_taken_ = 0;
  done_ = false;
  return state_;
}

std::vector<double> DrivingEnv::reset_to(std::vector<double> state) {
  if (state.size() != 2) throw std::invalid_argument("driving reset_to: state must be (x, y)");
  state_ = std::move(state);
  steps_taken_ = 0;
  done_ = false;
  return state_;
}

StepResult DrivingEnv::step(double action) {
  if (done_) throw std::logic_error("driving step: episode is terminal, reset first");
  StepResult r = driving_step(config_, state_, action, steps_taken_, &warnings_);
  state_ = r.next_state;
  steps_taken_++;
  done_ = r.terminal();
  return r;
}

std::unique_ptr<Env> DrivingEnv::fresh_copy() const { return std::make_unique<DrivingEnv>(config_); }

PointMassEnv::PointMassEnv(PointMassConfig config) : config_(config) { config_.validate(); }

std::vector<double> PointMassEnv::reset(Rng& rng) {
  state_ = {rng.uniform(-0.1, 0.1), 0.0};
  steps_taken_ = 0;
  done_ = false;
  return state_;
}

std::vector<double> PointMassEnv::reset_to(std::vector<double> state) {
  if (state.size() != 2) throw std::invalid_argument("pointmass reset_to: state must be (x, v)");
  state_ = std::move(state);
  steps_taken_ = 0;
  done_ = false;
  return state_;
}

StepResult PointMassEnv::step(double action) {
  if (done_) throw std::logic_error("pointmass step: episode is terminal, reset first");
  StepResult r = pointmass_step(config_, state_, action, steps_taken_, &warnings_);
  state_ = r.next_state;
  steps_taken_++;
  done_ = r.terminal();
  return r;
}

std::unique_ptr<Env> PointMassEnv::fresh_copy() const {
  return std::make_unique<PointMassEnv>(config_);
}

const char* gap_name(GapChoice gap) {
  switch (gap) {
    case GapChoice::kLeft:
      return "left";
    case GapChoice::kMiddle:
      return "middle";
    case GapChoice::kRight:
      return "right";
  }
  return "unknown";
}

GapChoice gap_from_name(const std::string& name) {
  if (name == "left") return GapChoice::kLeft;
  if (name == "middle") return GapChoice::kMiddle;
  if (name == "right") return GapChoice::kRight;
  throw std::invalid_argument("unknown gap name: " + name);
}

GapInterval gap_interval(const DrivingConfig& config, GapChoice gap) {
  auto left = config.obstacle_extent(0);
  auto right = config.obstacle_extent(1);
  switch (gap) {
    case GapChoice::kLeft:
      return {0.0, left[0]};
    case GapChoice::kMiddle:
      return {left[1], std::max(left[1], right[0])};
    case GapChoice::kRight:
      return {right[1], 1.0};
  }
  return {};
}

std::vector<GapChoice> feasible_gaps(const DrivingConfig& config) {
  std::vector<GapChoice> gaps;
  for (GapChoice g : {GapChoice::kLeft, GapChoice::kMiddle, GapChoice::kRight}) {
    if (gap_interval(config, g).feasible()) gaps.push_back(g);
  }
  return gaps;
}

Trajectory scripted_driving_demo(const DrivingConfig& config, GapChoice gap, Rng& rng,
                                 double noise_sigma, const std::string& id) {
  config.validate();
  GapInterval interval = gap_interval(config, gap);
  if (!interval.feasible()) {
    throw std::invalid_argument(std::string("scripted demo: gap '") + gap_name(gap) +
                                "' is infeasible under the obstacle widths");
  }
  const double advance = config.step_size * config.speed;
  const double center = interval.center();
  // lateral capacity before the first in-band step, with margin for noise
  const int free_steps = static_cast<int>(std::ceil(DrivingConfig::kBandLow / advance)) - 1;
  const double reach = 0.9 * std::max(1, free_steps) * advance;

  double x0 = rng.uniform();
  while (std::fabs(x0 - center) > reach) x0 = rng.uniform();

  DrivingEnv env(config);
  env.reset_to({x0, 0.0});
  Trajectory traj;
  traj.id = id;
  traj.states.push_back(env.state());
  while (!env.done()) {
    const double x = env.state()[0];
    const double y = env.state()[1];
    const double target_x = y <= DrivingConfig::kBandHigh ? center : 0.5;
    double a = std::clamp((target_x - x) / advance, -1.0, 1.0);
    a = std::clamp(a + noise_sigma * rng.normal(), -1.0, 1.0);
    StepResult r = env.step(a);
    traj.states.push_back(r.next_state);
    if (r.status == StepStatus::kCollision) {
      throw std::runtime_error("scripted demo collided; config leaves no safe margin");
    }
  }
  return traj;
}

RolloutRecord rollout(Env& env, const PolicyFn& policy, Rng& rng, int max_steps, double gamma) {
  RolloutRecord record;
  if (env.done()) env.reset(rng);
  record.trajectory.states.push_back(env.state());
  double discount = 1.0;
  for (int t = 0; t < max_steps; t++) {
    const double action = policy(env.state(), rng);
    StepResult r = env.step(action);
    record.trajectory.states.push_back(r.next_state);
    record.actions.push_back(action);
    record.rewards.push_back(r.reward);
    record.undiscounted_return += r.reward;
    record.discounted_return += discount * r.reward;
    discount *= gamma;
    record.final_status = r.status;
    if (r.terminal()) break;
  }
  return record;
}

}  // namespace oodil
