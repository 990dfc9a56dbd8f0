#ifndef OODIL_ENVS_HPP_
#define OODIL_ENVS_HPP_

#include <array>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "oodil/demos.hpp"
#include "oodil/rng.hpp"

namespace oodil {

enum class StepStatus { kRunning, kGoal, kCollision, kTimeout };

const char* step_status_name(StepStatus s);

struct StepResult {
  std::vector<double> next_state;
  double reward = 0.0;
  StepStatus status = StepStatus::kRunning;

  bool terminal() const { return status != StepStatus::kRunning; }
};

// 2D driving lane: state (x, y), start anywhere at the bottom, goal at the
// top. Two obstacles centered at x = 1/4 and x = 3/4 span y in [0.45, 0.55].
// Forward progress is delta * speed per step regardless of the action; the
// action steers laterally by a * delta * speed. The speed difference between
// configs is what makes transitions from one config unreachable in another.
struct DrivingConfig {
  std::array<double, 2> obstacle_widths{0.25, 0.25};
  double speed = 1.0;
  double step_size = 0.02;
  int max_steps = 200;

  static constexpr double kObstacleCenters[2] = {0.25, 0.75};
  static constexpr double kBandLow = 0.45;
  static constexpr double kBandHigh = 0.55;
  // goal line with tolerance for error accumulated over y += delta * speed
  static constexpr double kGoalY = 1.0 - 1e-9;
  static constexpr double kStepReward = -1.0;
  static constexpr double kGoalBonus = 1000.0;
  static constexpr double kCollisionPenalty = -1000.0;

  void validate() const;
  bool inside_obstacle(double x, double y) const;
  // [lo, hi] extent of obstacle i clipped to the world
  std::array<double, 2> obstacle_extent(int i) const;
};

// Point mass on a line: state (x, v), force-gain/drag Euler dynamics,
// reward -|x' - target| per step, timeout-only termination.
struct PointMassConfig {
  double force_gain = 1.0;
  double drag = 0.1;
  double step_size = 0.1;
  double target = 1.0;
  int max_steps = 60;

  void validate() const;
};

std::vector<double> driving_reset(const DrivingConfig& config, Rng& rng);

// steps_taken counts completed steps before this one. Actions outside [-1,1]
// are clamped; *warnings (when given) counts the clamps.
StepResult driving_step(const DrivingConfig& config, const std::vector<double>& state,
                        double action, int steps_taken, int* warnings = nullptr);

StepResult pointmass_step(const PointMassConfig& config, const std::vector<double>& state,
                          double action, int steps_taken, int* warnings = nullptr);

// Single-owner episode state machine over the functional step cores.
class Env {
 public:
  virtual ~Env() = default;
  virtual size_t state_dim() const = 0;
  virtual std::vector<double> reset(Rng& rng) = 0;
  virtual std::vector<double> reset_to(std::vector<double> state) = 0;
  virtual StepResult step(double action) = 0;
  virtual const std::vector<double>& state() const = 0;
  virtual bool done() const = 0;
  virtual std::unique_ptr<Env> fresh_copy() const = 0;
  int warning_count() const { return warnings_; }

 protected:
  int warnings_ = 0;
};

class DrivingEnv : public Env {
 public:
  explicit DrivingEnv(DrivingConfig config);
  size_t state_dim() const override { return 2; }
  std::vector<double> reset(Rng& rng) override;
  std::vector<double> reset_to(std::vector<double> state) override;
  StepResult step(double action) override;
  const std::vector<double>& state() const override { return state_; }
  bool done() const override { return done_; }
  std::unique_ptr<Env> fresh_copy() const override;
  const DrivingConfig& config() const { return config_; }

 private:
  DrivingConfig config_;
  std::vector<double> state_;
  int steps_taken_ = 0;
  bool done_ = true;
};

class PointMassEnv : public Env {
 public:
  explicit PointMassEnv(PointMassConfig config);
  size_t state_dim() const override { return 2; }
  std::vector<double> reset(Rng& rng) override;
  std::vector<double> reset_to(std::vector<double> state) override;
  StepResult step(double action) override;
  const std::vector<double>& state() const override { return state_; }
  bool done() const override { return done_; }
  std::unique_ptr<Env> fresh_copy() const override;

 private:
  PointMassConfig config_;
  std::vector<double> state_;
  int steps_taken_ = 0;
  bool done_ = true;
};

// Gap selection for the scripted demonstrators.
enum class GapChoice { kLeft, kMiddle, kRight };

const char* gap_name(GapChoice gap);
GapChoice gap_from_name(const std::string& name);

struct GapInterval {
  double lo = 0.0;
  double hi = 0.0;
  bool feasible() const { return hi > lo; }
  double center() const { return 0.5 * (lo + hi); }
  double width() const { return hi - lo; }
};

GapInterval gap_interval(const DrivingConfig& config, GapChoice gap);
std::vector<GapChoice> feasible_gaps(const DrivingConfig& config);

// Handmade demonstrator: steers proportionally toward the chosen gap center
// until past the obstacle band, then recenters toward x = 0.5. Per-step
// steering noise sigma_a, clamped. The start x is rejection-sampled so the
// gap is reachable before the band. Throws if the gap is infeasible.
Trajectory scripted_driving_demo(const DrivingConfig& config, GapChoice gap, Rng& rng,
                                 double noise_sigma = 0.05, const std::string& id = "demo");

// Stochastic state -> action map.
using PolicyFn = std::function<double(const std::vector<double>& state, Rng& rng)>;

struct RolloutRecord {
  Trajectory trajectory;
  std::vector<double> actions;
  std::vector<double> rewards;
  StepStatus final_status = StepStatus::kRunning;
  double undiscounted_return = 0.0;
  double discounted_return = 0.0;
};

// One episode (capped at max_steps) with per-step rewards and returns.
RolloutRecord rollout(Env& env, const PolicyFn& policy, Rng& rng, int max_steps,
                      double gamma = 0.99);

}  // namespace oodil

#endif  // OODIL_ENVS_HPP_
