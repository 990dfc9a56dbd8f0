#ifndef OODIL_DEMOS_HPP_
#define OODIL_DEMOS_HPP_

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "oodil/rng.hpp"
#include "oodil/tensor.hpp"

namespace oodil {

// State-only demonstration episode. source_tag identifies the generating
// dynamics/mode for evaluation only; it is never fed to any learner.
struct Trajectory {
  std::string id;
  std::string source_tag;
  std::vector<std::vector<double>> states;  // T+1 states, T >= 1

  size_t num_states() const { return states.size(); }
  size_t num_transitions() const { return states.empty() ? 0 : states.size() - 1; }
};

struct Corpus {
  std::vector<Trajectory> trajectories;
  size_t state_dim = 0;

  void validate() const;
  static Corpus from(std::vector<Trajectory> trajectories);
};

// One trajectory per line: {"id", "source_tag", "states": [[...]]}.
// Floats survive the round trip value-exactly.
void save_corpus(const Corpus& corpus, const std::string& path);
Corpus load_corpus(const std::string& path);

// Fixed-length window of l states taken at a fixed stride.
struct SubTrajectory {
  std::string parent_id;
  size_t start = 0;
  bool padded = false;
  std::vector<std::vector<double>> states;  // exactly l
};

// Uniform random window start. Trajectories shorter than the required
// (l-1)*stride+1 states are padded by repeating the final state; the result
// is flagged.
SubTrajectory subsample(const Trajectory& traj, size_t l, size_t stride, Rng& rng);
std::pair<SubTrajectory, SubTrajectory> subsample_pair(const Trajectory& traj, size_t l,
                                                       size_t stride, Rng& rng);

// Consecutive state pair within a corpus trajectory.
struct TransitionRef {
  size_t traj_index = 0;
  size_t t = 0;
};

// Every (s_t, s_{t+1}) of every trajectory in deterministic order
// (corpus order, then time index).
std::vector<TransitionRef> transitions(const Corpus& corpus);

// Stack windows into a {B, l, state_dim} tensor for the encoder.
Tensor stack_windows(const std::vector<SubTrajectory>& windows);

}  // namespace oodil

#endif  // OODIL_DEMOS_HPP_
