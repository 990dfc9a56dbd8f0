#include "oodil/demos.hpp"

#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace oodil {

void Corpus::validate() const {
  if (trajectories.empty()) throw std::runtime_error("corpus: empty");
  for (const auto& traj : trajectories) {
    if (traj.states.size() < 2) {
      throw std::runtime_error("corpus: trajectory '" + traj.id + "' has fewer than 2 states");
    }
    for (const auto& s : traj.states) {
      if (s.size() != state_dim) {
        throw std::runtime_error("corpus: ragged state dimension in trajectory '" + traj.id + "'");
      }
    }
  }
}

Corpus Corpus::from(std::vector<Trajectory> trajectories) {
  Corpus corpus;
  corpus.trajectories = std::move(trajectories);
  if (!corpus.trajectories.empty() && !corpus.trajectories[0].states.empty()) {
    corpus.state_dim = corpus.trajectories[0].states[0].size();
  }
  corpus.validate();
  return corpus;
}

void save_corpus(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  for (const auto& traj : corpus.trajectories) {
    nlohmann::json line = {
        {"id", traj.id}, {"source_tag", traj.source_tag}, {"states", traj.states}};
    out << line.dump() << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

Corpus load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::vector<Trajectory> trajectories;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    line_no++;
    if (line.empty()) continue;
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw std::runtime_error(path + ": line " + std::to_string(line_no) +
                               ": parse error: " + e.what());
    }
    Trajectory traj;
    try {
      traj.id = doc.at("id").get<std::string>();
      traj.source_tag = doc.value("source_tag", std::string());
      traj.states = doc.at("states").get<std::vector<std::vector<double>>>();
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error(path + ": line " + std::to_string(line_no) + ": " + e.what());
    }
    trajectories.push_back(std::move(traj));
  }
  if (trajectories.empty()) throw std::runtime_error(path + ": no trajectories");
  Corpus corpus;
  corpus.trajectories = std::move(trajectories);
  corpus.state_dim = corpus.trajectories[0].states.empty() ? 0 : corpus.trajectories[0].states[0].size();
  try {
    corpus.validate();
  } catch (const std::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  return corpus;
}

namespace {

// repeat the final state until (l-1)*stride + 1 states exist
std::vector<std::vector<double>> padded_states(const Trajectory& traj, size_t required,
                                               bool* padded) {
  std::vector<std::vector<double>> states = traj.states;
  *padded = states.size() < required;
  while (states.size() < required) states.push_back(states.back());
  return states;
}

}  // namespace

SubTrajectory subsample(const Trajectory& traj, size_t l, size_t stride, Rng& rng) {
  if (l < 1 || stride < 1) throw std::invalid_argument("subsample: l and stride must be >= 1");
  if (traj.states.empty()) throw std::invalid_argument("subsample: empty trajectory");
  const size_t required = (l - 1) * stride + 1;
  SubTrajectory sub;
  sub.parent_id = traj.id;
  auto states = padded_states(traj, required, &sub.padded);
  const size_t n_starts = states.size() - required + 1;
  sub.start = rng.uniform_int(n_starts);
  sub.states.reserve(l);
  for (size_t j = 0; j < l; j++) sub.states.push_back(states[sub.start + j * stride]);
  return sub;
}

std::pair<SubTrajectory, SubTrajectory> subsample_pair(const Trajectory& traj, size_t l,
                                                       size_t stride, Rng& rng) {
  SubTrajectory a = subsample(traj, l, stride, rng);
  SubTrajectory b = subsample(traj, l, stride, rng);
  return {std::move(a), std::move(b)};
}

std::vector<TransitionRef> transitions(const Corpus& corpus) {
  std::vector<TransitionRef> out;
  for (size_t i = 0; i < corpus.trajectories.size(); i++) {
    const size_t n = corpus.trajectories[i].num_transitions();
    for (size_t t = 0; t < n; t++) out.push_back({i, t});
  }
  return out;
}

Tensor stack_windows(const std::vector<SubTrajectory>& windows) {
  if (windows.empty()) throw std::invalid_argument("stack_windows: empty batch");
  const size_t b = windows.size();
  const size_t l = windows[0].states.size();
  const size_t dim = windows[0].states[0].size();
  Tensor out({b, l, dim});
  for (size_t i = 0; i < b; i++) {
    if (windows[i].states.size() != l) throw std::invalid_argument("stack_windows: ragged lengths");
    for (size_t t = 0; t < l; t++) {
      for (size_t d = 0; d < dim; d++) out.data[(i * l + t) * dim + d] = windows[i].states[t][d];
    }
  }
  return out;
}

}  // namespace oodil
