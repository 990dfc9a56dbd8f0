#ifndef OODIL_CLUSTER_HPP_
#define OODIL_CLUSTER_HPP_

#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "oodil/demos.hpp"
#include "oodil/rnn.hpp"

namespace oodil {

struct ClusterHyper {
  size_t k = 10;
  size_t subtraj_len = 15;  // l
  size_t stride = 1;
  double lambda = 0.01;
  size_t batch_pairs = 64;  // N trajectories per batch, 2N windows
  size_t pretrain_iters = 200;
  size_t train_iters = 2000;
  size_t hidden = 128;
  double lr = 0.01;
  uint64_t label_seed = 1234567;  // fixed seed for inference-time labeling
};

// Trajectory encoder plus cluster centers. Center rows are unit-norm; the
// encoder output is unit-norm, so nearest-center assignment and cosine
// similarity act on the same sphere.
struct ClusterModel {
  RecurrentParams encoder;
  Tensor centers;  // k x hidden
  ClusterHyper hyper;
};

// trajectory_id -> cluster label in {1..K}
struct ClusterAssignment {
  size_t k = 0;
  std::map<std::string, int> labels;
};

// Contrastive loss over 2N unit features where (2i-1, 2i) are positive
// pairs (1-based). Optionally accumulates d loss / d features.
double contrastive_loss(const Tensor& features, Tensor* dfeatures = nullptr);

// Nearest-center labels (1-based), ties broken by lowest center index.
std::vector<int> assign(const Tensor& features, const Tensor& centers);

// Joint loss: contrastive + (lambda/2) * mean_n ||f_n - c_{y_n}||^2.
// Centers and labels are constants here; gradients flow to features only.
double cluster_loss(const Tensor& features, const Tensor& centers, const std::vector<int>& labels,
                    double lambda, Tensor* dfeatures = nullptr);

// Per nonempty cluster: c_k <- (1-beta) c_k + beta * mean(members), with
// beta = 1/m_k, then renormalized to unit norm. Empty clusters unchanged.
void update_centers(Tensor& centers, const Tensor& features, const std::vector<int>& labels);

struct SccDiagnostics {
  std::vector<double> pretrain_losses;
  std::vector<double> train_losses;
};

// Joint contrastive clustering: contrast-only pretraining, center
// initialization from K distinct random trajectories, then joint iterations
// of label assignment, an encoder gradient step, re-assignment and a center
// update.
ClusterModel train_scc(const Corpus& corpus, const ClusterHyper& hyper, Rng& rng,
                       SccDiagnostics* diag = nullptr);

// Label every trajectory from one uniformly sampled window (inference only).
// Each trajectory uses a fresh generator seeded from the model's label seed,
// so identical trajectories always receive identical labels.
ClusterAssignment label_corpus(const ClusterModel& model, const Corpus& corpus);

// Fraction of trajectories whose cluster's majority tag matches their own.
double purity(const ClusterAssignment& assignment, const std::map<std::string, std::string>& tags);
std::map<std::string, std::string> tags_from_corpus(const Corpus& corpus);

// Lloyd k-means over one random fixed-stride window per trajectory,
// flattened to a vector. Padding as in subsample.
ClusterAssignment kmeans_baseline(const Corpus& corpus, size_t k, size_t l, size_t stride,
                                  Rng& rng);

nlohmann::json cluster_model_to_json(const ClusterModel& model);
ClusterModel cluster_model_from_json(const nlohmann::json& doc);

nlohmann::json assignment_to_json(const ClusterAssignment& assignment);
ClusterAssignment assignment_from_json(const nlohmann::json& doc);

}  // namespace oodil

#endif  // OODIL_CLUSTER_HPP_
