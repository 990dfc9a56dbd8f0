#include "oodil/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "oodil/adam.hpp"
#include "oodil/checkpoint.hpp"
#include "oodil/linalg.hpp"

namespace oodil {

double contrastive_loss(const Tensor& features, Tensor* dfeatures) {
  if (features.shape.size() != 2) throw std::invalid_argument("contrastive_loss: expected 2N x dim");
  const size_t two_n = features.shape[0], dim = features.shape[1];
  if (two_n < 2 || two_n % 2 != 0) {
    throw std::invalid_argument("contrastive_loss: feature count must be even and >= 2");
  }
  for (size_t i = 0; i < two_n; i++) {
    const double n2 = dot(features.row(i), features.row(i), dim);
    if (std::fabs(n2 - 1.0) > 1e-6) {
      throw std::invalid_argument("contrastive_loss: features must be unit-norm");
    }
  }
  const size_t n = two_n / 2;

  // all pairwise similarities (cosine = dot of unit vectors)
  Tensor sims({two_n, two_n});
  matmul_nt(features, features, sims);

  double total = 0.0;
  std::vector<double> softmax(two_n);
  for (size_t i = 0; i < n; i++) {
    const size_t anchor = 2 * i, positive = 2 * i + 1;
    // denominator runs over every j != anchor (the positive term included),
    // so with no negatives the ratio is exactly 1 and the loss exactly 0
    const double numer = std::exp(sims.at(anchor, positive));
    double denom = numer;
    for (size_t j = 0; j < two_n; j++) {
      if (j == anchor || j == positive) continue;
      denom += std::exp(sims.at(anchor, j));
    }
    total += -std::log(numer / denom);

    if (dfeatures) {
      for (size_t j = 0; j < two_n; j++) {
        softmax[j] = j == anchor ? 0.0 : std::exp(sims.at(anchor, j)) / denom;
      }
      const double inv_n = 1.0 / static_cast<double>(n);
      double* da = dfeatures->row(anchor);
      // d/d f_anchor: -f_pos + sum_j softmax_j f_j
      for (size_t j = 0; j < two_n; j++) {
        if (j == anchor) continue;
        const double* fj = features.row(j);
        double coef = softmax[j] * inv_n;
        if (j == positive) coef -= inv_n;
        for (size_t d = 0; d < dim; d++) da[d] += coef * fj[d];
        // d/d f_j: softmax_j * f_anchor (minus the positive's numerator term)
        double* dj = dfeatures->row(j);
        const double* fa = features.row(anchor);
        for (size_t d = 0; d < dim; d++) dj[d] += coef * fa[d];
      }
    }
  }
  return total / static_cast<double>(n);
}

std::vector<int> assign(const Tensor& features, const Tensor& centers) {
  if (features.shape.size() != 2 || centers.shape.size() != 2 ||
      features.shape[1] != centers.shape[1]) {
    throw std::invalid_argument("assign: feature/center dimension mismatch");
  }
  const size_t m = features.shape[0], k = centers.shape[0], dim = features.shape[1];
  std::vector<int> labels(m);
  for (size_t i = 0; i < m; i++) {
    double best = std::numeric_limits<double>::infinity();
    size_t best_k = 0;
    for (size_t c = 0; c < k; c++) {
      double d2 = 0.0;
      const double* f = features.row(i);
      const double* cc = centers.row(c);
      for (size_t d = 0; d < dim; d++) {
        const double diff = f[d] - cc[d];
        d2 += diff * diff;
      }
      if (d2 < best) {  // strict: ties keep the lowest index
        best = d2;
        best_k = c;
      }
    }
    labels[i] = static_cast<int>(best_k) + 1;
  }
  return labels;
}

double cluster_loss(const Tensor& features, const Tensor& centers, const std::vector<int>& labels,
                    double lambda, Tensor* dfeatures) {
  const size_t m = features.shape[0], dim = features.shape[1];
  if (labels.size() != m) throw std::invalid_argument("cluster_loss: label count mismatch");
  double loss = contrastive_loss(features, dfeatures);
  double quad = 0.0;
  for (size_t i = 0; i < m; i++) {
    const int label = labels[i];
    if (label < 1 || static_cast<size_t>(label) > centers.shape[0]) {
      throw std::invalid_argument("cluster_loss: label out of range");
    }
    const double* f = features.row(i);
    const double* c = centers.row(label - 1);
    for (size_t d = 0; d < dim; d++) {
      const double diff = f[d] - c[d];
      quad += diff * diff;
      if (dfeatures) dfeatures->at(i, d) += lambda * diff / static_cast<double>(m);
    }
  }
  // second term averaged over the batch so lambda is batch-size independent
  loss += 0.5 * lambda * quad / static_cast<double>(m);
  return loss;
}

void update_centers(Tensor& centers, const Tensor& features, const std::vector<int>& labels) {
  const size_t k = centers.shape[0], dim = centers.shape[1], m = features.shape[0];
  if (labels.size() != m) throw std::invalid_argument("update_centers: label count mismatch");
  std::vector<size_t> counts(k, 0);
  Tensor sums({k, dim});
  for (size_t i = 0; i < m; i++) {
    const size_t c = static_cast<size_t>(labels[i]) - 1;
    counts[c]++;
    const double* f = features.row(i);
    double* s = sums.row(c);
    for (size_t d = 0; d < dim; d++) s[d] += f[d];
  }
  for (size_t c = 0; c < k; c++) {
    if (counts[c] == 0) continue;
    const double beta = 1.0 / static_cast<double>(counts[c]);
    double* ctr = centers.row(c);
    const double* s = sums.row(c);
    double norm2 = 0.0;
    for (size_t d = 0; d < dim; d++) {
      // (1-beta) c + beta * mean(members); mean = s / count = s * beta
      ctr[d] = (1.0 - beta) * ctr[d] + beta * (s[d] * beta);
      norm2 += ctr[d] * ctr[d];
    }
    const double norm = std::sqrt(norm2);
    if (norm > 1e-12) {
      for (size_t d = 0; d < dim; d++) ctr[d] /= norm;
    }
  }
}

namespace {

// first `count` entries of a partial Fisher-Yates shuffle: distinct indices
std::vector<size_t> sample_indices(size_t n, size_t count, Rng& rng) {
  std::vector<size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (size_t i = 0; i < count; i++) {
    const size_t j = i + rng.uniform_int(n - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(count);
  return idx;
}

Tensor encode_windows(const RecurrentParams& encoder, const std::vector<SubTrajectory>& windows,
                      RnnCache* cache) {
  return rnn_encode_batch(encoder, stack_windows(windows), cache);
}

struct Batch {
  std::vector<SubTrajectory> windows;  // 2N, pairs adjacent
};

Batch draw_batch(const Corpus& corpus, const ClusterHyper& hyper, Rng& rng) {
  const size_t n = std::min(hyper.batch_pairs, corpus.trajectories.size());
  Batch batch;
  batch.windows.reserve(2 * n);
  for (size_t idx : sample_indices(corpus.trajectories.size(), n, rng)) {
    auto [a, b] = subsample_pair(corpus.trajectories[idx], hyper.subtraj_len, hyper.stride, rng);
    batch.windows.push_back(std::move(a));
    batch.windows.push_back(std::move(b));
  }
  return batch;
}

}  // namespace

ClusterModel train_scc(const Corpus& corpus, const ClusterHyper& hyper, Rng& rng,
                       SccDiagnostics* diag) {
  corpus.validate();
  if (hyper.k < 1) throw std::invalid_argument("train_scc: K must be >= 1");
  if (hyper.k > corpus.trajectories.size()) {
    throw std::invalid_argument("train_scc: K exceeds the trajectory count");
  }

  ClusterModel model;
  model.hyper = hyper;
  model.encoder = RecurrentParams::create(corpus.state_dim, hyper.hidden, rng);
  AdamState opt = AdamState::init(model.encoder.tensors(), hyper.lr);

  auto encoder_step = [&](const Batch& batch, bool with_centers,
                          const std::vector<int>& labels) -> double {
    Tensor seqs = stack_windows(batch.windows);
    RnnCache cache;
    Tensor features = rnn_encode_batch(model.encoder, seqs, &cache);
    Tensor dfeat(features.shape);
    double loss = with_centers ? cluster_loss(features, model.centers, labels, hyper.lambda, &dfeat)
                               : contrastive_loss(features, &dfeat);
    if (!std::isfinite(loss)) throw std::runtime_error("train_scc: non-finite loss");
    RecurrentParams grads = zero_grads_like(model.encoder);
    rnn_encode_backward(model.encoder, seqs, cache, dfeat, &grads);
    std::vector<const Tensor*> gptr;
    for (Tensor* t : grads.tensors()) gptr.push_back(t);
    adam_step(model.encoder.tensors(), gptr, opt);
    return loss;
  };

  // contrast-only pretraining
  for (size_t iter = 0; iter < hyper.pretrain_iters; iter++) {
    Batch batch = draw_batch(corpus, hyper, rng);
    double loss = encoder_step(batch, false, {});
    if (diag) diag->pretrain_losses.push_back(loss);
  }

  // centers from K distinct random trajectories
  {
    std::vector<SubTrajectory> seeds;
    for (size_t idx : sample_indices(corpus.trajectories.size(), hyper.k, rng)) {
      seeds.push_back(subsample(corpus.trajectories[idx], hyper.subtraj_len, hyper.stride, rng));
    }
    model.centers = encode_windows(model.encoder, seeds, nullptr);
  }

  // joint training
  for (size_t iter = 0; iter < hyper.train_iters; iter++) {
    Batch batch = draw_batch(corpus, hyper, rng);
    Tensor features = encode_windows(model.encoder, batch.windows, nullptr);
    std::vector<int> labels = assign(features, model.centers);
    double loss = encoder_step(batch, true, labels);
    if (diag) diag->train_losses.push_back(loss);
    // re-assign under the updated encoder, then move the centers
    Tensor updated = encode_windows(model.encoder, batch.windows, nullptr);
    std::vector<int> new_labels = assign(updated, model.centers);
    update_centers(model.centers, updated, new_labels);
  }
  return model;
}

ClusterAssignment label_corpus(const ClusterModel& model, const Corpus& corpus) {
  if (corpus.state_dim != model.encoder.input_dim()) {
    throw std::invalid_argument("label_corpus: state dimension mismatch");
  }
  ClusterAssignment assignment;
  assignment.k = model.centers.shape[0];
  for (const auto& traj : corpus.trajectories) {
    Rng rng(derive_seed(model.hyper.label_seed, "label_window"));
    SubTrajectory window = subsample(traj, model.hyper.subtraj_len, model.hyper.stride, rng);
    Tensor features = encode_windows(model.encoder, {window}, nullptr);
    assignment.labels[traj.id] = assign(features, model.centers)[0];
  }
  return assignment;
}

double purity(const ClusterAssignment& assignment, const std::map<std::string, std::string>& tags) {
  // per cluster: count of its most common ground-truth tag
  std::map<int, std::map<std::string, size_t>> cluster_tag_counts;
  size_t total = 0;
  for (const auto& [id, label] : assignment.labels) {
    auto it = tags.find(id);
    if (it == tags.end()) throw std::invalid_argument("purity: missing tag for '" + id + "'");
    cluster_tag_counts[label][it->second]++;
    total++;
  }
  if (total == 0) throw std::invalid_argument("purity: empty assignment");
  size_t matched = 0;
  for (const auto& [label, counts] : cluster_tag_counts) {
    size_t best = 0;
    for (const auto& [tag, count] : counts) best = std::max(best, count);
    matched += best;
  }
  return static_cast<double>(matched) / static_cast<double>(total);
}

std::map<std::string, std::string> tags_from_corpus(const Corpus& corpus) {
  std::map<std::string, std::string> tags;
  for (const auto& traj : corpus.trajectories) tags[traj.id] = traj.source_tag;
  return tags;
}

ClusterAssignment kmeans_baseline(const Corpus& corpus, size_t k, size_t l, size_t stride,
                                  Rng& rng) {
  corpus.validate();
  if (k < 1) throw std::invalid_argument("kmeans_baseline: K must be >= 1");
  if (k > corpus.trajectories.size()) {
    throw std::invalid_argument("kmeans_baseline: K exceeds the trajectory count");
  }
  const size_t n = corpus.trajectories.size();
  const size_t dim = l * corpus.state_dim;

  // one flattened window per trajectory
  Tensor points({n, dim});
  for (size_t i = 0; i < n; i++) {
    SubTrajectory sub = subsample(corpus.trajectories[i], l, stride, rng);
    size_t d = 0;
    for (const auto& s : sub.states) {
      for (double v : s) points.at(i, d++) = v;
    }
  }

  Tensor centers({k, dim});
  {
    auto seeds = sample_indices(n, k, rng);
    for (size_t c = 0; c < k; c++) {
      std::copy(points.row(seeds[c]), points.row(seeds[c]) + dim, centers.row(c));
    }
  }

  std::vector<int> labels(n, 0);
  for (int iter = 0; iter < 100; iter++) {
    std::vector<int> next = assign(points, centers);
    if (next == labels) break;
    labels = next;
    Tensor sums({k, dim});
    std::vector<size_t> counts(k, 0);
    for (size_t i = 0; i < n; i++) {
      const size_t c = static_cast<size_t>(labels[i]) - 1;
      counts[c]++;
      for (size_t d = 0; d < dim; d++) sums.at(c, d) += points.at(i, d);
    }
    for (size_t c = 0; c < k; c++) {
      if (counts[c] == 0) continue;  // empty cluster keeps its center
      for (size_t d = 0; d < dim; d++) centers.at(c, d) = sums.at(c, d) / counts[c];
    }
  }

  ClusterAssignment assignment;
  assignment.k = k;
  for (size_t i = 0; i < n; i++) assignment.labels[corpus.trajectories[i].id] = labels[i];
  return assignment;
}

nlohmann::json cluster_model_to_json(const ClusterModel& model) {
  ClusterModel& m = const_cast<ClusterModel&>(model);
  NamedTensors named = m.encoder.named_tensors("encoder");
  named.emplace_back("centers", &m.centers);
  nlohmann::json doc;
  doc["type"] = "cluster_model";
  doc["params"] = tensors_to_json(named);
  doc["meta"] = {{"k", model.hyper.k},
                 {"subtraj_len", model.hyper.subtraj_len},
                 {"stride", model.hyper.stride},
                 {"lambda", model.hyper.lambda},
                 {"hidden", model.hyper.hidden},
                 {"label_seed", model.hyper.label_seed},
                 {"input_dim", model.encoder.input_dim()}};
  return doc;
}

ClusterModel cluster_model_from_json(const nlohmann::json& doc) {
  if (doc.value("type", "") != "cluster_model") {
    throw std::runtime_error("cluster model: unexpected document type");
  }
  const auto& meta = doc.at("meta");
  ClusterModel model;
  model.hyper.k = meta.at("k").get<size_t>();
  model.hyper.subtraj_len = meta.at("subtraj_len").get<size_t>();
  model.hyper.stride = meta.at("stride").get<size_t>();
  model.hyper.lambda = meta.at("lambda").get<double>();
  model.hyper.hidden = meta.at("hidden").get<size_t>();
  model.hyper.label_seed = meta.at("label_seed").get<uint64_t>();
  const size_t input_dim = meta.at("input_dim").get<size_t>();
  Rng dummy(0);
  model.encoder = RecurrentParams::create(input_dim, model.hyper.hidden, dummy);
  model.centers = Tensor({model.hyper.k, model.hyper.hidden});
  NamedTensors named = model.encoder.named_tensors("encoder");
  named.emplace_back("centers", &model.centers);
  tensors_from_json(doc.at("params"), named);
  return model;
}

nlohmann::json assignment_to_json(const ClusterAssignment& assignment) {
  nlohmann::json doc;
  doc["k"] = assignment.k;
  doc["labels"] = assignment.labels;
  return doc;
}

ClusterAssignment assignment_from_json(const nlohmann::json& doc) {
  ClusterAssignment assignment;
  assignment.k = doc.at("k").get<size_t>();
  assignment.labels = doc.at("labels").get<std::map<std::string, int>>();
  return assignment;
}

}  // namespace oodil
