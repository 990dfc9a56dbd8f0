#include "oodil/rnn.hpp"

#include <cmath>
#include <stdexcept>

#include "oodil/linalg.hpp"
#include "oodil/nets.hpp"

namespace oodil {

RecurrentParams RecurrentParams::create(size_t input_dim, size_t hidden, Rng& rng) {
  RecurrentParams p;
  p.w_f = Tensor({hidden, input_dim});
  p.u_f = Tensor({hidden, hidden});
  p.b_f = Tensor({hidden});
  p.w_c = Tensor({hidden, input_dim});
  p.u_c = Tensor({hidden, hidden});
  p.b_c = Tensor({hidden});
  xavier_fill(p.w_f, input_dim, hidden, rng);
  xavier_fill(p.u_f, hidden, hidden, rng);
  xavier_fill(p.w_c, input_dim, hidden, rng);
  xavier_fill(p.u_c, hidden, hidden, rng);
  return p;
}

size_t RecurrentParams::param_count() const {
  size_t n = 0;
  for (const Tensor* t : tensors()) n += t->numel();
  return n;
}

std::vector<Tensor*> RecurrentParams::tensors() { return {&w_f, &u_f, &b_f, &w_c, &u_c, &b_c}; }

std::vector<const Tensor*> RecurrentParams::tensors() const {
  return {&w_f, &u_f, &b_f, &w_c, &u_c, &b_c};
}

std::vector<std::pair<std::string, Tensor*>> RecurrentParams::named_tensors(
    const std::string& prefix) {
  return {{prefix + ".w_f", &w_f}, {prefix + ".u_f", &u_f}, {prefix + ".b_f", &b_f},
          {prefix + ".w_c", &w_c}, {prefix + ".u_c", &u_c}, {prefix + ".b_c", &b_c}};
}

RecurrentParams zero_grads_like(const RecurrentParams& params) {
  RecurrentParams g;
  g.w_f = zeros_like(params.w_f);
  g.u_f = zeros_like(params.u_f);
  g.b_f = zeros_like(params.b_f);
  g.w_c = zeros_like(params.w_c);
  g.u_c = zeros_like(params.u_c);
  g.b_c = zeros_like(params.b_c);
  return g;
}

namespace {

// slice step t of a {B, T, in} tensor into a (B x in) matrix
Tensor step_slice(const Tensor& sequences, size_t t) {
  const size_t b = sequences.shape[0], steps = sequences.shape[1], in = sequences.shape[2];
  Tensor x({b, in});
  for (size_t r = 0; r < b; r++) {
    const double* src = sequences.data.data() + (r * steps + t) * in;
    std::copy(src, src + in, x.row(r));
  }
  return x;
}

}  // namespace

Tensor rnn_encode_batch(const RecurrentParams& params, const Tensor& sequences, RnnCache* cache) {
  if (sequences.shape.size() != 3) {
    throw std::invalid_argument("rnn_encode_batch: expected {B, T, input_dim}");
  }
  const size_t batch = sequences.shape[0], steps = sequences.shape[1];
  const size_t in = sequences.shape[2], hidden = params.hidden();
  if (steps < 1) throw std::invalid_argument("rnn_encode: empty sequence");
  if (in != params.input_dim()) {
    throw std::invalid_argument("rnn_encode: state dim mismatch");
  }

  if (cache) {
    cache->batch = batch;
    cache->steps = steps;
    cache->h_prev.assign(steps, Tensor());
    cache->f.assign(steps, Tensor());
    cache->hh.assign(steps, Tensor());
    cache->c.assign(steps, Tensor());
  }

  Tensor h({batch, hidden});
  for (size_t t = 0; t < steps; t++) {
    Tensor x = step_slice(sequences, t);

    Tensor a_f({batch, hidden});
    for (size_t r = 0; r < batch; r++) {
      std::copy(params.b_f.data.begin(), params.b_f.data.end(), a_f.row(r));
    }
    matmul_nt(x, params.w_f, a_f);
    matmul_nt(h, params.u_f, a_f);
    Tensor f = a_f;
    for (double& v : f.data) v = 1.0 / (1.0 + std::exp(-v));

    Tensor hh({batch, hidden});
    for (size_t i = 0; i < hh.data.size(); i++) hh.data[i] = f.data[i] * h.data[i];

    Tensor a_c({batch, hidden});
    for (size_t r = 0; r < batch; r++) {
      std::copy(params.b_c.data.begin(), params.b_c.data.end(), a_c.row(r));
    }
    matmul_nt(x, params.w_c, a_c);
    matmul_nt(hh, params.u_c, a_c);
    Tensor c = a_c;
    for (double& v : c.data) v = std::tanh(v);

    Tensor h_next({batch, hidden});
    for (size_t i = 0; i < h_next.data.size(); i++) {
      h_next.data[i] = (1.0 - f.data[i]) * h.data[i] + f.data[i] * c.data[i];
    }

    if (cache) {
      cache->h_prev[t] = std::move(h);
      cache->f[t] = std::move(f);
      cache->hh[t] = std::move(hh);
      cache->c[t] = std::move(c);
    }
    h = std::move(h_next);
  }

  // L2-normalize rows
  Tensor out({batch, hidden});
  std::vector<double> norms(batch);
  for (size_t r = 0; r < batch; r++) {
    double n2 = dot(h.row(r), h.row(r), hidden);
    double n = std::sqrt(n2);
    if (!(n > 0.0)) throw std::runtime_error("rnn_encode: zero hidden state, cannot normalize");
    norms[r] = n;
    const double inv = 1.0 / n;
    for (size_t j = 0; j < hidden; j++) out.at(r, j) = h.at(r, j) * inv;
  }
  if (cache) {
    cache->h_final = std::move(h);
    cache->norms = std::move(norms);
  }
  out.check_finite("rnn_encode output");
  return out;
}

Tensor rnn_encode(const RecurrentParams& params, const Tensor& sequence) {
  if (sequence.shape.size() != 2) {
    throw std::invalid_argument("rnn_encode: expected {T, input_dim}");
  }
  Tensor batched({1, sequence.shape[0], sequence.shape[1]}, sequence.data);
  Tensor out = rnn_encode_batch(params, batched, nullptr);
  return Tensor({out.shape[1]}, out.data);
}

void rnn_encode_backward(const RecurrentParams& params, const Tensor& sequences,
                         const RnnCache& cache, const Tensor& upstream, RecurrentParams* grads) {
  const size_t batch = cache.batch, steps = cache.steps, hidden = params.hidden();
  if (upstream.shape.size() != 2 || upstream.shape[0] != batch || upstream.shape[1] != hidden) {
    throw std::invalid_argument("rnn_encode_backward: upstream shape mismatch");
  }

  // through normalization: dh = (g - (g . f) f) / norm, with f the unit row
  Tensor dh({batch, hidden});
  for (size_t r = 0; r < batch; r++) {
    const double inv = 1.0 / cache.norms[r];
    const double* hrow = cache.h_final.row(r);
    const double* grow = upstream.row(r);
    double gf = 0.0;
    for (size_t j = 0; j < hidden; j++) gf += grow[j] * hrow[j] * inv;
    for (size_t j = 0; j < hidden; j++) {
      dh.at(r, j) = (grow[j] - gf * hrow[j] * inv) * inv;
    }
  }

  for (size_t t = steps; t-- > 0;) {
    const Tensor& h_prev = cache.h_prev[t];
    const Tensor& f = cache.f[t];
    const Tensor& hh = cache.hh[t];
    const Tensor& c = cache.c[t];
    Tensor x = step_slice(sequences, t);

    // h_t = (1-f) . h_prev + f . c
    Tensor df({batch, hidden});
    Tensor dc({batch, hidden});
    Tensor dh_prev({batch, hidden});
    for (size_t i = 0; i < dh.data.size(); i++) {
      df.data[i] = dh.data[i] * (c.data[i] - h_prev.data[i]);
      dc.data[i] = dh.data[i] * f.data[i];
      dh_prev.data[i] = dh.data[i] * (1.0 - f.data[i]);
    }

    // c = tanh(a_c), a_c = x W_c^T + hh U_c^T + b_c
    Tensor da_c = dc;
    for (size_t i = 0; i < da_c.data.size(); i++) da_c.data[i] *= 1.0 - c.data[i] * c.data[i];
    matmul_tn(da_c, x, grads->w_c);
    col_sums(da_c, grads->b_c);
    matmul_tn(da_c, hh, grads->u_c);
    Tensor dhh({batch, hidden});
    matmul_nn(da_c, params.u_c, dhh);

    // hh = f . h_prev
    for (size_t i = 0; i < dhh.data.size(); i++) {
      df.data[i] += dhh.data[i] * h_prev.data[i];
      dh_prev.data[i] += dhh.data[i] * f.data[i];
    }

    // f = sigmoid(a_f), a_f = x W_f^T + h_prev U_f^T + b_f
    Tensor da_f = df;
    for (size_t i = 0; i < da_f.data.size(); i++) da_f.data[i] *= f.data[i] * (1.0 - f.data[i]);
    matmul_tn(da_f, x, grads->w_f);
    col_sums(da_f, grads->b_f);
    matmul_tn(da_f, h_prev, grads->u_f);
    matmul_nn(da_f, params.u_f, dh_prev);

    dh = std::move(dh_prev);
  }
}

}  // namespace oodil
