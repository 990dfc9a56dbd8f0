#include <cmath>
#include <cstdio>
#include <filesystem>

#include "doctest.h"
#include "oodil/adam.hpp"
#include "oodil/checkpoint.hpp"
#include "oodil/grad_check.hpp"
#include "oodil/linalg.hpp"
#include "oodil/nets.hpp"
#include "oodil/parallel.hpp"
#include "oodil/rnn.hpp"
#include "oracles.hpp"

using namespace oodil;

namespace {

oracle::MlpLayerRef to_ref(const MlpLayer& l) {
  oracle::MlpLayerRef r;
  const size_t out = l.w.shape[0], in = l.w.shape[1];
  r.w.assign(out, std::vector<double>(in));
  for (size_t j = 0; j < out; j++)
    for (size_t i = 0; i < in; i++) r.w[j][i] = l.w.at(j, i);
  r.b = l.b.data;
  r.act_kind = l.act == Activation::kTanh ? 1 : (l.act == Activation::kSigmoid ? 2 : 0);
  return r;
}

}  // namespace

TEST_CASE("tensor shape and data stay consistent") {
  Tensor t({2, 3});
  CHECK(t.numel() == 6);
  CHECK_THROWS(Tensor({2, 3}, {1.0, 2.0}));
}

TEST_CASE("matmul kernels agree with naive loops") {
  Rng rng(11);
  for (int trial = 0; trial < 5; trial++) {
    size_t m = 1 + rng.uniform_int(7), k = 1 + rng.uniform_int(7), n = 1 + rng.uniform_int(7);
    Tensor a({m, k}), b({k, n}), bt({n, k}), at({k, m});
    for (auto& v : a.data) v = rng.normal();
    for (auto& v : b.data) v = rng.normal();
    for (size_t r = 0; r < n; r++)
      for (size_t c = 0; c < k; c++) bt.at(r, c) = b.at(c, r);
    for (size_t r = 0; r < k; r++)
      for (size_t c = 0; c < m; c++) at.at(r, c) = a.at(c, r);

    Tensor want({m, n});
    for (size_t i = 0; i < m; i++)
      for (size_t j = 0; j < n; j++) {
        double s = 0;
        for (size_t p = 0; p < k; p++) s += a.at(i, p) * b.at(p, j);
        want.at(i, j) = s;
      }

    Tensor c1({m, n}), c2({m, n}), c3({m, n});
    matmul_nn(a, b, c1);
    matmul_nt(a, bt, c2);
    matmul_tn(at, b, c3);
    for (size_t i = 0; i < m * n; i++) {
      CHECK(c1.data[i] == doctest::Approx(want.data[i]).epsilon(1e-12));
      CHECK(c2.data[i] == doctest::Approx(want.data[i]).epsilon(1e-12));
      CHECK(c3.data[i] == doctest::Approx(want.data[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("parallel_for output independent of worker count") {
  const int saved = num_threads();
  Tensor a({64, 96}), b({96, 80});
  Rng rng(5);
  for (auto& v : a.data) v = rng.normal();
  for (auto& v : b.data) v = rng.normal();
  set_num_threads(1);
  Tensor c1({64, 80});
  matmul_nn(a, b, c1);
  set_num_threads(4);
  Tensor c4({64, 80});
  matmul_nn(a, b, c4);
  set_num_threads(saved);
  CHECK(c1.data == c4.data);
}

TEST_CASE("mlp_forward identity and affine degenerate cases") {
  // identity weights, zero bias, identity activation
  MlpParams p;
  MlpLayer l;
  l.w = Tensor({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  l.b = Tensor({3});
  l.act = Activation::kIdentity;
  p.layers.push_back(l);
  Tensor x({3}, {1, 2, 3});
  Tensor y = mlp_forward(p, x);
  CHECK(y.data == std::vector<double>{1, 2, 3});

  // zero weights, bias b
  MlpParams p2;
  MlpLayer l2;
  l2.w = Tensor({2, 3});
  l2.b = Tensor({2}, {0.5, -0.25});
  l2.act = Activation::kIdentity;
  p2.layers.push_back(l2);
  Tensor y2 = mlp_forward(p2, x);
  CHECK(y2.data[0] == 0.5);
  CHECK(y2.data[1] == -0.25);
}

TEST_CASE("mlp_forward matches independent straight-line oracle") {
  Rng rng(42);
  MlpParams p = MlpParams::create({4, 7, 3}, {Activation::kTanh, Activation::kIdentity}, rng);
  std::vector<oracle::MlpLayerRef> ref{to_ref(p.layers[0]), to_ref(p.layers[1])};
  for (int trial = 0; trial < 10; trial++) {
    Tensor x({4});
    for (auto& v : x.data) v = rng.normal();
    Tensor y = mlp_forward(p, x);
    auto want = oracle::mlp_forward_ref(ref, x.data);
    for (size_t i = 0; i < 3; i++) CHECK(y.data[i] == doctest::Approx(want[i]).epsilon(1e-12));
  }
}

TEST_CASE("mlp_forward rejects dimension mismatch") {
  Rng rng(1);
  MlpParams p = MlpParams::create({4, 3}, {Activation::kTanh}, rng);
  Tensor x({5});
  CHECK_THROWS(mlp_forward(p, x));
}

TEST_CASE("mlp_backward linear layer closed form") {
  // y = W x, upstream g: dW = g x^T, dx = W^T g
  MlpParams p;
  MlpLayer l;
  l.w = Tensor({2, 3}, {1, 2, 3, 4, 5, 6});
  l.b = Tensor({2});
  l.act = Activation::kIdentity;
  p.layers.push_back(l);
  Tensor x({3}, {0.5, -1.0, 2.0});
  Tensor g({2}, {1.0, -2.0});
  auto result = mlp_backward(p, x, g);
  // dW[j][i] = g[j] * x[i]
  for (size_t j = 0; j < 2; j++)
    for (size_t i = 0; i < 3; i++)
      CHECK(result.grads.layers[0].w.at(j, i) == doctest::Approx(g.data[j] * x.data[i]));
  // dx = W^T g
  CHECK(result.input_grad.data[0] == doctest::Approx(1 * 1.0 + 4 * -2.0));
  CHECK(result.input_grad.data[1] == doctest::Approx(2 * 1.0 + 5 * -2.0));
  CHECK(result.input_grad.data[2] == doctest::Approx(3 * 1.0 + 6 * -2.0));
  CHECK(result.grads.layers[0].b.data[0] == doctest::Approx(1.0));
  CHECK(result.grads.layers[0].b.data[1] == doctest::Approx(-2.0));
}

TEST_CASE("mlp_backward zero upstream gives zero gradients") {
  Rng rng(3);
  MlpParams p = MlpParams::create({3, 5, 2}, {Activation::kSigmoid, Activation::kTanh}, rng);
  Tensor x({3}, {0.1, 0.2, 0.3});
  Tensor g({2});
  auto result = mlp_backward(p, x, g);
  for (const auto& layer : result.grads.layers) {
    for (double v : layer.w.data) CHECK(v == 0.0);
    for (double v : layer.b.data) CHECK(v == 0.0);
  }
}

TEST_CASE("mlp_backward matches finite differences") {
  Rng rng(7);
  MlpParams p = MlpParams::create({3, 8, 1}, {Activation::kTanh, Activation::kIdentity}, rng);
  Tensor x({5, 3});
  for (auto& v : x.data) v = rng.normal();

  // loss = sum of outputs
  auto loss_fn = [&](std::vector<Tensor>* grads) {
    if (!grads) {
      Tensor y = mlp_forward(p, x);
      double s = 0;
      for (double v : y.data) s += v;
      return s;
    }
    Tensor up({5, 1});
    up.fill(1.0);
    auto result = mlp_backward(p, x, up);
    grads->clear();
    for (auto& l : result.grads.layers) {
      grads->push_back(l.w);
      grads->push_back(l.b);
    }
    Tensor y = mlp_forward(p, x);
    double s = 0;
    for (double v : y.data) s += v;
    return s;
  };
  auto res = grad_check(loss_fn, p.tensors());
  CHECK(res.max_rel_err < 1e-4);
}

TEST_CASE("rnn_encode output is unit norm and matches base case") {
  Rng rng(13);
  RecurrentParams p = RecurrentParams::create(2, 6, rng);
  Tensor seq({4, 2});
  for (auto& v : seq.data) v = rng.normal();
  Tensor f = rnn_encode(p, seq);
  double norm = 0;
  for (double v : f.data) norm += v * v;
  CHECK(std::fabs(std::sqrt(norm) - 1.0) < 1e-9);

  // T=1 equals one cell application on zero hidden state
  Tensor one({1, 2}, {seq.data[0], seq.data[1]});
  Tensor f1 = rnn_encode(p, one);
  oracle::MguRef ref;
  const size_t hid = 6;
  ref.b_f = p.b_f.data;
  ref.b_c = p.b_c.data;
  ref.w_f.assign(hid, std::vector<double>(2));
  ref.w_c.assign(hid, std::vector<double>(2));
  ref.u_f.assign(hid, std::vector<double>(hid));
  ref.u_c.assign(hid, std::vector<double>(hid));
  for (size_t j = 0; j < hid; j++) {
    for (size_t i = 0; i < 2; i++) {
      ref.w_f[j][i] = p.w_f.at(j, i);
      ref.w_c[j][i] = p.w_c.at(j, i);
    }
    for (size_t i = 0; i < hid; i++) {
      ref.u_f[j][i] = p.u_f.at(j, i);
      ref.u_c[j][i] = p.u_c.at(j, i);
    }
  }
  auto want1 = oracle::mgu_encode_ref(ref, {{seq.data[0], seq.data[1]}});
  for (size_t j = 0; j < hid; j++) CHECK(f1.data[j] == doctest::Approx(want1[j]).epsilon(1e-12));

  // full sequence matches the scalar recurrence oracle
  std::vector<std::vector<double>> steps;
  for (size_t t = 0; t < 4; t++) steps.push_back({seq.at(t, 0), seq.at(t, 1)});
  auto want = oracle::mgu_encode_ref(ref, steps);
  for (size_t j = 0; j < hid; j++) CHECK(f.data[j] == doctest::Approx(want[j]).epsilon(1e-12));
}

TEST_CASE("rnn_encode rejects empty sequence") {
  Rng rng(2);
  RecurrentParams p = RecurrentParams::create(2, 4, rng);
  Tensor empty({0, 2});
  CHECK_THROWS(rnn_encode(p, empty));
}

TEST_CASE("rnn backward matches finite differences") {
  Rng rng(17);
  RecurrentParams p = RecurrentParams::create(2, 8, rng);  // 8*2*2 + 8*8*2 + 8*2 = 176 params
  Tensor seqs({3, 5, 2});
  for (auto& v : seqs.data) v = rng.normal();
  Tensor target({3, 8});
  for (auto& v : target.data) v = rng.normal();

  // loss = 0.5 * sum((encode - target)^2)
  auto loss_fn = [&](std::vector<Tensor>* grads) {
    RnnCache cache;
    Tensor f = rnn_encode_batch(p, seqs, grads ? &cache : nullptr);
    double loss = 0;
    for (size_t i = 0; i < f.data.size(); i++) {
      double d = f.data[i] - target.data[i];
      loss += 0.5 * d * d;
    }
    if (grads) {
      Tensor up({3, 8});
      for (size_t i = 0; i < up.data.size(); i++) up.data[i] = f.data[i] - target.data[i];
      RecurrentParams g = zero_grads_like(p);
      rnn_encode_backward(p, seqs, cache, up, &g);
      grads->clear();
      for (Tensor* t : g.tensors()) grads->push_back(*t);
    }
    return loss;
  };
  auto res = grad_check(loss_fn, p.tensors());
  CHECK(res.max_rel_err < 1e-4);
  CHECK(res.entries_checked == p.param_count());
}

TEST_CASE("adam first step approximates -lr * sign(g)") {
  Tensor x({3}, {1.0, -2.0, 3.0});
  Tensor g({3}, {10.0, -0.5, 1e-3});
  AdamState st = AdamState::init({&x}, 0.1);
  adam_step({&x}, {&g}, st);
  CHECK(x.data[0] == doctest::Approx(1.0 - 0.1).epsilon(1e-5));
  CHECK(x.data[1] == doctest::Approx(-2.0 + 0.1).epsilon(1e-5));
  CHECK(x.data[2] == doctest::Approx(3.0 - 0.1).epsilon(1e-4));
  CHECK(st.t == 1);
}

TEST_CASE("adam zero gradient leaves parameters unchanged, t advances") {
  Tensor x({2}, {1.0, 2.0});
  Tensor g({2});
  AdamState st = AdamState::init({&x}, 0.1);
  adam_step({&x}, {&g}, st);
  CHECK(x.data == std::vector<double>{1.0, 2.0});
  CHECK(st.t == 1);
}

TEST_CASE("adam rejects non-finite gradient without side effects") {
  Tensor x({2}, {1.0, 2.0});
  Tensor g({2}, {0.5, std::numeric_limits<double>::quiet_NaN()});
  AdamState st = AdamState::init({&x}, 0.1);
  CHECK_THROWS(adam_step({&x}, {&g}, st));
  CHECK(x.data == std::vector<double>{1.0, 2.0});
  CHECK(st.t == 0);
}

TEST_CASE("adam descends x^2 monotonically") {
  // scalar hand rollout: f(x) = x^2, f'(x) = 2x, from x=1, lr=0.1
  Tensor x({1}, {1.0});
  AdamState st = AdamState::init({&x}, 0.1);
  double prev = 1.0;
  for (int i = 0; i < 3; i++) {
    Tensor g({1}, {2.0 * x.data[0]});
    adam_step({&x}, {&g}, st);
    CHECK(x.data[0] < prev);
    prev = x.data[0];
  }
}

TEST_CASE("grad_check on quadratic is nearly exact") {
  Tensor x({4}, {0.3, -0.7, 1.2, 0.05});
  auto loss_fn = [&](std::vector<Tensor>* grads) {
    double s = 0;
    for (double v : x.data) s += v * v;
    if (grads) {
      Tensor g({4});
      for (size_t i = 0; i < 4; i++) g.data[i] = 2.0 * x.data[i];
      *grads = {g};
    }
    return s;
  };
  auto res = grad_check(loss_fn, {&x});
  CHECK(res.max_rel_err < 1e-8);
}

TEST_CASE("grad_check subsamples above the entry budget deterministically") {
  Tensor x({40, 40});  // 1600 > 1000
  Rng rng(23);
  for (auto& v : x.data) v = rng.normal();
  auto loss_fn = [&](std::vector<Tensor>* grads) {
    double s = 0;
    for (double v : x.data) s += 0.5 * v * v;
    if (grads) {
      Tensor g = x;
      *grads = {g};
    }
    return s;
  };
  auto r1 = grad_check(loss_fn, {&x}, 1e-5, 1000, 9);
  auto r2 = grad_check(loss_fn, {&x}, 1e-5, 1000, 9);
  CHECK(r1.entries_checked == r2.entries_checked);
  CHECK(r1.entries_checked <= 1000);
  CHECK(r1.max_rel_err == r2.max_rel_err);
  CHECK(r1.max_rel_err < 1e-7);
}

TEST_CASE("checkpoint round trip is value-exact") {
  Rng rng(31);
  MlpParams p = MlpParams::create({3, 9, 2}, {Activation::kTanh, Activation::kIdentity}, rng);
  auto named = p.named_tensors("net");
  nlohmann::json doc = tensors_to_json(NamedTensors(named.begin(), named.end()));

  auto dir = std::filesystem::temp_directory_path() / "oodil_ckpt_test";
  std::filesystem::create_directories(dir);
  auto path = (dir / "p.json").string();
  save_json(path, doc);

  MlpParams q = MlpParams::create({3, 9, 2}, {Activation::kTanh, Activation::kIdentity}, rng);
  auto named_q = q.named_tensors("net");
  tensors_from_json(load_json(path), NamedTensors(named_q.begin(), named_q.end()));
  for (size_t li = 0; li < p.layers.size(); li++) {
    CHECK(p.layers[li].w.data == q.layers[li].w.data);  // bitwise
    CHECK(p.layers[li].b.data == q.layers[li].b.data);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("checkpoint load rejects shape mismatch") {
  Tensor a({2, 2}, {1, 2, 3, 4});
  nlohmann::json doc = tensors_to_json({{"a", &a}});
  Tensor b({3, 2});
  NamedTensors dst{{"a", &b}};
  CHECK_THROWS(tensors_from_json(doc, dst));
}
