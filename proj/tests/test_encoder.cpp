#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "suvr/encoder.hpp"
#include "suvr/errors.hpp"
#include "suvr/numeric.hpp"

using namespace suvr;

namespace {

double rel_error(std::span<const double> a, std::span<const double> b) {
  double diff = 0.0, ref = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    ref += b[i] * b[i];
  }
  return std::sqrt(diff) / std::max(std::sqrt(ref), 1e-12);
}

// scalar probe L(theta) = sum_i g_i * v_i(theta); its parameter gradient is
// exactly what backward(cache, g) returns
double probe(const MlpEncoder& enc, const Vec& x, const Vec& g) {
  ForwardCache cache = enc.forward(x);
  double L = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) L += g[i] * cache.output[i];
  return L;
}

}  // namespace

TEST_CASE("make builds the documented shapes with constant 0.01 biases") {
  SeededRng rng(5);
  std::vector<std::size_t> hidden{7, 5};
  MlpEncoder enc = MlpEncoder::make(9, hidden, 4, rng);
  REQUIRE(enc.layers().size() == 3);
  CHECK(enc.input_dim() == 9);
  CHECK(enc.output_dim() == 4);
  CHECK(enc.layers()[0].weights.rows() == 7);
  CHECK(enc.layers()[0].weights.cols() == 9);
  CHECK(enc.layers()[0].activation == Activation::relu);
  CHECK(enc.layers()[1].weights.rows() == 5);
  CHECK(enc.layers()[1].weights.cols() == 7);
  CHECK(enc.layers()[1].activation == Activation::relu);
  CHECK(enc.layers()[2].weights.rows() == 4);
  CHECK(enc.layers()[2].weights.cols() == 5);
  CHECK(enc.layers()[2].activation == Activation::linear);
  for (const Layer& layer : enc.layers()) {
    for (double b : layer.biases) CHECK(b == 0.01);
  }

  SeededRng rng2(5);
  MlpEncoder enc2 = MlpEncoder::make(9, hidden, 4, rng2);
  CHECK(enc.layers()[0].weights == enc2.layers()[0].weights);
  CHECK(enc.layers()[2].weights == enc2.layers()[2].weights);
}

TEST_CASE("weight scale tracks 1/sqrt(fan_in)") {
  SeededRng rng(6);
  MlpEncoder enc = MlpEncoder::make(100, {}, 50, rng);
  const Matrix& w = enc.layers()[0].weights;
  double sumsq = 0.0;
  for (std::size_t r = 0; r < w.rows(); ++r) {
    for (std::size_t c = 0; c < w.cols(); ++c) sumsq += w(r, c) * w(r, c);
  }
  const double var = sumsq / (w.rows() * w.cols());
  CHECK(var == doctest::Approx(1.0 / 100.0).epsilon(0.15));
}

TEST_CASE("an identity linear layer reduces forward to l2 normalization") {
  Layer layer;
  layer.weights = Matrix(2, 2);
  layer.weights(0, 0) = 1.0;
  layer.weights(1, 1) = 1.0;
  layer.biases = Vec{0.0, 0.0};
  layer.activation = Activation::linear;
  MlpEncoder enc({layer});

  Vec x{3.0, 4.0};
  ForwardCache cache = enc.forward(x);
  CHECK(cache.output == l2_normalize(x));
  CHECK(cache.pre_norm == norm2(x));
  CHECK(cache.input == x);
  REQUIRE(cache.pre_activations.size() == 1);
  CHECK(cache.pre_activations[0] == x);
  CHECK(cache.activations[0] == x);
}

TEST_CASE("relu zeroes negative pre-activations in the cache") {
  Layer hidden;
  hidden.weights = Matrix(2, 1);
  hidden.weights(0, 0) = 1.0;
  hidden.weights(1, 0) = -1.0;
  hidden.biases = Vec{0.0, 0.0};
  hidden.activation = Activation::relu;
  Layer out;
  out.weights = Matrix(2, 2);
  out.weights(0, 0) = 1.0;
  out.weights(1, 1) = 1.0;
  out.biases = Vec{0.0, 0.0};
  out.activation = Activation::linear;
  MlpEncoder enc({hidden, out});

  ForwardCache cache = enc.forward(Vec{2.0});
  CHECK(cache.pre_activations[0] == Vec{2.0, -2.0});
  CHECK(cache.activations[0] == Vec{2.0, 0.0});
  CHECK(cache.output == Vec{1.0, 0.0});
}

TEST_CASE("forward output is always unit-norm") {
  SeededRng rng(11);
  std::vector<std::size_t> hidden{6};
  MlpEncoder enc = MlpEncoder::make(4, hidden, 3, rng);
  for (int i = 0; i < 50; ++i) {
    Vec x(4);
    for (auto& e : x) e = rng.next_normal();
    ForwardCache cache = enc.forward(x);
    CHECK(std::abs(norm2(cache.output) - 1.0) < 1e-12);
  }
}

TEST_CASE("forward rejects a collapsed pre-normalization output") {
  Layer layer;
  layer.weights = Matrix(2, 2);  // all zero
  layer.biases = Vec{0.0, 0.0};
  layer.activation = Activation::linear;
  MlpEncoder enc({layer});
  CHECK_THROWS_AS(enc.forward(Vec{1.0, 2.0}), NormTooSmall);
}

TEST_CASE("forward validates the input length") {
  SeededRng rng(12);
  MlpEncoder enc = MlpEncoder::make(4, {}, 3, rng);
  CHECK_THROWS_AS(enc.forward(Vec{1.0, 2.0}), DimensionMismatch);
}

TEST_CASE("backward matches central finite differences over the parameters") {
  SeededRng rng(17);
  for (int net = 0; net < 10; ++net) {
    const std::size_t d_in = 2 + rng.next_below(4);
    const std::size_t d_hidden = 2 + rng.next_below(4);
    const std::size_t d_out = 2 + rng.next_below(3);
    SeededRng net_rng = rng.child(net + 1);
    std::vector<std::size_t> hidden{d_hidden};
    MlpEncoder enc = MlpEncoder::make(d_in, hidden, d_out, net_rng);

    Vec x(d_in), g(d_out);
    for (auto& e : x) e = rng.next_normal();
    for (auto& e : g) e = rng.next_normal();

    ForwardCache cache = enc.forward(x);
    ParamGrads grads = enc.backward(cache, g);

    auto analytic_views = MlpEncoder::grad_views(grads);
    auto param_views = enc.parameter_views();
    REQUIRE(analytic_views.size() == param_views.size());

    const double h = 1e-5;
    Vec analytic_all, fd_all;
    for (std::size_t blk = 0; blk < param_views.size(); ++blk) {
      for (std::size_t i = 0; i < param_views[blk].size(); ++i) {
        const double saved = param_views[blk][i];
        param_views[blk][i] = saved + h;
        const double up = probe(enc, x, g);
        param_views[blk][i] = saved - h;
        const double down = probe(enc, x, g);
        param_views[blk][i] = saved;
        analytic_all.push_back(analytic_views[blk][i]);
        fd_all.push_back((up - down) / (2.0 * h));
      }
    }
    CHECK(rel_error(analytic_all, fd_all) < 1e-5);
  }
}

TEST_CASE("normalization backprop is orthogonal to the output direction") {
  // for the identity net, dL/dx = (g - v (v.g)) / ||x||; check directly
  Layer layer;
  layer.weights = Matrix(3, 3);
  for (std::size_t i = 0; i < 3; ++i) layer.weights(i, i) = 1.0;
  layer.biases = Vec{0.0, 0.0, 0.0};
  layer.activation = Activation::linear;
  MlpEncoder enc({layer});

  Vec x{1.0, 2.0, 2.0};  // norm 3
  Vec g{0.5, -1.0, 0.25};
  ForwardCache cache = enc.forward(x);
  ParamGrads grads = enc.backward(cache, g);

  // weight gradient row i col j = dL/du_i * x_j with dL/du as documented
  Vec v = cache.output;
  const double vg = dot(v, g);
  Vec dl_du(3);
  for (std::size_t i = 0; i < 3; ++i) dl_du[i] = (g[i] - v[i] * vg) / 3.0;
  CHECK(dot(dl_du, v) == doctest::Approx(0.0).epsilon(1e-15));
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(grads.biases[0][i] == doctest::Approx(dl_du[i]).epsilon(1e-12));
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(grads.weights[0](i, j) == doctest::Approx(dl_du[i] * x[j]).epsilon(1e-12));
    }
  }
}

TEST_CASE("grads align with parameter views block for block") {
  SeededRng rng(23);
  std::vector<std::size_t> hidden{5};
  MlpEncoder enc = MlpEncoder::make(3, hidden, 2, rng);
  ParamGrads zeros = enc.zero_grads();
  auto gv = MlpEncoder::grad_views(zeros);
  auto pv = enc.parameter_views();
  REQUIRE(gv.size() == pv.size());
  for (std::size_t b = 0; b < gv.size(); ++b) CHECK(gv[b].size() == pv[b].size());
  for (auto block : gv) {
    for (double e : block) CHECK(e == 0.0);
  }
}

TEST_CASE("ParamGrads add and scale are elementwise") {
  SeededRng rng(29);
  MlpEncoder enc = MlpEncoder::make(3, {}, 2, rng);
  Vec x{1.0, -0.5, 2.0};
  Vec g{0.3, 0.7};
  ForwardCache cache = enc.forward(x);
  ParamGrads a = enc.backward(cache, g);
  ParamGrads b = enc.backward(cache, g);
  b.add(a);
  b.scale(0.5);
  auto av = MlpEncoder::grad_views(a);
  auto bv = MlpEncoder::grad_views(b);
  for (std::size_t blk = 0; blk < av.size(); ++blk) {
    for (std::size_t i = 0; i < av[blk].size(); ++i) {
      CHECK(bv[blk][i] == doctest::Approx(av[blk][i]).epsilon(1e-15));
    }
  }
}
