#include <doctest.h>

#include "support/oracles.hpp"

using namespace nst;
using namespace nst::testing;

namespace {

ConvKernel identity_kernel(std::size_t channels) {
  ConvKernel k;
  k.out_channels = channels;
  k.in_channels = channels;
  k.weights.assign(channels * channels * 9, 0.0f);
  k.bias.assign(channels, 0.0f);
  for (std::size_t c = 0; c < channels; ++c) k.weights[((c * channels + c) * 3 + 1) * 3 + 1] = 1.0f;
  return k;
}

}  // namespace

TEST_CASE("conv2d_forward: identity kernel and bias-only cases") {
  std::mt19937_64 rng(1);
  const Tensor3f x = random_tensor_f(1, 4, 4, 1.0, rng);
  CHECK(conv2d_forward(x, identity_kernel(1)) == x);

  ConvKernel k = random_kernel(3, 2, rng);
  k.bias = {0.5f, -1.25f, 2.0f};
  const Tensor3f out = conv2d_forward(Tensor3f(2, 5, 6), k);
  for (std::size_t c = 0; c < 3; ++c) {
    for (auto v : out.plane(c)) CHECK(v == k.bias[c]);
  }
}

TEST_CASE("conv2d_forward matches the nested-loop reference on all shapes up to 4x4x8x8") {
  std::mt19937_64 rng(2);
  for (std::size_t out = 1; out <= 4; ++out) {
    for (std::size_t in = 1; in <= 4; ++in) {
      for (std::size_t h = 1; h <= 8; ++h) {
        for (std::size_t w = 1; w <= 8; ++w) {
          const ConvKernel k = random_kernel(out, in, rng);
          const Tensor3f x = random_tensor_f(in, h, w, 1.0, rng);
          const double err = max_rel_diff(conv2d_forward(x, k), conv_reference(x.cast<double>(), k));
          if (err >= 1e-5) FAIL("shape " << out << "x" << in << "x" << h << "x" << w << " err " << err);
        }
      }
    }
  }
}

TEST_CASE("conv2d_forward rejects channel mismatch") {
  std::mt19937_64 rng(3);
  CHECK_THROWS_AS(conv2d_forward(Tensor3f(2, 4, 4), random_kernel(3, 3, rng)), DimensionError);
  CHECK_THROWS_AS(conv2d_backward_input(Tensor3f(2, 4, 4), random_kernel(3, 3, rng)), DimensionError);
}

TEST_CASE("conv2d_backward_input: identity, zero, adjoint and finite differences") {
  std::mt19937_64 rng(4);
  const Tensor3f g = random_tensor_f(2, 5, 5, 1.0, rng);
  CHECK(conv2d_backward_input(g, identity_kernel(2)) == g);

  const ConvKernel k = random_kernel(3, 2, rng);
  const Tensor3f zero_grad = conv2d_backward_input(Tensor3f(3, 5, 5), k);
  CHECK(max_abs(zero_grad) == 0.0);

  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 r(100 + seed);
    ConvKernel kk = random_kernel(3, 2, r);
    kk.bias.assign(3, 0.0f);  // the adjoint identity is for the linear part
    const Tensor3d x = random_tensor(2, 7, 6, 1.0, r);
    const Tensor3d y = random_tensor(3, 7, 6, 1.0, r);
    const double lhs = dot(conv2d_forward(x, kk), y);
    const double rhs = dot(x, conv2d_backward_input(y, kk));
    CHECK(rel_error(lhs, rhs) < 1e-5);

    const Tensor3d probe = random_tensor(3, 7, 6, 1.0, r);
    auto f = [&](const Tensor3d& in) { return dot(conv2d_forward(in, kk), probe); };
    CHECK(fd_max_rel_error(f, x, conv2d_backward_input(probe, kk), all_indices(x.size()), 1e-3) < 1e-3);
  }
}

TEST_CASE("relu: trivial cases and finite differences away from the kink") {
  const Tensor3f neg(2, 3, 3, -1.5f);
  CHECK(max_abs(relu_forward(neg)) == 0.0);
  CHECK(max_abs(relu_backward(Tensor3f(2, 3, 3, 1.0f), neg)) == 0.0);
  std::mt19937_64 rng(5);
  Tensor3f pos = random_tensor_f(2, 3, 3, 1.0, rng);
  for (auto& v : pos.values()) v = std::abs(v) + 0.1f;
  CHECK(relu_forward(pos) == pos);
  const Tensor3f g = random_tensor_f(2, 3, 3, 1.0, rng);
  CHECK(relu_backward(g, pos) == g);
  CHECK_THROWS_AS(relu_backward(g, Tensor3f(2, 3, 4)), DimensionError);

  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 r(200 + seed);
    const Tensor3d x = random_tensor(2, 6, 5, 1.0, r);
    const Tensor3d probe = random_tensor(2, 6, 5, 1.0, r);
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (std::abs(x[i]) >= 1e-3) idx.push_back(i);
    }
    auto f = [&](const Tensor3d& in) { return dot(relu_forward(in), probe); };
    CHECK(fd_max_rel_error(f, x, relu_backward(probe, x), idx, 1e-5) < 1e-3);
  }
}

TEST_CASE("pool_forward: definitional cases") {
  for (auto mode : {PoolingMode::max, PoolingMode::average}) {
    const auto r = pool_forward(Tensor3f(1, 2, 2, 3.5f), mode);
    CHECK(r.output.height() == 1);
    CHECK(r.output.width() == 1);
    CHECK(r.output[0] == 3.5f);
  }
  const Tensor3f x(1, 2, 2, std::vector<float>{1, 2, 3, 4});
  CHECK(pool_forward(x, PoolingMode::max).output[0] == 4.0f);
  CHECK(pool_forward(x, PoolingMode::average).output[0] == 2.5f);
  CHECK_THROWS_AS(pool_forward(Tensor3f(), PoolingMode::max), DimensionError);
}

TEST_CASE("pool_forward matches the brute-force window scan on all shapes up to 8x8") {
  std::mt19937_64 rng(6);
  for (auto mode : {PoolingMode::max, PoolingMode::average}) {
    for (std::size_t h = 1; h <= 8; ++h) {
      for (std::size_t w = 1; w <= 8; ++w) {
        const Tensor3f x = random_tensor_f(3, h, w, 1.0, rng);
        const auto r = pool_forward(x, mode);
        CHECK(r.output.height() == (h + 1) / 2);
        CHECK(r.output.width() == (w + 1) / 2);
        CHECK(max_rel_diff(r.output, pool_reference(x.cast<double>(), mode)) < 1e-6);
      }
    }
  }
}

TEST_CASE("pool_backward: routing, adjoint and finite differences") {
  const auto avg = pool_forward(Tensor3f(1, 4, 4), PoolingMode::average);
  const Tensor3f spread = pool_backward(Tensor3f(1, 2, 2, 1.0f), avg.record);
  for (auto v : spread.values()) CHECK(v == 0.25f);

  std::mt19937_64 rng(7);
  Tensor3f uniq(2, 6, 6);
  for (std::size_t i = 0; i < uniq.size(); ++i) uniq[i] = static_cast<float>((i * 37) % 72);
  const auto mx = pool_forward(uniq, PoolingMode::max);
  const Tensor3f routed = pool_backward(Tensor3f(2, 3, 3, 1.0f), mx.record);
  for (std::size_t c = 0; c < 2; ++c) {
    for (std::size_t oy = 0; oy < 3; ++oy) {
      for (std::size_t ox = 0; ox < 3; ++ox) {
        int nonzero = 0;
        for (std::size_t y = 2 * oy; y < 2 * oy + 2; ++y) {
          for (std::size_t x = 2 * ox; x < 2 * ox + 2; ++x) nonzero += routed(c, y, x) != 0.0f;
        }
        CHECK(nonzero == 1);
      }
    }
  }
  CHECK_THROWS_AS(pool_backward(Tensor3f(2, 2, 3), mx.record), DimensionError);

  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 r(300 + seed);
    const std::size_t h = 5 + seed % 4;
    const std::size_t w = 4 + seed % 5;
    const Tensor3d x = random_tensor(3, h, w, 1.0, r);
    const auto pa = pool_forward(x, PoolingMode::average);
    const Tensor3d y = random_tensor(3, pa.output.height(), pa.output.width(), 1.0, r);
    CHECK(rel_error(dot(pa.output, y), dot(x, pool_backward(y, pa.record))) < 1e-5);

    for (auto mode : {PoolingMode::max, PoolingMode::average}) {
      Tensor3d xs = x;
      if (mode == PoolingMode::max) {
        // Distinct values 0.01 apart keep a 1e-4 step from flipping any argmax.
        std::vector<double> ladder(xs.size());
        for (std::size_t i = 0; i < ladder.size(); ++i) ladder[i] = 0.01 * static_cast<double>(i);
        std::shuffle(ladder.begin(), ladder.end(), r);
        std::copy(ladder.begin(), ladder.end(), xs.values().begin());
      }
      const auto p = pool_forward(xs, mode);
      const Tensor3d probe = random_tensor(3, p.output.height(), p.output.width(), 1.0, r);
      auto f = [&](const Tensor3d& in) { return dot(pool_forward(in, mode).output, probe); };
      CHECK(fd_max_rel_error(f, xs, pool_backward(probe, p.record), all_indices(xs.size()), 1e-4) < 1e-3);
    }
  }
}

TEST_CASE("forward ops stay finite on finite input") {
  std::mt19937_64 rng(8);
  const Tensor3f x = random_tensor_f(4, 9, 7, 1e3, rng);
  CHECK(all_finite(conv2d_forward(x, random_kernel(5, 4, rng))));
  CHECK(all_finite(relu_forward(x)));
  CHECK(all_finite(pool_forward(x, PoolingMode::max).output));
  CHECK(all_finite(pool_forward(x, PoolingMode::average).output));
}

TEST_CASE("pooling mode names") {
  CHECK(parse_pooling_mode("max") == PoolingMode::max);
  CHECK(parse_pooling_mode("avg") == PoolingMode::average);
  CHECK(parse_pooling_mode("average") == PoolingMode::average);
  CHECK(to_string(PoolingMode::average) == "avg");
  CHECK_THROWS(parse_pooling_mode("mean"));
}
