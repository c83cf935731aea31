#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "pixbis/graph.hpp"
#include "pixbis/ops.hpp"
#include "pixbis/rng.hpp"

using namespace pixbis;

namespace {

TensorPtr<float> randf(Shape shape, Rng& rng, bool rg = false) {
  auto t = make_tensor<float>(std::move(shape), rg);
  for (auto& v : t->values) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  return t;
}

// Counts valid window placements directly instead of using the closed form.
int count_windows(int extent, int k, int stride, int pad) {
  int count = 0;
  for (int start = -pad; start + k <= extent + pad; start += stride) ++count;
  return count;
}

}  // namespace

TEST_CASE("conv2d identity-diagonal kernel") {
  Graph g;
  auto input = make_tensor<float>({1, 1, 2, 2}, {1, 2, 3, 4});
  auto weight = make_tensor<float>({1, 1, 2, 2}, {1, 0, 0, 1});
  auto out = conv2d(g, input, weight, nullptr, 1, 0);
  REQUIRE(out->shape == Shape{1, 1, 1, 1});
  CHECK(out->values[0] == doctest::Approx(5.0f));
}

TEST_CASE("conv2d rejects channel mismatch and bad stride") {
  Graph g;
  auto input = make_tensor<float>({1, 2, 4, 4});
  auto weight = make_tensor<float>({1, 3, 3, 3});
  CHECK_THROWS_AS(conv2d(g, input, weight, nullptr, 1, 0), std::invalid_argument);
  auto ok_weight = make_tensor<float>({1, 2, 3, 3});
  CHECK_THROWS_AS(conv2d(g, input, ok_weight, nullptr, 0, 0), std::invalid_argument);
  CHECK_THROWS_AS(conv2d(g, input, ok_weight, nullptr, -1, 0), std::invalid_argument);
  auto big_weight = make_tensor<float>({1, 2, 5, 5});
  CHECK_THROWS_AS(conv2d(g, input, big_weight, nullptr, 1, 0), std::invalid_argument);
}

TEST_CASE("conv2d output shape matches the window-count oracle") {
  Rng rng(41);
  for (int trial = 0; trial < 60; ++trial) {
    const int h = 1 + static_cast<int>(rng.uniform_int(12));
    const int w = 1 + static_cast<int>(rng.uniform_int(12));
    const int k = 1 + static_cast<int>(rng.uniform_int(4));
    const int stride = 1 + static_cast<int>(rng.uniform_int(3));
    const int pad = static_cast<int>(rng.uniform_int(3));
    if (h + 2 * pad < k || w + 2 * pad < k) continue;
    Graph g;
    auto input = randf({1, 1, h, w}, rng);
    auto weight = randf({2, 1, k, k}, rng);
    auto out = conv2d(g, input, weight, nullptr, stride, pad);
    CHECK(out->shape[2] == count_windows(h, k, stride, pad));
    CHECK(out->shape[3] == count_windows(w, k, stride, pad));
  }
}

TEST_CASE("pool2d shape law matches the window-count oracle") {
  Rng rng(42);
  for (int trial = 0; trial < 60; ++trial) {
    const int h = 1 + static_cast<int>(rng.uniform_int(12));
    const int w = 1 + static_cast<int>(rng.uniform_int(12));
    const int k = 1 + static_cast<int>(rng.uniform_int(4));
    const int stride = 1 + static_cast<int>(rng.uniform_int(3));
    const int pad = static_cast<int>(rng.uniform_int(static_cast<uint64_t>(k)));
    if (h + 2 * pad < k || w + 2 * pad < k) continue;
    Graph g;
    auto input = randf({1, 1, h, w}, rng);
    auto out = pool2d(g, input, trial % 2 ? PoolKind::kMax : PoolKind::kAvg, k, stride, pad);
    CHECK(out->shape[2] == count_windows(h, k, stride, pad));
    CHECK(out->shape[3] == count_windows(w, k, stride, pad));
  }
}

TEST_CASE("pool2d basics") {
  Graph g;
  auto input = make_tensor<float>({1, 1, 2, 2}, {1, 2, 3, 4});
  auto avg = pool2d(g, input, PoolKind::kAvg, 2, 1, 0);
  CHECK(avg->values[0] == doctest::Approx(2.5f));
  auto mx = pool2d(g, input, PoolKind::kMax, 2, 1, 0);
  CHECK(mx->values[0] == doctest::Approx(4.0f));
  CHECK_THROWS_AS(pool2d(g, input, PoolKind::kMax, 5, 1, 0), std::invalid_argument);
}

TEST_CASE("max-pool ties route gradient to the first cell in scan order") {
  Graph g;
  auto input = make_tensor<float>({1, 1, 2, 2}, std::vector<float>{7, 7, 7, 7}, true);
  auto out = pool2d(g, input, PoolKind::kMax, 2, 1, 0);
  auto loss = sum(g, out);
  g.backward(loss);
  CHECK(input->grad[0] == doctest::Approx(1.0f));
  CHECK(input->grad[1] == doctest::Approx(0.0f));
  CHECK(input->grad[2] == doctest::Approx(0.0f));
  CHECK(input->grad[3] == doctest::Approx(0.0f));
}

TEST_CASE("activation ranges") {
  Graph g;
  auto input = make_tensor<float>({3}, {-3.0f, 0.0f, 3.0f});
  auto r = relu(g, input);
  CHECK(r->values[0] == 0.0f);
  CHECK(r->values[1] == 0.0f);
  CHECK(r->values[2] == 3.0f);
  auto s = sigmoid(g, input);
  CHECK(s->values[1] == doctest::Approx(0.5f));

  Rng rng(7);
  auto x = randf({64}, rng);
  for (auto& v : x->values) v *= 8.0f;
  auto sr = sigmoid(g, x);
  auto rr = relu(g, x);
  for (int i = 0; i < 64; ++i) {
    CHECK(sr->values[i] > 0.0f);
    CHECK(sr->values[i] < 1.0f);
    CHECK(rr->values[i] >= 0.0f);
  }
}

TEST_CASE("relu gradient is zero at exactly zero") {
  Graph g;
  auto input = make_tensor<float>({1}, std::vector<float>{0.0f}, true);
  auto loss = sum(g, relu(g, input));
  g.backward(loss);
  CHECK(input->grad[0] == 0.0f);
}

TEST_CASE("concat then slice recovers the inputs") {
  Rng rng(11);
  auto a = randf({2, 1, 3, 3}, rng);
  auto b = randf({2, 2, 3, 3}, rng);
  Graph g;
  auto cat = concat_channels(g, {a, b});
  REQUIRE(cat->shape == Shape{2, 3, 3, 3});
  const int64_t plane = 9;
  for (int s = 0; s < 2; ++s) {
    for (int64_t i = 0; i < plane; ++i) {
      CHECK(cat->values[(s * 3 + 0) * plane + i] == a->values[(s * 1 + 0) * plane + i]);
      CHECK(cat->values[(s * 3 + 1) * plane + i] == b->values[(s * 2 + 0) * plane + i]);
      CHECK(cat->values[(s * 3 + 2) * plane + i] == b->values[(s * 2 + 1) * plane + i]);
    }
  }
  auto single = concat_channels(g, {a});
  CHECK(single->values == a->values);

  auto bad = randf({2, 1, 4, 3}, rng);
  CHECK_THROWS_AS(concat_channels(g, {a, bad}), std::invalid_argument);
}

TEST_CASE("concat backward splits the gradient by channel range") {
  Rng rng(12);
  auto a = randf({1, 2, 2, 2}, rng, true);
  auto b = randf({1, 1, 2, 2}, rng, true);
  Graph g;
  auto loss = sum(g, concat_channels(g, {a, b}));
  g.backward(loss);
  for (float v : a->grad) CHECK(v == doctest::Approx(1.0f));
  for (float v : b->grad) CHECK(v == doctest::Approx(1.0f));
}

TEST_CASE("affine basics") {
  Graph g;
  auto input = make_tensor<float>({1, 2}, {1, 2});
  auto weight = make_tensor<float>({2, 1}, {3, 4});
  auto bias = make_tensor<float>({1}, {0});
  auto out = affine(g, input, weight, bias);
  CHECK(out->values[0] == doctest::Approx(11.0f));

  auto zero_w = make_tensor<float>({2, 1}, {0, 0});
  auto b5 = make_tensor<float>({1}, std::vector<float>{5.0f});
  CHECK(affine(g, input, zero_w, b5)->values[0] == doctest::Approx(5.0f));

  auto wrong = make_tensor<float>({3, 1});
  CHECK_THROWS_AS(affine(g, input, wrong, bias), std::invalid_argument);
}

TEST_CASE("backward populates expected gradients for sum and product") {
  {
    Graph g;
    auto x = make_tensor<float>({3}, {1, 2, 3}, true);
    auto loss = sum(g, x);
    g.backward(loss);
    for (float v : x->grad) CHECK(v == doctest::Approx(1.0f));
  }
  {
    Graph g;
    auto x = make_tensor<float>({2}, {1, 2}, true);
    auto loss = sum(g, mul(g, x, x));
    g.backward(loss);
    CHECK(x->grad[0] == doctest::Approx(2.0f));
    CHECK(x->grad[1] == doctest::Approx(4.0f));
  }
}

TEST_CASE("backward rejects non-scalar or foreign losses") {
  Graph g;
  auto x = make_tensor<float>({2}, {1, 2}, true);
  auto y = mul(g, x, x);
  CHECK_THROWS_AS(g.backward(y), std::invalid_argument);
  auto foreign = make_tensor<float>({1}, std::vector<float>{3.0f}, true);
  CHECK_THROWS_AS(g.backward(foreign), std::invalid_argument);
}

TEST_CASE("backward never touches tensors outside the graph") {
  Graph g;
  auto x = make_tensor<float>({2}, {1, 2}, true);
  auto outside = make_tensor<float>({2}, {5, 6}, true);
  outside->grad = {123.0f, 456.0f};
  auto loss = sum(g, mul(g, x, x));
  g.backward(loss);
  CHECK(outside->grad[0] == 123.0f);
  CHECK(outside->grad[1] == 456.0f);
}

TEST_CASE("gradients are zeroed per backward sweep, not accumulated") {
  auto x = make_tensor<float>({2}, {1, 2}, true);
  for (int pass = 0; pass < 2; ++pass) {
    Graph g;
    auto loss = sum(g, mul(g, x, x));
    g.backward(loss);
  }
  CHECK(x->grad[0] == doctest::Approx(2.0f));
  CHECK(x->grad[1] == doctest::Approx(4.0f));
}

TEST_CASE("batchnorm constant input maps to beta") {
  Graph g;
  auto input = make_tensor<float>({2, 1, 2, 2}, std::vector<float>(8, 3.25f));
  auto gamma = make_tensor<float>({1}, std::vector<float>{1.0f});
  auto beta = make_tensor<float>({1}, std::vector<float>{0.0f});
  auto rm = make_tensor<float>({1});
  auto rv = make_tensor<float>({1}, std::vector<float>{1.0f});
  auto out = batchnorm2d<float>(g, input, gamma, beta, rm, rv, true, 1e-5f, 0.1f);
  for (float v : out->values) CHECK(v == doctest::Approx(0.0f));

  auto gamma0 = make_tensor<float>({1}, std::vector<float>{0.0f});
  auto beta7 = make_tensor<float>({1}, std::vector<float>{7.0f});
  Rng rng(3);
  auto noisy = randf({2, 1, 2, 2}, rng);
  auto out2 = batchnorm2d<float>(g, noisy, gamma0, beta7, rm, rv, true, 1e-5f, 0.1f);
  for (float v : out2->values) CHECK(v == doctest::Approx(7.0f));
}

TEST_CASE("batchnorm eval before any update uses the initialized stats") {
  Graph g;
  auto input = make_tensor<float>({1, 1, 1, 2}, {1.0f, -1.0f});
  auto gamma = make_tensor<float>({1}, std::vector<float>{1.0f});
  auto beta = make_tensor<float>({1}, std::vector<float>{0.0f});
  auto rm = make_tensor<float>({1});            // mean 0
  auto rv = make_tensor<float>({1}, std::vector<float>{1.0f});       // var 1
  auto out = batchnorm2d<float>(g, input, gamma, beta, rm, rv, false, 1e-5f, 0.1f);
  CHECK(out->values[0] == doctest::Approx(1.0f).epsilon(1e-4));
  CHECK(out->values[1] == doctest::Approx(-1.0f).epsilon(1e-4));
}
