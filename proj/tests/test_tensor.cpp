#include <doctest.h>

#include <cmath>
#include <vector>

#include "okannet/rng.hpp"
#include "okannet/tensor.hpp"
#include "support/testutil.hpp"

using namespace okannet;
using testutil::make_tensor;

namespace {

// Independent triple-loop reference in double precision.
template <typename T>
std::vector<double> matmul_reference(const TensorT<T>& a,
                                     const TensorT<T>& b) {
  const int64_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  std::vector<double> c(static_cast<size_t>(m * n), 0.0);
  for (int64_t i = 0; i < m; ++i)
    for (int64_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int64_t kk = 0; kk < k; ++kk)
        acc += static_cast<double>(a[i * k + kk]) *
               static_cast<double>(b[kk * n + j]);
      c[static_cast<size_t>(i * n + j)] = acc;
    }
  return c;
}

Tensor random_tensor(const Shape& shape, uint64_t seed, double lo = -1.0,
                     double hi = 1.0) {
  Tensor t(shape);
  RandomEngine rng(seed);
  for (int64_t i = 0; i < t.size(); ++i)
    t[i] = static_cast<float>(rng.uniform(lo, hi));
  return t;
}

// Values on a 1/256 lattice stay exactly representable under addition of
// lattice constants, so float rounding cannot merge distinct values.
Tensor lattice_tensor(const Shape& shape, uint64_t seed) {
  Tensor t(shape);
  RandomEngine rng(seed);
  for (int64_t i = 0; i < t.size(); ++i)
    t[i] = static_cast<float>(rng.uniform_int(513) - 256) / 256.0f;
  return t;
}

Tensor center_crop2d(const Tensor& x, int64_t pad) {
  const int r = x.shape().rank();
  const int64_t h = x.shape()[r - 2] - 2 * pad;
  const int64_t w = x.shape()[r - 1] - 2 * pad;
  std::vector<int64_t> dims = x.shape().dims();
  dims[static_cast<size_t>(r - 2)] = h;
  dims[static_cast<size_t>(r - 1)] = w;
  Tensor out{Shape{dims}};
  const int64_t outer = out.shape().numel() / (h * w);
  const int64_t hp = h + 2 * pad, wp = w + 2 * pad;
  for (int64_t o = 0; o < outer; ++o)
    for (int64_t i = 0; i < h; ++i)
      for (int64_t j = 0; j < w; ++j)
        out[(o * h + i) * w + j] = x[(o * hp + i + pad) * wp + j + pad];
  return out;
}

}  // namespace

TEST_CASE("tensor_new fills and shapes") {
  const Tensor t = tensor_new<float>(Shape{2, 3}, 1.0f);
  CHECK(t.shape() == Shape{2, 3});
  CHECK(t.size() == 6);
  for (int64_t i = 0; i < t.size(); ++i) CHECK(t[i] == 1.0f);
}

TEST_CASE("tensor_new rejects non-positive dims") {
  CHECK_THROWS_AS(tensor_new<float>(Shape{0, 2}), ShapeError);
  CHECK_THROWS_AS(tensor_new<float>(Shape{3, -1}), ShapeError);
  CHECK_THROWS_AS(tensor_new<float>(Shape{}), ShapeError);
}

TEST_CASE("shape rejects element count overflow") {
  CHECK_THROWS_AS(Shape({int64_t{1} << 32, int64_t{1} << 32}), ShapeError);
}

TEST_CASE("elementwise add/sub/mul against scalar loops") {
  const Tensor a = random_tensor(Shape{3, 4, 5}, 11);
  const Tensor b = random_tensor(Shape{3, 4, 5}, 22);
  const Tensor s = add(a, b);
  const Tensor d = sub(a, b);
  const Tensor p = mul(a, b);
  for (int64_t i = 0; i < a.size(); ++i) {
    CHECK(s[i] == a[i] + b[i]);
    CHECK(d[i] == a[i] - b[i]);
    CHECK(p[i] == a[i] * b[i]);
  }
}

TEST_CASE("elementwise shape mismatch throws") {
  const Tensor a(Shape{2, 3});
  const Tensor b(Shape{3, 2});
  CHECK_THROWS_AS(add(a, b), ShapeError);
}

TEST_CASE("add is associative within 1e-6 relative tolerance") {
  for (uint64_t seed = 0; seed < 5; ++seed) {
    const Tensor a = random_tensor(Shape{64, 64}, 100 + seed);
    const Tensor b = random_tensor(Shape{64, 64}, 200 + seed);
    const Tensor c = random_tensor(Shape{64, 64}, 300 + seed);
    const Tensor lhs = add(add(a, b), c);
    const Tensor rhs = add(a, add(b, c));
    for (int64_t i = 0; i < lhs.size(); ++i) {
      const double x = lhs[i], y = rhs[i];
      const double rel =
          std::fabs(x - y) / std::max({1.0, std::fabs(x), std::fabs(y)});
      CHECK(rel <= 1e-6);
    }
  }
}

TEST_CASE("matmul 2x3 * 3x2 known result") {
  // [[1,2,3],[4,5,6]] . [[7,8],[9,10],[11,12]] = [[58,64],[139,154]]
  const Tensor a = make_tensor<float>(Shape{2, 3}, {1, 2, 3, 4, 5, 6});
  const Tensor b = make_tensor<float>(Shape{3, 2}, {7, 8, 9, 10, 11, 12});
  const Tensor c = matmul(a, b);
  CHECK(c.shape() == Shape{2, 2});
  CHECK(c[0] == 58.0f);
  CHECK(c[1] == 64.0f);
  CHECK(c[2] == 139.0f);
  CHECK(c[3] == 154.0f);
}

TEST_CASE("matmul matches the reference on random 64x64") {
  for (uint64_t seed = 0; seed < 4; ++seed) {
    const Tensor a = random_tensor(Shape{64, 64}, 1000 + seed);
    const Tensor b = random_tensor(Shape{64, 64}, 2000 + seed);
    const Tensor c = matmul(a, b);
    const std::vector<double> ref = matmul_reference(a, b);
    for (int64_t i = 0; i < c.size(); ++i) {
      const double got = c[i], want = ref[static_cast<size_t>(i)];
      const double rel = std::fabs(got - want) /
                         std::max({1.0, std::fabs(got), std::fabs(want)});
      CHECK(rel <= 1e-5);
    }
  }
}

TEST_CASE("matmul inner dim mismatch throws") {
  const Tensor a(Shape{2, 3});
  const Tensor b(Shape{4, 2});
  CHECK_THROWS_AS(matmul(a, b), ShapeError);
  CHECK_THROWS_AS(matmul(a, Tensor(Shape{3})), ShapeError);
}

TEST_CASE("pad2d puts zeros in the border") {
  const Tensor x = make_tensor<float>(Shape{1, 2, 2}, {1, 2, 3, 4});
  const Tensor p = pad2d(x, 1);
  CHECK(p.shape() == Shape{1, 4, 4});
  const std::vector<float> want = {0, 0, 0, 0, 0, 1, 2, 0,
                                   0, 3, 4, 0, 0, 0, 0, 0};
  for (int64_t i = 0; i < p.size(); ++i)
    CHECK(p[i] == want[static_cast<size_t>(i)]);
}

TEST_CASE("pad2d then center crop is the identity") {
  for (int64_t pad : {1, 2, 3}) {
    const Tensor x = random_tensor(Shape{2, 3, 5, 4}, 77 + pad);
    const Tensor back = center_crop2d(pad2d(x, pad), pad);
    CHECK(back == x);
  }
}

TEST_CASE("pad2d rejects negative pad and bad rank") {
  const Tensor x(Shape{1, 2, 2});
  CHECK_THROWS_AS(pad2d(x, -1), ShapeError);
  CHECK_THROWS_AS(pad2d(Tensor(Shape{2, 2}), 1), ShapeError);
}

TEST_CASE("argmax picks the first index on ties") {
  const Tensor x = make_tensor<float>(Shape{1, 4}, {3, 7, 7, 1});
  CHECK(argmax_axis(x, 1) == std::vector<int64_t>{1});
  const Tensor y = make_tensor<float>(Shape{5}, {2, 2, 2, 2, 2});
  CHECK(argmax_axis(y, 0) == std::vector<int64_t>{0});
}

TEST_CASE("argmax over a chosen axis") {
  // [[1,9],[5,2],[8,8]]: axis 0 -> col maxima rows [2,0]; axis 1 -> [1,0,0]
  const Tensor x = make_tensor<float>(Shape{3, 2}, {1, 9, 5, 2, 8, 8});
  CHECK(argmax_axis(x, 0) == std::vector<int64_t>({2, 0}));
  CHECK(argmax_axis(x, 1) == std::vector<int64_t>({1, 0, 0}));
  CHECK_THROWS_AS(argmax_axis(x, 2), ShapeError);
}

TEST_CASE("argmax invariant under constant shift and positive scale") {
  for (uint64_t seed = 0; seed < 10; ++seed) {
    const Tensor x = lattice_tensor(Shape{6, 9}, 400 + seed);
    const auto base = argmax_axis(x, 1);
    RandomEngine rng(500 + seed);
    const float c =
        static_cast<float>(rng.uniform_int(1025) - 512) / 256.0f;
    const float scale = std::ldexp(1.0f, static_cast<int>(rng.uniform_int(7)) - 3);
    Tensor shifted = x, scaled = x;
    for (int64_t i = 0; i < x.size(); ++i) {
      shifted[i] = x[i] + c;
      scaled[i] = x[i] * scale;
    }
    CHECK(argmax_axis(shifted, 1) == base);
    CHECK(argmax_axis(scaled, 1) == base);
  }
}

TEST_CASE("operations leave finite values") {
  const Tensor a = random_tensor(Shape{8, 8}, 1);
  const Tensor b = random_tensor(Shape{8, 8}, 2);
  CHECK(matmul(a, b).all_finite());
  CHECK(mul(a, b).all_finite());
  CHECK(pad2d(random_tensor(Shape{1, 3, 3}, 3), 2).all_finite());
}

TEST_CASE("reshape preserves data and rejects bad sizes") {
  const Tensor x = random_tensor(Shape{2, 6}, 9);
  const Tensor y = x.reshaped(Shape{3, 4});
  for (int64_t i = 0; i < x.size(); ++i) CHECK(x[i] == y[i]);
  CHECK_THROWS_AS(x.reshaped(Shape{5, 2}), ShapeError);
}
