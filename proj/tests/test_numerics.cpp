#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "mnemoseq/kernels.hpp"
#include "mnemoseq/matrix.hpp"
#include "mnemoseq/rng.hpp"

using namespace mnemoseq;
using Catch::Matchers::WithinAbs;

namespace {
Vec<double> vec(std::initializer_list<double> xs) {
  Vec<double> v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}
}  // namespace

TEST_CASE("activation fixed points") {
  Mat<double> z(1, 1);
  z(0, 0) = 0.0;
  CHECK(activation_apply(z, Activation::kSigmoid)(0, 0) == 0.5);
  CHECK(activation_apply(z, Activation::kTanh)(0, 0) == 0.0);
}

TEST_CASE("sigmoid at 2 matches closed form") {
  // 1/(1+e^-2) = 0.8807970779...
  Mat<double> x(1, 1);
  x(0, 0) = 2.0;
  CHECK_THAT(activation_apply(x, Activation::kSigmoid)(0, 0),
             WithinAbs(0.880797, 1e-6));
}

TEST_CASE("sigmoid saturates without overflow") {
  Mat<double> x(1, 2);
  x(0, 0) = 1000.0;
  x(0, 1) = -1000.0;
  Mat<double> y = activation_apply(x, Activation::kSigmoid);
  CHECK(y(0, 0) == 1.0);
  CHECK(y(0, 1) == 0.0);
  CHECK(all_finite(y));
}

TEST_CASE("activation rejects non-finite input") {
  Mat<double> x(1, 1);
  x(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(activation_apply(x, Activation::kSigmoid), std::domain_error);
  x(0, 0) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(activation_apply(x, Activation::kTanh), std::domain_error);
}

TEST_CASE("softmax of equal scores is uniform") {
  Vec<double> p = softmax(vec({0.0, 0.0}));
  CHECK_THAT(p[0], WithinAbs(0.5, 1e-15));
  CHECK_THAT(p[1], WithinAbs(0.5, 1e-15));
}

TEST_CASE("softmax matches hand-computed ratio") {
  Vec<double> p = softmax(vec({0.0, std::log(3.0)}));
  CHECK_THAT(p[0], WithinAbs(0.25, 1e-12));
  CHECK_THAT(p[1], WithinAbs(0.75, 1e-12));
}

TEST_CASE("softmax is shift-stable at large magnitudes") {
  Vec<double> p = softmax(vec({1000.0, 1000.0}));
  REQUIRE(all_finite(p));
  CHECK_THAT(p[0], WithinAbs(0.5, 1e-12));
  CHECK_THAT(p[1], WithinAbs(0.5, 1e-12));
}

TEST_CASE("softmax rejects empty input") {
  Vec<double> empty(0);
  CHECK_THROWS_AS(softmax(empty), std::invalid_argument);
  CHECK_THROWS_AS(log_softmax(empty), std::invalid_argument);
}

TEST_CASE("softmax sums to one across sizes") {
  Rng rng(7);
  for (int n : {1, 2, 17, 256, 10000}) {
    Vec<double> s(n);
    for (int i = 0; i < n; ++i) s[i] = rng.uniform(-30.0, 30.0);
    Vec<double> p = softmax(s);
    CHECK_THAT(p.sum(), WithinAbs(1.0, 1e-12));
    CHECK(p.minCoeff() >= 0.0);
  }
}

TEST_CASE("log_softmax agrees with log of softmax") {
  Rng rng(11);
  Vec<double> s(40);
  for (int i = 0; i < 40; ++i) s[i] = rng.uniform(-5.0, 5.0);
  Vec<double> lp = log_softmax(s);
  Vec<double> p = softmax(s);
  for (int i = 0; i < 40; ++i) CHECK_THAT(lp[i], WithinAbs(std::log(p[i]), 1e-12));
  // normalized in probability space
  CHECK_THAT(lp.array().exp().sum(), WithinAbs(1.0, 1e-12));
}

TEST_CASE("sigmoid symmetry") {
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    Mat<double> v(1, 1);
    v(0, 0) = rng.uniform(-20.0, 20.0);
    Mat<double> neg = -v;
    double a = activation_apply(v, Activation::kSigmoid)(0, 0);
    double b = activation_apply(neg, Activation::kSigmoid)(0, 0);
    CHECK_THAT(a + b, WithinAbs(1.0, 1e-12));
  }
}

TEST_CASE("maxout over pairs") {
  std::vector<int> pick;
  Vec<double> out = maxout_pairs(vec({1.0, -2.0, 3.0, 4.0}), &pick);
  REQUIRE(out.size() == 2);
  CHECK(out[0] == 1.0);
  CHECK(out[1] == 4.0);
  CHECK(pick == std::vector<int>({0, 1}));
}

TEST_CASE("maxout rejects odd length") {
  CHECK_THROWS_AS(maxout_pairs(vec({1.0, 2.0, 3.0})), std::invalid_argument);
}

TEST_CASE("maxout dominates both pair elements") {
  Rng rng(5);
  Vec<double> x(64);
  for (int i = 0; i < 64; ++i) x[i] = rng.uniform(-10.0, 10.0);
  Vec<double> out = maxout_pairs(x);
  for (int k = 0; k < 32; ++k) {
    CHECK(out[k] >= x[2 * k]);
    CHECK(out[k] >= x[2 * k + 1]);
  }
}

TEST_CASE("numeric gradient of a quadratic") {
  auto f = [](const Mat<double>& m) { return m.array().square().sum(); };
  Mat<double> x(1, 1);
  x(0, 0) = 3.0;
  Mat<double> g = numeric_gradient(f, x, 1e-5);
  CHECK_THAT(g(0, 0), WithinAbs(6.0, 1e-6));
}

TEST_CASE("numeric gradient of a constant is zero") {
  auto f = [](const Mat<double>&) { return 42.0; };
  Mat<double> x = Mat<double>::Random(3, 2);
  Mat<double> g = numeric_gradient(f, x, 1e-5);
  CHECK(g.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("numeric gradient recovers sigmoid slope") {
  auto f = [](const Mat<double>& m) { return sigmoid_scalar(m(0, 0)); };
  Mat<double> x(1, 1);
  x(0, 0) = 0.0;
  Mat<double> g = numeric_gradient(f, x, 1e-5);
  CHECK_THAT(g(0, 0), WithinAbs(0.25, 1e-8));
}

TEST_CASE("numeric gradient leaves its argument untouched") {
  Mat<double> x(2, 2);
  x << 1, 2, 3, 4;
  Mat<double> before = x;
  auto f = [](const Mat<double>& m) { return m.sum(); };
  numeric_gradient(f, x, 1e-4);
  CHECK(x == before);
}

TEST_CASE("numeric gradient rejects non-positive epsilon") {
  auto f = [](const Mat<double>& m) { return m.sum(); };
  Mat<double> x(1, 1);
  x(0, 0) = 1.0;
  CHECK_THROWS_AS(numeric_gradient(f, x, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(numeric_gradient(f, x, -1e-5), std::invalid_argument);
}

TEST_CASE("matrix product is associative in double precision") {
  Rng rng(13);
  Mat<double> a(16, 16), b(16, 16), c(16, 16);
  rng.fill_uniform(a, -1.0, 1.0);
  rng.fill_uniform(b, -1.0, 1.0);
  rng.fill_uniform(c, -1.0, 1.0);
  Mat<double> left = (a * b) * c;
  Mat<double> right = a * (b * c);
  CHECK((left - right).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("relative error uses an absolute floor") {
  CHECK(rel_error(0.0, 0.0) == 0.0);
  CHECK_THAT(rel_error(1e-9, 0.0), WithinAbs(1e-3, 1e-9));  // floored at 1e-6
  CHECK_THAT(rel_error(2.0, 1.0), WithinAbs(0.5, 1e-12));
}

TEST_CASE("rng streams are reproducible") {
  Rng a(123), b(123), c(124);
  bool all_equal = true, any_diff = false;
  for (int i = 0; i < 64; ++i) {
    double x = a.next_double(), y = b.next_double(), z = c.next_double();
    all_equal = all_equal && (x == y);
    any_diff = any_diff || (x != z);
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
  }
  CHECK(all_equal);
  CHECK(any_diff);
}

TEST_CASE("rng uniform respects bounds") {
  Rng rng(9);
  for (int i = 0; i < 1000; ++i) {
    double v = rng.uniform(-0.08, 0.08);
    CHECK(v >= -0.08);
    CHECK(v < 0.08);
  }
}

TEST_CASE("shuffle is a permutation and seed-stable") {
  std::vector<int> base(50);
  std::iota(base.begin(), base.end(), 0);

  std::vector<int> s1 = base, s2 = base;
  Rng(77).shuffle(s1.begin(), s1.end());
  Rng(77).shuffle(s2.begin(), s2.end());
  CHECK(s1 == s2);
  CHECK(s1 != base);  // 50 elements: identity shuffle would be astonishing

  std::vector<int> sorted = s1;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == base);
}

TEST_CASE("seed mixing separates nearby seeds") {
  CHECK(mix_seed(1) != mix_seed(2));
  CHECK(mix_seed(0, 1) != mix_seed(1, 0));
  CHECK(mix_seed(5, 7) != mix_seed(5, 8));
}

TEST_CASE("fill_uniform is deterministic and in range") {
  Mat<float> m1(4, 5), m2(4, 5);
  Rng(42).fill_uniform(m1, -0.08, 0.08);
  Rng(42).fill_uniform(m2, -0.08, 0.08);
  CHECK(m1 == m2);
  CHECK(m1.minCoeff() >= -0.08f);
  CHECK(m1.maxCoeff() <= 0.08f);
}
