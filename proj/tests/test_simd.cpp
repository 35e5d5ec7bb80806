/*
 * Copyright 2026 The crsllm Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "crsllm/simd/kernels.hpp"

using namespace crsllm::simd;

namespace {

std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

// Tolerance relative to the magnitude of the reduction: FMA and a different
// summation order change rounding, nothing else.
void expect_close(const std::vector<double>& a, const std::vector<double>& b, double tol) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], tol * (1.0 + std::abs(a[i]))) << "index " << i;
}

class Avx2Equivalence : public ::testing::Test {
 protected:
  void SetUp() override {
    fast = avx2_kernels();
    if (fast == nullptr) GTEST_SKIP() << "no AVX2 variant on this machine";
  }
  const KernelTable& ref = scalar_kernels();
  const KernelTable* fast = nullptr;
};

}  // namespace

TEST(SimdDispatch, ActiveTableIsOneOfTheVariants) {
  const KernelTable& a = active();
  EXPECT_TRUE(&a == &scalar_kernels() || &a == avx2_kernels());
  EXPECT_EQ(scalar_kernels().isa, Isa::kScalar);
}

TEST(SimdScalar, DotMatchesHandComputation) {
  const std::vector<double> a{1, 2, 3}, b{4, -5, 6};
  EXPECT_DOUBLE_EQ(scalar_kernels().dot(a.data(), b.data(), 3), 4 - 10 + 18);
}

TEST_F(Avx2Equivalence, DotAndAxpyAcrossLengths) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    std::mt19937_64 rng(seed);
    const std::size_t n = seed % 37;  // covers the tails of every unroll width
    auto a = random_vector(rng, n), b = random_vector(rng, n);
    EXPECT_NEAR(ref.dot(a.data(), b.data(), n), fast->dot(a.data(), b.data(), n), 1e-12 * (1.0 + n));
    auto y1 = random_vector(rng, n), y2 = y1;
    ref.axpy(0.37, a.data(), y1.data(), n);
    fast->axpy(0.37, a.data(), y2.data(), n);
    expect_close(y1, y2, 1e-14);
  }
}

TEST_F(Avx2Equivalence, MatrixKernels) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(1000 + seed);
    const std::size_t rows = 1 + seed % 13, cols = 1 + (seed * 7) % 19;
    auto w = random_vector(rng, rows * cols), x = random_vector(rng, cols), g = random_vector(rng, rows);

    auto y1 = random_vector(rng, rows), y2 = y1;
    ref.gemv(w.data(), rows, cols, x.data(), y1.data());
    fast->gemv(w.data(), rows, cols, x.data(), y2.data());
    expect_close(y1, y2, 1e-12);

    auto o1 = random_vector(rng, cols), o2 = o1;
    ref.gemv_t(w.data(), rows, cols, g.data(), o1.data());
    fast->gemv_t(w.data(), rows, cols, g.data(), o2.data());
    expect_close(o1, o2, 1e-12);

    auto w1 = w, w2 = w;
    ref.ger(w1.data(), rows, cols, -0.25, g.data(), x.data());
    fast->ger(w2.data(), rows, cols, -0.25, g.data(), x.data());
    expect_close(w1, w2, 1e-14);
  }
}

TEST_F(Avx2Equivalence, AdamStep) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(5000 + seed);
    const std::size_t n = seed % 41;
    auto p1 = random_vector(rng, n), grad = random_vector(rng, n), m1 = random_vector(rng, n);
    auto v1 = random_vector(rng, n);
    for (auto& v : v1) v = std::abs(v);
    auto p2 = p1, m2 = m1, v2 = v1;
    AdamCoefficients c;
    c.learning_rate = 0.01;
    c.bias_correction1 = 1.0 - std::pow(c.beta1, 3);
    c.bias_correction2 = 1.0 - std::pow(c.beta2, 3);
    ref.adam(p1.data(), grad.data(), m1.data(), v1.data(), n, c);
    fast->adam(p2.data(), grad.data(), m2.data(), v2.data(), n, c);
    expect_close(p1, p2, 1e-13);
    expect_close(m1, m2, 1e-14);
    expect_close(v1, v2, 1e-14);
  }
}

TEST(SimdScalar, AdamMatchesClosedFormFirstStep) {
  // After one step from zero moments, the update is lr * g / (|g| + eps') = lr * sign(g).
  std::vector<double> p{1.0, -1.0}, g{0.5, -2.0}, m(2, 0.0), v(2, 0.0);
  AdamCoefficients c;
  c.learning_rate = 0.1;
  c.epsilon = 0.0;
  c.bias_correction1 = 1.0 - c.beta1;
  c.bias_correction2 = 1.0 - c.beta2;
  scalar_kernels().adam(p.data(), g.data(), m.data(), v.data(), 2, c);
  EXPECT_NEAR(p[0], 0.9, 1e-12);
  EXPECT_NEAR(p[1], -0.9, 1e-12);
}
