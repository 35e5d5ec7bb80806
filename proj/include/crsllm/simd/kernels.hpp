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

#pragma once

// Dense double-precision kernels used by the trainable models. Every kernel
// has a portable scalar reference and, on x86-64, an AVX2+FMA variant; the
// variant is picked once at runtime from CPUID. Set CRSLLM_SIMD=scalar to
// force the reference path.

#include <cstddef>
#include <span>

namespace crsllm::simd {

enum class Isa { kScalar, kAvx2 };

struct AdamCoefficients {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double bias_correction1 = 1.0;  // 1 - beta1^t
  double bias_correction2 = 1.0;  // 1 - beta2^t
};

struct KernelTable {
  Isa isa;
  const char* name;
  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // y += W x, W row-major rows x cols
  void (*gemv)(const double* w, std::size_t rows, std::size_t cols,
               const double* x, double* y);
  // out += W^T g
  void (*gemv_t)(const double* w, std::size_t rows, std::size_t cols,
                 const double* g, double* out);
  // W += alpha * g x^T
  void (*ger)(double* w, std::size_t rows, std::size_t cols, double alpha,
              const double* g, const double* x);
  // One Adam step over n parameters.
  void (*adam)(double* param, const double* grad, double* m, double* v,
               std::size_t n, const AdamCoefficients& c);
};

const KernelTable& scalar_kernels();

// nullptr when the build has no AVX2 variant or the CPU lacks AVX2/FMA.
const KernelTable* avx2_kernels();

// Table selected for this process.
const KernelTable& active();

// Span conveniences over active().
inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), x.size());
}
inline void gemv(std::span<const double> w, std::size_t rows, std::size_t cols,
                 std::span<const double> x, std::span<double> y) {
  active().gemv(w.data(), rows, cols, x.data(), y.data());
}
inline void gemv_t(std::span<const double> w, std::size_t rows,
                   std::size_t cols, std::span<const double> g,
                   std::span<double> out) {
  active().gemv_t(w.data(), rows, cols, g.data(), out.data());
}
inline void ger(std::span<double> w, std::size_t rows, std::size_t cols,
                double alpha, std::span<const double> g,
                std::span<const double> x) {
  active().ger(w.data(), rows, cols, alpha, g.data(), x.data());
}

}  // namespace crsllm::simd
