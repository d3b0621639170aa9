// SPDX-License-Identifier: Apache-2.0
//
// AVX2 + FMA kernels. This translation unit is compiled with -mavx2 -mfma and
// must only be entered after avx2_available() returned true.
#include "advf/kernels.hpp"

#if defined(__AVX2__) && defined(__FMA__)
#include <immintrin.h>

namespace advf::kernels::avx2 {
namespace {

template <typename T>
struct Vec;

template <>
struct Vec<float> {
  using R = __m256;
  static constexpr std::size_t kWidth = 8;
  static R zero() { return _mm256_setzero_ps(); }
  static R set1(float a) { return _mm256_set1_ps(a); }
  static R load(const float* p) { return _mm256_loadu_ps(p); }
  static void store(float* p, R v) { _mm256_storeu_ps(p, v); }
  static R fmadd(R a, R b, R c) { return _mm256_fmadd_ps(a, b, c); }
  static R add(R a, R b) { return _mm256_add_ps(a, b); }
  static float hsum(R v) {
    __m128 lo = _mm256_castps256_ps128(v);
    __m128 hi = _mm256_extractf128_ps(v, 1);
    lo = _mm_add_ps(lo, hi);
    __m128 sh = _mm_movehdup_ps(lo);
    __m128 s = _mm_add_ps(lo, sh);
    sh = _mm_movehl_ps(sh, s);
    s = _mm_add_ss(s, sh);
    return _mm_cvtss_f32(s);
  }
};

template <>
struct Vec<double> {
  using R = __m256d;
  static constexpr std::size_t kWidth = 4;
  static R zero() { return _mm256_setzero_pd(); }
  static R set1(double a) { return _mm256_set1_pd(a); }
  static R load(const double* p) { return _mm256_loadu_pd(p); }
  static void store(double* p, R v) { _mm256_storeu_pd(p, v); }
  static R fmadd(R a, R b, R c) { return _mm256_fmadd_pd(a, b, c); }
  static R add(R a, R b) { return _mm256_add_pd(a, b); }
  static double hsum(R v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d h = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, h));
  }
};

// C row (N wide) (+)= sum_k a(k) * B[k, :]; `a_at(k)` yields the scalar.
template <typename T, typename AFn>
inline void row_update(std::size_t N, std::size_t K, AFn a_at, const T* B,
                       std::size_t ldb, T* c, bool accumulate) {
  using V = Vec<T>;
  constexpr std::size_t W = V::kWidth;
  std::size_t j = 0;
  for (; j + 4 * W <= N; j += 4 * W) {
    auto c0 = accumulate ? V::load(c + j) : V::zero();
    auto c1 = accumulate ? V::load(c + j + W) : V::zero();
    auto c2 = accumulate ? V::load(c + j + 2 * W) : V::zero();
    auto c3 = accumulate ? V::load(c + j + 3 * W) : V::zero();
    for (std::size_t k = 0; k < K; ++k) {
      const auto a = V::set1(a_at(k));
      const T* b = B + k * ldb + j;
      c0 = V::fmadd(a, V::load(b), c0);
      c1 = V::fmadd(a, V::load(b + W), c1);
      c2 = V::fmadd(a, V::load(b + 2 * W), c2);
      c3 = V::fmadd(a, V::load(b + 3 * W), c3);
    }
    V::store(c + j, c0);
    V::store(c + j + W, c1);
    V::store(c + j + 2 * W, c2);
    V::store(c + j + 3 * W, c3);
  }
  for (; j + W <= N; j += W) {
    auto c0 = accumulate ? V::load(c + j) : V::zero();
    for (std::size_t k = 0; k < K; ++k)
      c0 = V::fmadd(V::set1(a_at(k)), V::load(B + k * ldb + j), c0);
    V::store(c + j, c0);
  }
  for (; j < N; ++j) {
    T s = accumulate ? c[j] : T(0);
    for (std::size_t k = 0; k < K; ++k) s += a_at(k) * B[k * ldb + j];
    c[j] = s;
  }
}

template <typename T>
T dot(std::size_t n, const T* x, const T* y) {
  using V = Vec<T>;
  constexpr std::size_t W = V::kWidth;
  auto s0 = V::zero();
  auto s1 = V::zero();
  std::size_t i = 0;
  for (; i + 2 * W <= n; i += 2 * W) {
    s0 = V::fmadd(V::load(x + i), V::load(y + i), s0);
    s1 = V::fmadd(V::load(x + i + W), V::load(y + i + W), s1);
  }
  for (; i + W <= n; i += W) s0 = V::fmadd(V::load(x + i), V::load(y + i), s0);
  T s = V::hsum(V::add(s0, s1));
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

template <typename T>
void gemm_nn(std::size_t M, std::size_t N, std::size_t K, const T* A,
             std::size_t lda, const T* B, std::size_t ldb, T* C,
             std::size_t ldc, bool accumulate) {
  for (std::size_t i = 0; i < M; ++i) {
    const T* a = A + i * lda;
    row_update<T>(N, K, [a](std::size_t k) { return a[k]; }, B, ldb,
                  C + i * ldc, accumulate);
  }
}

template <typename T>
void gemm_nt(std::size_t M, std::size_t N, std::size_t K, const T* A,
             std::size_t lda, const T* B, std::size_t ldb, T* C,
             std::size_t ldc, bool accumulate) {
  for (std::size_t i = 0; i < M; ++i) {
    const T* a = A + i * lda;
    T* c = C + i * ldc;
    for (std::size_t j = 0; j < N; ++j) {
      const T s = dot<T>(K, a, B + j * ldb);
      c[j] = accumulate ? c[j] + s : s;
    }
  }
}

template <typename T>
void gemm_tn(std::size_t M, std::size_t N, std::size_t K, const T* A,
             std::size_t lda, const T* B, std::size_t ldb, T* C,
             std::size_t ldc, bool accumulate) {
  for (std::size_t i = 0; i < M; ++i) {
    row_update<T>(N, K, [A, lda, i](std::size_t k) { return A[k * lda + i]; },
                  B, ldb, C + i * ldc, accumulate);
  }
}

template <typename T>
void axpy(std::size_t n, T alpha, const T* x, T* y) {
  using V = Vec<T>;
  constexpr std::size_t W = V::kWidth;
  const auto a = V::set1(alpha);
  std::size_t i = 0;
  for (; i + W <= n; i += W)
    V::store(y + i, V::fmadd(a, V::load(x + i), V::load(y + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace

template <typename T>
const Table<T>* table() {
  static const Table<T> t{&gemm_nn<T>, &gemm_nt<T>, &gemm_tn<T>, &dot<T>,
                          &axpy<T>};
  return &t;
}

template const Table<float>* table<float>();
template const Table<double>* table<double>();

}  // namespace advf::kernels::avx2

#else

namespace advf::kernels::avx2 {

template <typename T>
const Table<T>* table() {
  return nullptr;
}

template const Table<float>* table<float>();
template const Table<double>* table<double>();

}  // namespace advf::kernels::avx2

#endif
