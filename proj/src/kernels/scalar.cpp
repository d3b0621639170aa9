// SPDX-License-Identifier: Apache-2.0
#include "advf/kernels.hpp"

namespace advf::kernels::scalar {
namespace {

template <typename T>
void gemm_nn(std::size_t M, std::size_t N, std::size_t K, const T* A,
             std::size_t lda, const T* B, std::size_t ldb, T* C,
             std::size_t ldc, bool accumulate) {
  for (std::size_t i = 0; i < M; ++i) {
    T* c = C + i * ldc;
    if (!accumulate)
      for (std::size_t j = 0; j < N; ++j) c[j] = T(0);
    for (std::size_t k = 0; k < K; ++k) {
      const T a = A[i * lda + k];
      const T* b = B + k * ldb;
      for (std::size_t j = 0; j < N; ++j) c[j] += a * b[j];
    }
  }
}

template <typename T>
void gemm_nt(std::size_t M, std::size_t N, std::size_t K, const T* A,
             std::size_t lda, const T* B, std::size_t ldb, T* C,
             std::size_t ldc, bool accumulate) {
  for (std::size_t i = 0; i < M; ++i) {
    const T* a = A + i * lda;
    for (std::size_t j = 0; j < N; ++j) {
      const T* b = B + j * ldb;
      T s(0);
      for (std::size_t k = 0; k < K; ++k) s += a[k] * b[k];
      C[i * ldc + j] = accumulate ? C[i * ldc + j] + s : s;
    }
  }
}

template <typename T>
void gemm_tn(std::size_t M, std::size_t N, std::size_t K, const T* A,
             std::size_t lda, const T* B, std::size_t ldb, T* C,
             std::size_t ldc, bool accumulate) {
  if (!accumulate)
    for (std::size_t i = 0; i < M; ++i)
      for (std::size_t j = 0; j < N; ++j) C[i * ldc + j] = T(0);
  for (std::size_t k = 0; k < K; ++k) {
    const T* b = B + k * ldb;
    for (std::size_t i = 0; i < M; ++i) {
      const T a = A[k * lda + i];
      T* c = C + i * ldc;
      for (std::size_t j = 0; j < N; ++j) c[j] += a * b[j];
    }
  }
}

template <typename T>
T dot(std::size_t n, const T* x, const T* y) {
  T s(0);
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

template <typename T>
void axpy(std::size_t n, T alpha, const T* x, T* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace

template <typename T>
const Table<T>& table() {
  static const Table<T> t{&gemm_nn<T>, &gemm_nt<T>, &gemm_tn<T>, &dot<T>,
                          &axpy<T>};
  return t;
}

template const Table<float>& table<float>();
template const Table<double>& table<double>();

}  // namespace advf::kernels::scalar
