// SPDX-License-Identifier: Apache-2.0
//
// Dense inner-loop kernels. Every routine has a portable scalar reference in
// namespace `scalar` and, on x86-64, an AVX2/FMA variant in namespace `avx2`.
// `active<T>()` picks one table per process the first time it is called.
#pragma once

#include <cstddef>
#include <string_view>

namespace advf::kernels {

enum class Backend { kScalar, kAvx2 };

// Row-major matrices with explicit leading dimensions.
//   gemm_nn: C[M,N] (+)= A[M,K]   * B[K,N]
//   gemm_nt: C[M,N] (+)= A[M,K]   * B[N,K]^T
//   gemm_tn: C[M,N] (+)= A[K,M]^T * B[K,N]
// When `accumulate` is false C is overwritten.
template <typename T>
struct Table {
  void (*gemm_nn)(std::size_t M, std::size_t N, std::size_t K, const T* A,
                  std::size_t lda, const T* B, std::size_t ldb, T* C,
                  std::size_t ldc, bool accumulate);
  void (*gemm_nt)(std::size_t M, std::size_t N, std::size_t K, const T* A,
                  std::size_t lda, const T* B, std::size_t ldb, T* C,
                  std::size_t ldc, bool accumulate);
  void (*gemm_tn)(std::size_t M, std::size_t N, std::size_t K, const T* A,
                  std::size_t lda, const T* B, std::size_t ldb, T* C,
                  std::size_t ldc, bool accumulate);
  T (*dot)(std::size_t n, const T* x, const T* y);
  // y += alpha * x
  void (*axpy)(std::size_t n, T alpha, const T* x, T* y);
};

namespace scalar {
template <typename T>
const Table<T>& table();
}

namespace avx2 {
/// Null when the build has no AVX2 translation unit.
template <typename T>
const Table<T>* table();
}  // namespace avx2

/// True when the running CPU reports AVX2 and FMA and the variant was built.
bool avx2_available();

/// Selection order: ADVF_KERNELS=scalar|avx2 env override, then CPU probe.
Backend active_backend();
std::string_view backend_name(Backend b);

template <typename T>
const Table<T>& active();

}  // namespace advf::kernels
