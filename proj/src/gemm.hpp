#pragma once

// Row-major single-threaded GEMM used by the convolution kernels.

namespace fnb::detail {

/// C[M,N] = A[M,K] * B[K,N]   (C += ... when accumulate)
template <typename T>
void gemm_nn(int M, int N, int K, const T* A, int lda, const T* B, int ldb, T* C, int ldc,
             bool accumulate);

/// C[M,N] = A[M,K] * B[N,K]^T   (C += ... when accumulate)
template <typename T>
void gemm_nt(int M, int N, int K, const T* A, int lda, const T* B, int ldb, T* C, int ldc,
             bool accumulate);

}  // namespace fnb::detail
