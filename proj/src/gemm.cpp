#include "gemm.hpp"

#include <algorithm>
#include <cstring>
#include <utility>

namespace fnb::detail {
namespace {

template <typename T>
struct Simd;

template <>
struct Simd<float> {
  typedef float type __attribute__((vector_size(64)));
  static constexpr int kWidth = 16;
};

template <>
struct Simd<double> {
  typedef double type __attribute__((vector_size(64)));
  static constexpr int kWidth = 8;
};

template <typename T>
using Vec = typename Simd<T>::type;

template <typename T>
inline Vec<T> load(const T* p) {
  Vec<T> v;
  std::memcpy(&v, p, sizeof(v));
  return v;
}

template <typename T>
inline void store(T* p, Vec<T> v) {
  std::memcpy(p, &v, sizeof(v));
}

template <typename T, std::size_t... I>
inline Vec<T> splat_impl(T x, std::index_sequence<I...>) {
  return Vec<T>{((void)I, x)...};
}

template <typename T>
inline Vec<T> splat(T x) {
  return splat_impl<T>(x, std::make_index_sequence<Simd<T>::kWidth>{});
}

template <typename T>
inline T hsum(Vec<T> v) {
  T s = 0;
  for (int i = 0; i < Simd<T>::kWidth; ++i) s += v[i];
  return s;
}

template <typename T>
inline Vec<T> load_or_zero(const T* p, bool overwrite) {
  return overwrite ? splat<T>(0) : load(p);
}

constexpr int kBlockK = 128;

// 4 rows x 4 vectors of C (+)= A * B over kc steps. Accumulators are named
// locals so that they stay in registers.
template <typename T>
inline void tile_nn_4x4(int kc, const T* A, int lda, const T* B, int ldb, T* C, int ldc, bool overwrite) {
  constexpr int W = Simd<T>::kWidth;
  T* c0 = C;
  T* c1 = C + ldc;
  T* c2 = C + 2 * static_cast<long>(ldc);
  T* c3 = C + 3 * static_cast<long>(ldc);
  Vec<T> a00 = load_or_zero(c0, overwrite), a01 = load_or_zero(c0 + W, overwrite),
         a02 = load_or_zero(c0 + 2 * W, overwrite), a03 = load_or_zero(c0 + 3 * W, overwrite);
  Vec<T> a10 = load_or_zero(c1, overwrite), a11 = load_or_zero(c1 + W, overwrite),
         a12 = load_or_zero(c1 + 2 * W, overwrite), a13 = load_or_zero(c1 + 3 * W, overwrite);
  Vec<T> a20 = load_or_zero(c2, overwrite), a21 = load_or_zero(c2 + W, overwrite),
         a22 = load_or_zero(c2 + 2 * W, overwrite), a23 = load_or_zero(c2 + 3 * W, overwrite);
  Vec<T> a30 = load_or_zero(c3, overwrite), a31 = load_or_zero(c3 + W, overwrite),
         a32 = load_or_zero(c3 + 2 * W, overwrite), a33 = load_or_zero(c3 + 3 * W, overwrite);
  const T* r0 = A;
  const T* r1 = A + lda;
  const T* r2 = A + 2 * static_cast<long>(lda);
  const T* r3 = A + 3 * static_cast<long>(lda);
  for (int p = 0; p < kc; ++p) {
    const T* b = B + static_cast<long>(p) * ldb;
    const Vec<T> b0 = load(b), b1 = load(b + W), b2 = load(b + 2 * W), b3 = load(b + 3 * W);
    Vec<T> x = splat(r0[p]);
    a00 += x * b0; a01 += x * b1; a02 += x * b2; a03 += x * b3;
    x = splat(r1[p]);
    a10 += x * b0; a11 += x * b1; a12 += x * b2; a13 += x * b3;
    x = splat(r2[p]);
    a20 += x * b0; a21 += x * b1; a22 += x * b2; a23 += x * b3;
    x = splat(r3[p]);
    a30 += x * b0; a31 += x * b1; a32 += x * b2; a33 += x * b3;
  }
  store(c0, a00); store(c0 + W, a01); store(c0 + 2 * W, a02); store(c0 + 3 * W, a03);
  store(c1, a10); store(c1 + W, a11); store(c1 + 2 * W, a12); store(c1 + 3 * W, a13);
  store(c2, a20); store(c2 + W, a21); store(c2 + 2 * W, a22); store(c2 + 3 * W, a23);
  store(c3, a30); store(c3 + W, a31); store(c3 + 2 * W, a32); store(c3 + 3 * W, a33);
}

// One row x one vector; used for row and column remainders.
template <typename T>
inline void tile_nn_1x1(int kc, const T* A, const T* B, int ldb, T* C, bool overwrite) {
  Vec<T> acc = load_or_zero(C, overwrite);
  for (int p = 0; p < kc; ++p) acc += splat(A[p]) * load(B + static_cast<long>(p) * ldb);
  store(C, acc);
}

template <typename T>
inline void tile_nn_scalar(int rows, int kc, int nc, const T* A, int lda, const T* B, int ldb, T* C,
                           int ldc, bool overwrite) {
  for (int r = 0; r < rows; ++r) {
    T* c = C + static_cast<long>(r) * ldc;
    if (overwrite) std::fill(c, c + nc, T(0));
    for (int p = 0; p < kc; ++p) {
      const T a = A[static_cast<long>(r) * lda + p];
      const T* b = B + static_cast<long>(p) * ldb;
      for (int j = 0; j < nc; ++j) c[j] += a * b[j];
    }
  }
}

// 4 x 4 block of dot products C[r][s] (+)= A_r . B_s over kc entries.
template <typename T>
inline void tile_nt_4x4(int kc, const T* A, int lda, const T* B, int ldb, T* C, int ldc, bool overwrite) {
  constexpr int W = Simd<T>::kWidth;
  const Vec<T> zero = splat<T>(0);
  Vec<T> a00 = zero, a01 = zero, a02 = zero, a03 = zero;
  Vec<T> a10 = zero, a11 = zero, a12 = zero, a13 = zero;
  Vec<T> a20 = zero, a21 = zero, a22 = zero, a23 = zero;
  Vec<T> a30 = zero, a31 = zero, a32 = zero, a33 = zero;
  const T* x0 = A;
  const T* x1 = A + lda;
  const T* x2 = A + 2 * static_cast<long>(lda);
  const T* x3 = A + 3 * static_cast<long>(lda);
  const T* y0 = B;
  const T* y1 = B + ldb;
  const T* y2 = B + 2 * static_cast<long>(ldb);
  const T* y3 = B + 3 * static_cast<long>(ldb);
  int p = 0;
  for (; p + W <= kc; p += W) {
    const Vec<T> b0 = load(y0 + p), b1 = load(y1 + p), b2 = load(y2 + p), b3 = load(y3 + p);
    Vec<T> x = load(x0 + p);
    a00 += x * b0; a01 += x * b1; a02 += x * b2; a03 += x * b3;
    x = load(x1 + p);
    a10 += x * b0; a11 += x * b1; a12 += x * b2; a13 += x * b3;
    x = load(x2 + p);
    a20 += x * b0; a21 += x * b1; a22 += x * b2; a23 += x * b3;
    x = load(x3 + p);
    a30 += x * b0; a31 += x * b1; a32 += x * b2; a33 += x * b3;
  }
  const Vec<T> acc[4][4] = {{a00, a01, a02, a03}, {a10, a11, a12, a13}, {a20, a21, a22, a23},
                            {a30, a31, a32, a33}};
  const T* rows_a[4] = {x0, x1, x2, x3};
  const T* rows_b[4] = {y0, y1, y2, y3};
  for (int r = 0; r < 4; ++r) {
    for (int s = 0; s < 4; ++s) {
      T sum = hsum<T>(acc[r][s]);
      for (int q = p; q < kc; ++q) sum += rows_a[r][q] * rows_b[s][q];
      T& c = C[static_cast<long>(r) * ldc + s];
      c = overwrite ? sum : c + sum;
    }
  }
}

template <typename T>
inline void dot_nt(int kc, const T* a, const T* b, T& c, bool overwrite) {
  constexpr int W = Simd<T>::kWidth;
  Vec<T> acc = splat<T>(0);
  int p = 0;
  for (; p + W <= kc; p += W) acc += load(a + p) * load(b + p);
  T sum = hsum<T>(acc);
  for (; p < kc; ++p) sum += a[p] * b[p];
  c = overwrite ? sum : c + sum;
}

}  // namespace

template <typename T>
void gemm_nn(int M, int N, int K, const T* A, int lda, const T* B, int ldb, T* C, int ldc,
             bool accumulate) {
  if (M == 0 || N == 0) return;
  if (K == 0) {
    if (!accumulate) {
      for (int i = 0; i < M; ++i) std::fill(C + static_cast<long>(i) * ldc, C + static_cast<long>(i) * ldc + N, T(0));
    }
    return;
  }
  constexpr int W = Simd<T>::kWidth;
  constexpr int kBlockN = 1024;
  for (int jb = 0; jb < N; jb += kBlockN) {
    const int nc = std::min(kBlockN, N - jb);
    for (int kb = 0; kb < K; kb += kBlockK) {
      const int kc = std::min(kBlockK, K - kb);
      const bool overwrite = kb == 0 && !accumulate;
      const T* Bp = B + static_cast<long>(kb) * ldb + jb;
      int j = 0;
      for (; j + 4 * W <= nc; j += 4 * W) {
        int i = 0;
        for (; i + 4 <= M; i += 4) {
          tile_nn_4x4<T>(kc, A + static_cast<long>(i) * lda + kb, lda, Bp + j, ldb,
                         C + static_cast<long>(i) * ldc + jb + j, ldc, overwrite);
        }
        for (; i < M; ++i) {
          for (int v = 0; v < 4; ++v) {
            tile_nn_1x1<T>(kc, A + static_cast<long>(i) * lda + kb, Bp + j + v * W, ldb,
                           C + static_cast<long>(i) * ldc + jb + j + v * W, overwrite);
          }
        }
      }
      for (; j + W <= nc; j += W) {
        for (int i = 0; i < M; ++i) {
          tile_nn_1x1<T>(kc, A + static_cast<long>(i) * lda + kb, Bp + j, ldb,
                         C + static_cast<long>(i) * ldc + jb + j, overwrite);
        }
      }
      if (j < nc) {
        tile_nn_scalar<T>(M, kc, nc - j, A + kb, lda, Bp + j, ldb, C + jb + j, ldc, overwrite);
      }
    }
  }
}

template <typename T>
void gemm_nt(int M, int N, int K, const T* A, int lda, const T* B, int ldb, T* C, int ldc,
             bool accumulate) {
  if (M == 0 || N == 0) return;
  if (K == 0) {
    if (!accumulate) {
      for (int i = 0; i < M; ++i) std::fill(C + static_cast<long>(i) * ldc, C + static_cast<long>(i) * ldc + N, T(0));
    }
    return;
  }
  constexpr int kBlockP = 1024;
  for (int kb = 0; kb < K; kb += kBlockP) {
    const int kc = std::min(kBlockP, K - kb);
    const bool overwrite = kb == 0 && !accumulate;
    int i = 0;
    for (; i + 4 <= M; i += 4) {
      const T* a = A + static_cast<long>(i) * lda + kb;
      int j = 0;
      for (; j + 4 <= N; j += 4) {
        tile_nt_4x4<T>(kc, a, lda, B + static_cast<long>(j) * ldb + kb, ldb,
                       C + static_cast<long>(i) * ldc + j, ldc, overwrite);
      }
      for (; j < N; ++j) {
        for (int r = 0; r < 4; ++r) {
          dot_nt<T>(kc, a + static_cast<long>(r) * lda, B + static_cast<long>(j) * ldb + kb,
                    C[static_cast<long>(i + r) * ldc + j], overwrite);
        }
      }
    }
    for (; i < M; ++i) {
      for (int j = 0; j < N; ++j) {
        dot_nt<T>(kc, A + static_cast<long>(i) * lda + kb, B + static_cast<long>(j) * ldb + kb,
                  C[static_cast<long>(i) * ldc + j], overwrite);
      }
    }
  }
}

template void gemm_nn<float>(int, int, int, const float*, int, const float*, int, float*, int, bool);
template void gemm_nn<double>(int, int, int, const double*, int, const double*, int, double*, int,
                              bool);
template void gemm_nt<float>(int, int, int, const float*, int, const float*, int, float*, int, bool);
template void gemm_nt<double>(int, int, int, const double*, int, const double*, int, double*, int,
                              bool);

}  // namespace fnb::detail
