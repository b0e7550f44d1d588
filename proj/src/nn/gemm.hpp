#pragma once

#include <algorithm>
#include <cstddef>
#include <type_traits>
#include <vector>

#ifdef DCAM_HAVE_CBLAS
#include <cblas.h>
#endif

namespace dcam::nn::detail {

// C[M x N] += A[M x K] * B[K x N]. B and C are row-major and contiguous;
// A is addressed as a(i, k) = A[i * a_row + k * a_col], which also covers a
// transposed A. Columns are processed in blocks so the B panel stays in
// cache, and four rows of C share each B load.
template <class T>
void gemm_acc_portable(int M, int N, int K, const T* A, std::ptrdiff_t a_row, std::ptrdiff_t a_col,
              const T* B, T* C) {
  constexpr int kColBlock = 256;
  for (int j0 = 0; j0 < N; j0 += kColBlock) {
    const int jn = std::min(kColBlock, N - j0);
    int i = 0;
    for (; i + 4 <= M; i += 4) {
      T* __restrict c0 = C + static_cast<std::ptrdiff_t>(i) * N + j0;
      T* __restrict c1 = c0 + N;
      T* __restrict c2 = c1 + N;
      T* __restrict c3 = c2 + N;
      for (int k = 0; k < K; ++k) {
        const T a0 = A[i * a_row + k * a_col];
        const T a1 = A[(i + 1) * a_row + k * a_col];
        const T a2 = A[(i + 2) * a_row + k * a_col];
        const T a3 = A[(i + 3) * a_row + k * a_col];
        const T* __restrict b = B + static_cast<std::ptrdiff_t>(k) * N + j0;
        for (int j = 0; j < jn; ++j) {
          const T bv = b[j];
          c0[j] += a0 * bv;
          c1[j] += a1 * bv;
          c2[j] += a2 * bv;
          c3[j] += a3 * bv;
        }
      }
    }
    for (; i < M; ++i) {
      T* __restrict c = C + static_cast<std::ptrdiff_t>(i) * N + j0;
      for (int k = 0; k < K; ++k) {
        const T a = A[i * a_row + k * a_col];
        const T* __restrict b = B + static_cast<std::ptrdiff_t>(k) * N + j0;
        for (int j = 0; j < jn; ++j) c[j] += a * b[j];
      }
    }
  }
}

// Same contract; dispatches to CBLAS when A is row- or column-contiguous.
// With accumulate == false, C is overwritten instead of added to.
template <class T>
void gemm_acc(int M, int N, int K, const T* A, std::ptrdiff_t a_row, std::ptrdiff_t a_col, const T* B, T* C,
              bool accumulate = true) {
  if (M == 0 || N == 0) return;
  if (!accumulate) std::fill(C, C + static_cast<std::ptrdiff_t>(M) * N, T(0));
  if (K == 0) return;
#ifdef DCAM_HAVE_CBLAS
  const bool row_major_a = a_col == 1;
  const bool col_major_a = a_row == 1;
  if (row_major_a || col_major_a) {
    const auto trans = row_major_a ? CblasNoTrans : CblasTrans;
    const int lda = static_cast<int>(std::max<std::ptrdiff_t>(row_major_a ? a_row : a_col, row_major_a ? K : M));
    if constexpr (std::is_same_v<T, float>) {
      cblas_sgemm(CblasRowMajor, trans, CblasNoTrans, M, N, K, 1.0f, A, lda, B, N, 1.0f, C, N);
      return;
    } else if constexpr (std::is_same_v<T, double>) {
      cblas_dgemm(CblasRowMajor, trans, CblasNoTrans, M, N, K, 1.0, A, lda, B, N, 1.0, C, N);
      return;
    }
  }
#endif
  gemm_acc_portable(M, N, K, A, a_row, a_col, B, C);
}

// C[M x N] += A[M x K] * B^T, B stored row-major as N x K. A row-major.
template <class T>
void gemm_acc_bt(int M, int N, int K, const T* A, const T* B, T* C, std::vector<T>& scratch) {
  if (M == 0 || N == 0 || K == 0) return;
#ifdef DCAM_HAVE_CBLAS
  if constexpr (std::is_same_v<T, float>) {
    cblas_sgemm(CblasRowMajor, CblasNoTrans, CblasTrans, M, N, K, 1.0f, A, K, B, K, 1.0f, C, N);
    return;
  } else if constexpr (std::is_same_v<T, double>) {
    cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasTrans, M, N, K, 1.0, A, K, B, K, 1.0, C, N);
    return;
  }
#endif
  const auto size = static_cast<std::size_t>(N) * static_cast<std::size_t>(K);
  if (scratch.size() < size) scratch.resize(size);
  for (int r = 0; r < N; ++r) {
    for (int c = 0; c < K; ++c) {
      scratch[static_cast<std::size_t>(c) * N + r] = B[static_cast<std::size_t>(r) * K + c];
    }
  }
  gemm_acc_portable(M, N, K, A, K, 1, scratch.data(), C);
}

}  // namespace dcam::nn::detail
