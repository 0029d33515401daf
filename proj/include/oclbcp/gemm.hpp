#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <vector>

namespace oclbcp::nn {

// Cache-blocked matrix kernels used by the convolution and fully connected
// layers. All three entry points share the same determinism contract: every
// output element is owned by exactly one loop iteration and its partial sums
// accumulate in a fixed order, so results are bitwise reproducible for any
// thread count.
//
//   gemm_nn: C[M,N] (+)= A[M,K]   * B[K,N]
//   gemm_nt: C[M,N] (+)= A[M,K]   * B[N,K]^T
//   gemm_tn: C[M,N] (+)= A[K,M]^T * B[K,N]
//
// Leading dimensions are element strides between consecutive rows.

namespace gemm_detail {

// Panel sizes chosen so a packed K-block by N-block panel of B stays in L2.
constexpr int64_t kBlockK = 256;
constexpr int64_t kBlockN = 512;

// Accumulates a 4 x 32 tile of C over one K block of a packed B panel.
// The tile lives in locals, which the compiler maps onto vector registers.
template <typename T, int MR>
inline void micro_tile(const T* a, int64_t lda, const T* bp, int64_t kb, int64_t nb, T* c,
                       int64_t ldc, int64_t jw) {
    constexpr int NR = 32;
    T acc[MR][NR];
    for (int i = 0; i < MR; ++i)
        for (int j = 0; j < NR; ++j) acc[i][j] = T(0);
    for (int64_t k = 0; k < kb; ++k) {
        const T* brow = bp + k * nb;
        T av[MR];
        for (int i = 0; i < MR; ++i) av[i] = a[i * lda + k];
        for (int i = 0; i < MR; ++i)
            for (int j = 0; j < NR; ++j) acc[i][j] += av[i] * brow[j];
    }
    for (int i = 0; i < MR; ++i)
        for (int64_t j = 0; j < jw; ++j) c[i * ldc + j] += acc[i][j];
}

// Same contraction for a partial tile narrower than 32 columns.
template <typename T, int MR>
inline void micro_tile_narrow(const T* a, int64_t lda, const T* bp, int64_t kb, int64_t nb, T* c,
                              int64_t ldc, int64_t jw) {
    for (int64_t k = 0; k < kb; ++k) {
        const T* brow = bp + k * nb;
        for (int i = 0; i < MR; ++i) {
            T av = a[i * lda + k];
            for (int64_t j = 0; j < jw; ++j) c[i * ldc + j] += av * brow[j];
        }
    }
}

template <typename T, int MR>
inline void row_block(const T* a, int64_t lda, const T* bp, int64_t kb, int64_t nb, T* c,
                      int64_t ldc) {
    int64_t j = 0;
    for (; j + 32 <= nb; j += 32) micro_tile<T, MR>(a, lda, bp + j, kb, nb, c + j, ldc, 32);
    if (j < nb) micro_tile_narrow<T, MR>(a, lda, bp + j, kb, nb, c + j, ldc, nb - j);
}

// Shared blocked driver over a packable B operand. Pack(kb, jb, buf) fills
// the K-block x N-block panel of B in row-major (k, j) order.
template <typename T, typename PackFn>
void blocked_gemm(int64_t m, int64_t n, int64_t k, const T* a, int64_t lda, T* c, int64_t ldc,
                  bool accumulate, PackFn pack) {
    if (!accumulate) {
#pragma omp parallel for schedule(static)
        for (int64_t i = 0; i < m; ++i) std::memset(c + i * ldc, 0, sizeof(T) * n);
    }
    std::vector<T> panel(static_cast<size_t>(kBlockK) * kBlockN);
    for (int64_t j0 = 0; j0 < n; j0 += kBlockN) {
        int64_t jb = std::min(kBlockN, n - j0);
        for (int64_t k0 = 0; k0 < k; k0 += kBlockK) {
            int64_t kb = std::min(kBlockK, k - k0);
            pack(k0, kb, j0, jb, panel.data());
#pragma omp parallel for schedule(static)
            for (int64_t i0 = 0; i0 < m; i0 += 4) {
                int64_t mb = std::min<int64_t>(4, m - i0);
                const T* arow = a + i0 * lda + k0;
                T* crow = c + i0 * ldc + j0;
                switch (mb) {
                    case 4: row_block<T, 4>(arow, lda, panel.data(), kb, jb, crow, ldc); break;
                    case 3: row_block<T, 3>(arow, lda, panel.data(), kb, jb, crow, ldc); break;
                    case 2: row_block<T, 2>(arow, lda, panel.data(), kb, jb, crow, ldc); break;
                    default: row_block<T, 1>(arow, lda, panel.data(), kb, jb, crow, ldc); break;
                }
            }
        }
    }
}

}  // namespace gemm_detail

template <typename T>
void gemm_nn(int64_t m, int64_t n, int64_t k, const T* a, int64_t lda, const T* b, int64_t ldb,
             T* c, int64_t ldc, bool accumulate = false) {
    gemm_detail::blocked_gemm<T>(
        m, n, k, a, lda, c, ldc, accumulate,
        [&](int64_t k0, int64_t kb, int64_t j0, int64_t jb, T* panel) {
            for (int64_t kk = 0; kk < kb; ++kk)
                std::memcpy(panel + kk * jb, b + (k0 + kk) * ldb + j0, sizeof(T) * jb);
        });
}

template <typename T>
void gemm_nt(int64_t m, int64_t n, int64_t k, const T* a, int64_t lda, const T* b, int64_t ldb,
             T* c, int64_t ldc, bool accumulate = false) {
    // B is n x k; packing transposes the panel so the inner kernel is the
    // same as the NN case.
    gemm_detail::blocked_gemm<T>(
        m, n, k, a, lda, c, ldc, accumulate,
        [&](int64_t k0, int64_t kb, int64_t j0, int64_t jb, T* panel) {
            for (int64_t jj = 0; jj < jb; ++jj) {
                const T* src = b + (j0 + jj) * ldb + k0;
                for (int64_t kk = 0; kk < kb; ++kk) panel[kk * jb + jj] = src[kk];
            }
        });
}

template <typename T>
void gemm_tn(int64_t m, int64_t n, int64_t k, const T* a, int64_t lda, const T* b, int64_t ldb,
             T* c, int64_t ldc, bool accumulate = false) {
    // A is k x m, read down column i with stride lda. Row i of C accumulates
    // a fixed-order sum of B rows; parallel iterations own disjoint C rows.
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < m; ++i) {
        T* crow = c + i * ldc;
        if (!accumulate) std::memset(crow, 0, sizeof(T) * n);
        for (int64_t kk = 0; kk < k; ++kk) {
            T av = a[kk * lda + i];
            const T* brow = b + kk * ldb;
            for (int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

}  // namespace oclbcp::nn
