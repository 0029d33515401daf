#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "oclbcp/codes.hpp"
#include "oclbcp/image.hpp"
#include "oclbcp/tensor.hpp"

// Straightforward single-threaded implementations of the hot kernels. They
// define the expected numerics for the blocked OpenMP versions and anchor
// the speedup benchmark; keep them simple rather than fast.
namespace oclbcp::ref {

template <typename T>
void gemm_nn_naive(int64_t m, int64_t n, int64_t k, const T* a, int64_t lda, const T* b,
                   int64_t ldb, T* c, int64_t ldc) {
    for (int64_t i = 0; i < m; ++i)
        for (int64_t j = 0; j < n; ++j) {
            T s = T(0);
            for (int64_t kk = 0; kk < k; ++kk) s += a[i * lda + kk] * b[kk * ldb + j];
            c[i * ldc + j] = s;
        }
}

template <typename T>
void gemm_nt_naive(int64_t m, int64_t n, int64_t k, const T* a, int64_t lda, const T* b,
                   int64_t ldb, T* c, int64_t ldc) {
    for (int64_t i = 0; i < m; ++i)
        for (int64_t j = 0; j < n; ++j) {
            T s = T(0);
            for (int64_t kk = 0; kk < k; ++kk) s += a[i * lda + kk] * b[j * ldb + kk];
            c[i * ldc + j] = s;
        }
}

template <typename T>
void gemm_tn_naive(int64_t m, int64_t n, int64_t k, const T* a, int64_t lda, const T* b,
                   int64_t ldb, T* c, int64_t ldc) {
    for (int64_t i = 0; i < m; ++i)
        for (int64_t j = 0; j < n; ++j) {
            T s = T(0);
            for (int64_t kk = 0; kk < k; ++kk) s += a[kk * lda + i] * b[kk * ldb + j];
            c[i * ldc + j] = s;
        }
}

// Direct 2x2 convolution with the implicit right/bottom zero pad.
template <typename T>
nn::Tensor<T> conv2d_forward_naive(const nn::Tensor<T>& x, const nn::Tensor<T>& w,
                                   const nn::Tensor<T>& b) {
    int64_t n = x.shape[0], cin = x.shape[1], h = x.shape[2], ww = x.shape[3];
    int64_t cout = w.shape[0];
    nn::Tensor<T> y({n, cout, h, ww});
    for (int64_t i = 0; i < n; ++i)
        for (int64_t oc = 0; oc < cout; ++oc)
            for (int64_t yy = 0; yy < h; ++yy)
                for (int64_t xx = 0; xx < ww; ++xx) {
                    T s = b.data()[oc];
                    for (int64_t c = 0; c < cin; ++c)
                        for (int64_t ky = 0; ky < 2; ++ky)
                            for (int64_t kx = 0; kx < 2; ++kx) {
                                int64_t sy = yy + ky, sx = xx + kx;
                                if (sy >= h || sx >= ww) continue;
                                s += w.data()[((oc * cin + c) * 2 + ky) * 2 + kx] *
                                     x.data()[((i * cin + c) * h + sy) * ww + sx];
                            }
                    y.data()[((i * cout + oc) * h + yy) * ww + xx] = s;
                }
    return y;
}

// Per-pixel descriptor codes computed without the parallel loop structure.
codes::CodeMap descriptor_map_naive(const img::GrayImage& image, double t);

// Direct O((hw)^2) two-dimensional transform.
std::vector<std::complex<double>> dft2_naive(const std::vector<double>& x, int h, int w);

}  // namespace oclbcp::ref
