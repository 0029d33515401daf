#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "oclbcp/gemm.hpp"
#include "oclbcp/tensor.hpp"

namespace oclbcp::nn {

// Layer primitives for the recognition network. Forward functions validate
// shapes and reject non-finite outputs; backward functions accumulate into
// parameter gradients (+=) and overwrite input gradients. Convolutions use a
// 2x2 kernel at stride 1 with one implicit zero column on the right and one
// zero row at the bottom, so spatial size is preserved.

namespace ops_detail {

// im2col for the 2x2 kernel: col is [Cin*4, H*W] for one sample, row-major.
template <typename T>
void im2col_2x2(const T* x, int64_t cin, int64_t h, int64_t w, T* col) {
    int64_t hw = h * w;
#pragma omp parallel for schedule(static) collapse(2)
    for (int64_t c = 0; c < cin; ++c) {
        for (int64_t ky = 0; ky < 2; ++ky) {
            for (int64_t kx = 0; kx < 2; ++kx) {
                T* dst = col + ((c * 2 + ky) * 2 + kx) * hw;
                const T* src = x + c * hw;
                for (int64_t y = 0; y < h; ++y) {
                    int64_t sy = y + ky;
                    for (int64_t xx = 0; xx < w; ++xx) {
                        int64_t sx = xx + kx;
                        dst[y * w + xx] =
                            (sy < h && sx < w) ? src[sy * w + sx] : T(0);
                    }
                }
            }
        }
    }
}

}  // namespace ops_detail

// x [N, Cin, H, W], w [Cout, Cin, 2, 2], b [Cout] -> y [N, Cout, H, W].
template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
    if (x.shape.size() != 4 || w.shape.size() != 4 || b.shape.size() != 1)
        throw std::invalid_argument("conv2d: bad rank");
    int64_t n = x.shape[0], cin = x.shape[1], h = x.shape[2], ww = x.shape[3];
    int64_t cout = w.shape[0];
    if (w.shape[1] != cin || w.shape[2] != 2 || w.shape[3] != 2 || b.shape[0] != cout)
        throw std::invalid_argument("conv2d: shape mismatch");
    ensure_finite(x, "conv2d input");

    int64_t hw = h * ww, k = cin * 4;
    Tensor<T> y({n, cout, h, ww});
    std::vector<T> col(static_cast<size_t>(k) * hw);
    for (int64_t i = 0; i < n; ++i) {
        ops_detail::im2col_2x2(x.data() + i * cin * hw, cin, h, ww, col.data());
        gemm_nn<T>(cout, hw, k, w.data(), k, col.data(), hw, y.data() + i * cout * hw, hw);
    }
    T* yd = y.data();
    const T* bd = b.data();
#pragma omp parallel for schedule(static) collapse(2)
    for (int64_t i = 0; i < n; ++i)
        for (int64_t oc = 0; oc < cout; ++oc) {
            T* row = yd + (i * cout + oc) * hw;
            T bv = bd[oc];
            for (int64_t p = 0; p < hw; ++p) row[p] += bv;
        }
    ensure_finite(y, "conv2d output");
    return y;
}

// dx may be null when input gradients are not needed (first layer).
// dw and db accumulate; they must be pre-sized and zeroed by the caller.
template <typename T>
void conv2d_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& dy, Tensor<T>* dx,
                     std::vector<T>& dw, std::vector<T>& db) {
    int64_t n = x.shape[0], cin = x.shape[1], h = x.shape[2], ww = x.shape[3];
    int64_t cout = w.shape[0];
    if (dy.shape != std::vector<int64_t>({n, cout, h, ww}))
        throw std::invalid_argument("conv2d_backward: dy shape mismatch");
    int64_t hw = h * ww, k = cin * 4;

    std::vector<T> col(static_cast<size_t>(k) * hw);
    std::vector<T> dcol;
    if (dx) dcol.assign(static_cast<size_t>(k) * hw, T(0));

    for (int64_t i = 0; i < n; ++i) {
        const T* dyn = dy.data() + i * cout * hw;
        ops_detail::im2col_2x2(x.data() + i * cin * hw, cin, h, ww, col.data());
        // dW[oc, :] accumulates dy_n rows against im2col rows, batch-serial
        // so the summation order is fixed.
        gemm_nt<T>(cout, k, hw, dyn, hw, col.data(), hw, dw.data(), k, true);
        if (dx) {
            gemm_tn<T>(k, hw, cout, w.data(), k, dyn, hw, dcol.data(), hw, false);
            // col2im as a gather: each input pixel sums its (up to four)
            // window contributions in a fixed order.
            T* dxn = dx->data() + i * cin * hw;
#pragma omp parallel for schedule(static)
            for (int64_t c = 0; c < cin; ++c) {
                for (int64_t y = 0; y < h; ++y) {
                    for (int64_t xx = 0; xx < ww; ++xx) {
                        T s = T(0);
                        for (int64_t ky = 0; ky < 2; ++ky) {
                            int64_t oy = y - ky;
                            if (oy < 0) continue;
                            for (int64_t kx = 0; kx < 2; ++kx) {
                                int64_t ox = xx - kx;
                                if (ox < 0) continue;
                                s += dcol[((c * 2 + ky) * 2 + kx) * hw + oy * ww + ox];
                            }
                        }
                        dxn[c * hw + y * ww + xx] = s;
                    }
                }
            }
        }
    }
#pragma omp parallel for schedule(static)
    for (int64_t oc = 0; oc < cout; ++oc) {
        T s = T(0);
        for (int64_t i = 0; i < n; ++i) {
            const T* row = dy.data() + (i * cout + oc) * hw;
            for (int64_t p = 0; p < hw; ++p) s += row[p];
        }
        db[oc] += s;
    }
}

template <typename T>
Tensor<T> relu_forward(const Tensor<T>& x) {
    Tensor<T> y = x;
    T* p = y.data();
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < static_cast<int64_t>(y.v.size()); ++i)
        if (p[i] < T(0)) p[i] = T(0);
    return y;
}

// x is the pre-activation input that was fed to relu_forward.
template <typename T>
Tensor<T> relu_backward(const Tensor<T>& x, const Tensor<T>& dy) {
    if (!same_shape(x, dy)) throw std::invalid_argument("relu_backward: shape mismatch");
    Tensor<T> dx = dy;
    T* p = dx.data();
    const T* xp = x.data();
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < static_cast<int64_t>(dx.v.size()); ++i)
        if (xp[i] <= T(0)) p[i] = T(0);
    return dx;
}

// 2x2 max pooling at stride 2; spatial extents must be even. idx records the
// flat offset of each window maximum (first occurrence on ties, scanning the
// window row-major).
template <typename T>
void maxpool2_forward(const Tensor<T>& x, Tensor<T>& y, Tensor<int64_t>& idx) {
    if (x.shape.size() != 4) throw std::invalid_argument("maxpool2: bad rank");
    int64_t n = x.shape[0], c = x.shape[1], h = x.shape[2], w = x.shape[3];
    if (h % 2 || w % 2) throw std::invalid_argument("maxpool2: odd spatial extent");
    int64_t oh = h / 2, ow = w / 2;
    y = Tensor<T>({n, c, oh, ow});
    idx = Tensor<int64_t>({n, c, oh, ow});
#pragma omp parallel for schedule(static) collapse(2)
    for (int64_t i = 0; i < n; ++i) {
        for (int64_t ch = 0; ch < c; ++ch) {
            const T* plane = x.data() + (i * c + ch) * h * w;
            int64_t base = (i * c + ch) * h * w;
            T* yrow = y.data() + (i * c + ch) * oh * ow;
            int64_t* irow = idx.data() + (i * c + ch) * oh * ow;
            for (int64_t oy = 0; oy < oh; ++oy) {
                for (int64_t ox = 0; ox < ow; ++ox) {
                    int64_t y0 = oy * 2, x0 = ox * 2;
                    int64_t best = y0 * w + x0;
                    T bv = plane[best];
                    const int64_t cand[3] = {y0 * w + x0 + 1, (y0 + 1) * w + x0,
                                             (y0 + 1) * w + x0 + 1};
                    for (int64_t o : cand)
                        if (plane[o] > bv) {
                            bv = plane[o];
                            best = o;
                        }
                    yrow[oy * ow + ox] = bv;
                    irow[oy * ow + ox] = base + best;
                }
            }
        }
    }
}

template <typename T>
Tensor<T> maxpool2_backward(const Tensor<int64_t>& idx, const Tensor<T>& dy,
                            const std::vector<int64_t>& xshape) {
    if (!same_shape(idx, dy)) throw std::invalid_argument("maxpool2_backward: shape mismatch");
    Tensor<T> dx(xshape);
    const int64_t* ip = idx.data();
    const T* dp = dy.data();
    T* xp = dx.data();
    // Pool windows are disjoint, so every target element has one writer.
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < static_cast<int64_t>(dy.v.size()); ++i) xp[ip[i]] += dp[i];
    return dx;
}

// x [N, D], w [K, D], b [K] -> y [N, K].
template <typename T>
Tensor<T> fc_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
    if (x.shape.size() != 2 || w.shape.size() != 2 || b.shape.size() != 1)
        throw std::invalid_argument("fc: bad rank");
    int64_t n = x.shape[0], d = x.shape[1], k = w.shape[0];
    if (w.shape[1] != d || b.shape[0] != k) throw std::invalid_argument("fc: shape mismatch");
    ensure_finite(x, "fc input");
    Tensor<T> y({n, k});
    gemm_nt<T>(n, k, d, x.data(), d, w.data(), d, y.data(), k);
    T* yd = y.data();
    const T* bd = b.data();
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i)
        for (int64_t j = 0; j < k; ++j) yd[i * k + j] += bd[j];
    ensure_finite(y, "fc output");
    return y;
}

template <typename T>
void fc_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& dy, Tensor<T>* dx,
                 std::vector<T>& dw, std::vector<T>& db) {
    int64_t n = x.shape[0], d = x.shape[1], k = w.shape[0];
    if (dy.shape != std::vector<int64_t>({n, k}))
        throw std::invalid_argument("fc_backward: dy shape mismatch");
    if (dx) {
        *dx = Tensor<T>({n, d});
        gemm_nn<T>(n, d, k, dy.data(), k, w.data(), d, dx->data(), d);
    }
    gemm_tn<T>(k, d, n, dy.data(), k, x.data(), d, dw.data(), d, true);
#pragma omp parallel for schedule(static)
    for (int64_t j = 0; j < k; ++j) {
        T s = T(0);
        for (int64_t i = 0; i < n; ++i) s += dy.data()[i * k + j];
        db[j] += s;
    }
}

// Elementwise max of two equally shaped activations; ties keep the first
// input. takes_first records the routing for the backward pass.
template <typename T>
void fuse_max_forward(const Tensor<T>& f1, const Tensor<T>& f2, Tensor<T>& z,
                      Tensor<uint8_t>& takes_first) {
    if (!same_shape(f1, f2)) throw std::invalid_argument("fuse_max: shape mismatch");
    z = Tensor<T>(f1.shape);
    takes_first = Tensor<uint8_t>(f1.shape);
    const T* a = f1.data();
    const T* b = f2.data();
    T* zp = z.data();
    uint8_t* m = takes_first.data();
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < static_cast<int64_t>(z.v.size()); ++i) {
        bool first = a[i] >= b[i];
        m[i] = first ? 1 : 0;
        zp[i] = first ? a[i] : b[i];
    }
}

template <typename T>
void fuse_max_backward(const Tensor<uint8_t>& takes_first, const Tensor<T>& dz, Tensor<T>& df1,
                       Tensor<T>& df2) {
    const uint8_t* m = takes_first.data();
    const T* dp = dz.data();
    T* a = df1.data();
    T* b = df2.data();
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < static_cast<int64_t>(dz.v.size()); ++i) {
        if (m[i])
            a[i] += dp[i];
        else
            b[i] += dp[i];
    }
}

template <typename T>
Tensor<T> fuse_sum_forward(const Tensor<T>& f1, const Tensor<T>& f2) {
    if (!same_shape(f1, f2)) throw std::invalid_argument("fuse_sum: shape mismatch");
    Tensor<T> z = f1;
    const T* b = f2.data();
    T* zp = z.data();
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < static_cast<int64_t>(z.v.size()); ++i) zp[i] += b[i];
    return z;
}

// Row-wise softmax with the log-sum-exp shift.
template <typename T>
Tensor<T> softmax(const Tensor<T>& logits) {
    if (logits.shape.size() != 2) throw std::invalid_argument("softmax: bad rank");
    int64_t n = logits.shape[0], c = logits.shape[1];
    Tensor<T> p({n, c});
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i) {
        const T* row = logits.data() + i * c;
        T* out = p.data() + i * c;
        double mx = row[0];
        for (int64_t j = 1; j < c; ++j) mx = std::max(mx, static_cast<double>(row[j]));
        double z = 0.0;
        for (int64_t j = 0; j < c; ++j) z += std::exp(static_cast<double>(row[j]) - mx);
        for (int64_t j = 0; j < c; ++j)
            out[j] = static_cast<T>(std::exp(static_cast<double>(row[j]) - mx) / z);
    }
    return p;
}

template <typename T>
struct SoftmaxXent {
    double loss = 0.0;
    Tensor<T> probs;
    Tensor<T> dlogits;  // (softmax - labels) / N
};

// Mean cross-entropy over the batch against one-hot labels. Labels must
// contain exactly one 1 per row and zeros elsewhere.
template <typename T>
SoftmaxXent<T> softmax_xent(const Tensor<T>& logits, const Tensor<T>& onehot) {
    if (!same_shape(logits, onehot)) throw std::invalid_argument("softmax_xent: shape mismatch");
    if (logits.shape.size() != 2) throw std::invalid_argument("softmax_xent: bad rank");
    int64_t n = logits.shape[0], c = logits.shape[1];
    for (int64_t i = 0; i < n; ++i) {
        int ones = 0;
        for (int64_t j = 0; j < c; ++j) {
            T v = onehot.data()[i * c + j];
            if (v == T(1))
                ++ones;
            else if (v != T(0))
                throw std::invalid_argument("softmax_xent: labels are not one-hot");
        }
        if (ones != 1) throw std::invalid_argument("softmax_xent: labels are not one-hot");
    }
    ensure_finite(logits, "softmax_xent logits");

    SoftmaxXent<T> r;
    r.probs = softmax(logits);
    r.dlogits = Tensor<T>({n, c});
    double loss = 0.0;
    for (int64_t i = 0; i < n; ++i) {
        const T* row = logits.data() + i * c;
        double mx = row[0];
        for (int64_t j = 1; j < c; ++j) mx = std::max(mx, static_cast<double>(row[j]));
        double z = 0.0;
        for (int64_t j = 0; j < c; ++j) z += std::exp(static_cast<double>(row[j]) - mx);
        double lse = mx + std::log(z);
        for (int64_t j = 0; j < c; ++j) {
            r.dlogits.data()[i * c + j] =
                static_cast<T>((static_cast<double>(r.probs.data()[i * c + j]) -
                                static_cast<double>(onehot.data()[i * c + j])) /
                               n);
            if (onehot.data()[i * c + j] == T(1)) loss += lse - static_cast<double>(row[j]);
        }
    }
    r.loss = loss / n;
    return r;
}

}  // namespace oclbcp::nn
