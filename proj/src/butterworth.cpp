#include "oclbcp/butterworth.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace oclbcp::img {

namespace {

constexpr double kLogFloor = 1e-6;
constexpr double kPi = 3.141592653589793238462643383279502884;

// exp(-2*pi*i*j/n) for j = 0..n-1.
std::vector<std::complex<double>> twiddle_table(int n) {
    std::vector<std::complex<double>> t(n);
    for (int j = 0; j < n; ++j) {
        double a = -2.0 * kPi * j / n;
        t[j] = {std::cos(a), std::sin(a)};
    }
    return t;
}

// One-dimensional dense DFT of every row of a row-major h x w complex grid.
// sign = +1 transforms, sign = -1 inverts (conjugate twiddles, no scaling).
void dft_rows(std::vector<std::complex<double>>& a, int h, int w, int sign) {
    auto tw = twiddle_table(w);
    std::vector<std::complex<double>> tmp(static_cast<size_t>(h) * w);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
        const std::complex<double>* row = &a[static_cast<size_t>(y) * w];
        std::complex<double>* out = &tmp[static_cast<size_t>(y) * w];
        for (int k = 0; k < w; ++k) {
            std::complex<double> s{0.0, 0.0};
            long idx = 0;
            for (int n = 0; n < w; ++n) {
                std::complex<double> t = tw[idx];
                if (sign < 0) t = std::conj(t);
                s += row[n] * t;
                idx += k;
                if (idx >= w) idx -= w;
            }
            out[k] = s;
        }
    }
    a.swap(tmp);
}

void dft_cols(std::vector<std::complex<double>>& a, int h, int w, int sign) {
    auto tw = twiddle_table(h);
    std::vector<std::complex<double>> tmp(static_cast<size_t>(h) * w);
#pragma omp parallel for schedule(static)
    for (int x = 0; x < w; ++x) {
        for (int k = 0; k < h; ++k) {
            std::complex<double> s{0.0, 0.0};
            long idx = 0;
            for (int n = 0; n < h; ++n) {
                std::complex<double> t = tw[idx];
                if (sign < 0) t = std::conj(t);
                s += a[static_cast<size_t>(n) * w + x] * t;
                idx += k;
                if (idx >= h) idx -= h;
            }
            tmp[static_cast<size_t>(k) * w + x] = s;
        }
    }
    a.swap(tmp);
}

}  // namespace

double butterworth_gain(const ButterworthConfig& cfg, double freq) {
    if (cfg.order < 1 || cfg.cutoff <= 0.0)
        throw std::invalid_argument("butterworth_gain: bad config");
    double r = freq / cfg.cutoff;
    double highpass = 1.0 - 1.0 / (1.0 + std::pow(r, 2.0 * cfg.order));
    return cfg.low_gain + (cfg.high_boost - cfg.low_gain) * highpass;
}

std::vector<std::complex<double>> dft2(const std::vector<double>& x, int h, int w) {
    if (h < 1 || w < 1 || x.size() != static_cast<size_t>(h) * w)
        throw std::invalid_argument("dft2: bad dimensions");
    std::vector<std::complex<double>> a(x.size());
    for (size_t i = 0; i < x.size(); ++i) a[i] = {x[i], 0.0};
    dft_rows(a, h, w, +1);
    dft_cols(a, h, w, +1);
    return a;
}

std::vector<double> idft2_real(const std::vector<std::complex<double>>& f, int h, int w) {
    if (h < 1 || w < 1 || f.size() != static_cast<size_t>(h) * w)
        throw std::invalid_argument("idft2_real: bad dimensions");
    std::vector<std::complex<double>> a = f;
    dft_rows(a, h, w, -1);
    dft_cols(a, h, w, -1);
    std::vector<double> out(f.size());
    double scale = 1.0 / (static_cast<double>(h) * w);
#pragma omp parallel for schedule(static)
    for (long i = 0; i < static_cast<long>(out.size()); ++i) out[i] = a[i].real() * scale;
    return out;
}

GrayImage butterworth_homomorphic(const GrayImage& src, const ButterworthConfig& cfg) {
    if (src.height < 1 || src.width < 1)
        throw std::invalid_argument("butterworth_homomorphic: empty image");
    for (double v : src.data)
        if (!std::isfinite(v)) throw std::runtime_error("butterworth_homomorphic: non-finite pixel");

    int h = src.height, w = src.width;

    // Log domain with an epsilon floor so zero pixels stay defined.
    std::vector<double> logim(src.pixels());
#pragma omp parallel for schedule(static)
    for (long i = 0; i < static_cast<long>(logim.size()); ++i)
        logim[i] = std::log(std::max(src.data[i], kLogFloor));

    auto spec = dft2(logim, h, w);

    // Radial weighting on the unshifted spectrum; frequency components are
    // measured from the nearest spectral origin along each axis.
#pragma omp parallel for schedule(static)
    for (int ky = 0; ky < h; ++ky) {
        double fy = static_cast<double>(std::min(ky, h - ky)) / h;
        for (int kx = 0; kx < w; ++kx) {
            double fx = static_cast<double>(std::min(kx, w - kx)) / w;
            double g = butterworth_gain(cfg, std::sqrt(fy * fy + fx * fx));
            spec[static_cast<size_t>(ky) * w + kx] *= g;
        }
    }

    auto filtered = idft2_real(spec, h, w);

    GrayImage out(h, w);
    double lo = std::exp(filtered[0]);
    double hi = lo;
    for (size_t i = 0; i < filtered.size(); ++i) {
        double e = std::exp(filtered[i]);
        out.data[i] = e;
        lo = std::min(lo, e);
        hi = std::max(hi, e);
    }
    if (hi - lo < 1e-12) {
        // Degenerate dynamic range: the affine rescale is undefined, so the
        // input comes back unchanged apart from clamping.
        GrayImage same = src;
        for (double& v : same.data) v = std::clamp(v, 0.0, 1.0);
        return same;
    }
    double inv = 1.0 / (hi - lo);
#pragma omp parallel for schedule(static)
    for (long i = 0; i < static_cast<long>(out.data.size()); ++i)
        out.data[i] = (out.data[i] - lo) * inv;
    return out;
}

}  // namespace oclbcp::img
