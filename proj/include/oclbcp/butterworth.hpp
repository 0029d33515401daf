#pragma once

#include <complex>
#include <vector>

#include "oclbcp/image.hpp"

namespace oclbcp::img {

// High-frequency emphasis filter applied in the log domain. Gains below 1 on
// low frequencies suppress slowly varying illumination; gains above 1 on high
// frequencies sharpen reflectance detail.
struct ButterworthConfig {
    int order = 2;
    double cutoff = 0.05;     // normalized frequency of the transition
    double high_boost = 1.5;  // gain as |f| -> max
    double low_gain = 0.5;    // gain at f = 0
};

// Radial transfer function H(f) for a normalized frequency magnitude f >= 0.
// Monotone nondecreasing in f, H(0) = low_gain, H(inf) -> high_boost.
double butterworth_gain(const ButterworthConfig& cfg, double freq);

// Dense DFT pair used by the filter (row-column decomposition with
// precomputed twiddle tables, O(n^3) per axis pair). Row-major h x w grids.
std::vector<std::complex<double>> dft2(const std::vector<double>& x, int h, int w);
std::vector<double> idft2_real(const std::vector<std::complex<double>>& f, int h, int w);

// Homomorphic pipeline: epsilon-floored log, forward transform, radial
// Butterworth weighting, inverse transform, exp, then an affine rescale of
// the result to [0, 1]. Constant images are returned unchanged (clamped).
// Throws std::invalid_argument on empty input, std::runtime_error on
// non-finite pixels.
GrayImage butterworth_homomorphic(const GrayImage& src, const ButterworthConfig& cfg);

}  // namespace oclbcp::img
