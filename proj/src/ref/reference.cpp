#include "oclbcp/ref/reference.hpp"

#include <algorithm>
#include <cmath>

namespace oclbcp::ref {

codes::CodeMap descriptor_map_naive(const img::GrayImage& image, double t) {
    int h = image.height, w = image.width;
    codes::CodeMap out(h, w);
    auto pixel = [&](int y, int x) {
        return image.at(std::clamp(y, 0, h - 1), std::clamp(x, 0, w - 1));
    };
    // Neighbor offsets clockwise from top-left, matching the bit order.
    const int dy[8] = {-1, -1, -1, 0, 1, 1, 1, 0};
    const int dx[8] = {-1, 0, 1, 1, 1, 0, -1, -1};
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double c = pixel(y, x);
            uint8_t lbp = 0, pos = 0, neg = 0;
            for (int i = 0; i < 8; ++i) {
                double v = pixel(y + dy[i], x + dx[i]);
                if (v >= c) lbp |= static_cast<uint8_t>(1u << i);
                if (v >= c + t) pos |= static_cast<uint8_t>(1u << i);
                if (v <= c - t) neg |= static_cast<uint8_t>(1u << i);
            }
            uint8_t a1 = static_cast<uint8_t>((pos & 0x55) | (lbp & 0xaa));
            uint8_t a2 = static_cast<uint8_t>((pos & 0xaa) | (lbp & 0x55));
            uint8_t a3 = static_cast<uint8_t>((neg & 0x55) | (lbp & 0xaa));
            uint8_t a4 = static_cast<uint8_t>((neg & 0xaa) | (lbp & 0x55));
            out.at(y, x) = std::max(std::max(a1, a2), std::max(a3, a4));
        }
    }
    return out;
}

std::vector<std::complex<double>> dft2_naive(const std::vector<double>& x, int h, int w) {
    std::vector<std::complex<double>> out(static_cast<size_t>(h) * w);
    const double tau = 6.283185307179586476925286766559;
    for (int ky = 0; ky < h; ++ky)
        for (int kx = 0; kx < w; ++kx) {
            std::complex<double> s{0.0, 0.0};
            for (int y = 0; y < h; ++y)
                for (int xx = 0; xx < w; ++xx) {
                    double ang = -tau * (static_cast<double>(ky) * y / h +
                                         static_cast<double>(kx) * xx / w);
                    s += x[static_cast<size_t>(y) * w + xx] *
                         std::complex<double>(std::cos(ang), std::sin(ang));
                }
            out[static_cast<size_t>(ky) * w + kx] = s;
        }
    return out;
}

}  // namespace oclbcp::ref
