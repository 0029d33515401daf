#include "oclbcp/codes.hpp"

#include <algorithm>
#include <stdexcept>

namespace oclbcp::codes {

namespace {

// Window index of each neighbor bit (clockwise from top-left).
constexpr int kNeighborIndex[8] = {0, 1, 2, 5, 8, 7, 6, 3};

}  // namespace

uint8_t lbp_code(const Window3& w) {
    double c = w[4];
    uint8_t code = 0;
    for (int i = 0; i < 8; ++i)
        if (w[kNeighborIndex[i]] >= c) code |= static_cast<uint8_t>(1u << i);
    return code;
}

LtpPair ltp_code(const Window3& w, double t) {
    if (t < 0.0) throw std::invalid_argument("ltp_code: negative threshold");
    double c = w[4];
    LtpPair p;
    for (int i = 0; i < 8; ++i) {
        double v = w[kNeighborIndex[i]];
        if (v >= c + t) p.positive |= static_cast<uint8_t>(1u << i);
        if (v <= c - t) p.negative |= static_cast<uint8_t>(1u << i);
    }
    return p;
}

Groups orthogonal_combine(uint8_t lbp, const LtpPair& ltp) {
    Groups g;
    g.a1 = static_cast<uint8_t>(even_bits(ltp.positive) | odd_bits(lbp));
    g.a2 = static_cast<uint8_t>(odd_bits(ltp.positive) | even_bits(lbp));
    g.a3 = static_cast<uint8_t>(even_bits(ltp.negative) | odd_bits(lbp));
    g.a4 = static_cast<uint8_t>(odd_bits(ltp.negative) | even_bits(lbp));
    return g;
}

CodeMap descriptor_map(const img::GrayImage& image, double t) {
    if (image.height < 3 || image.width < 3)
        throw std::invalid_argument("descriptor_map: image smaller than 3x3");
    if (t < 0.0) throw std::invalid_argument("descriptor_map: negative threshold");
    int h = image.height, w = image.width;
    CodeMap out(h, w);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            Window3 win;
            for (int dy = -1; dy <= 1; ++dy) {
                int sy = std::clamp(y + dy, 0, h - 1);
                for (int dx = -1; dx <= 1; ++dx) {
                    int sx = std::clamp(x + dx, 0, w - 1);
                    win[static_cast<size_t>(dy + 1) * 3 + (dx + 1)] = image.at(sy, sx);
                }
            }
            out.at(y, x) = combined_code(orthogonal_combine(lbp_code(win), ltp_code(win, t)));
        }
    }
    return out;
}

}  // namespace oclbcp::codes
