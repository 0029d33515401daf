#pragma once

#include <array>
#include <cstdint>

#include "oclbcp/image.hpp"

namespace oclbcp::codes {

// Default tolerance band for the ternary code, expressed in [0, 1] intensity.
inline constexpr double kDefaultLtpThreshold = 5.0 / 255.0;

// A 3x3 neighborhood in row-major order; index 4 is the center pixel.
using Window3 = std::array<double, 9>;

// Neighbor bit order is clockwise starting at the top-left pixel:
// bit 0 = (-1,-1), 1 = (-1,0), 2 = (-1,+1), 3 = (0,+1),
// bit 4 = (+1,+1), 5 = (+1,0), 6 = (+1,-1), 7 = (0,-1).
// Bit i is set when neighbor i >= center.
uint8_t lbp_code(const Window3& window);

// Ternary split of the same neighborhood: the positive byte marks neighbors
// >= center + t, the negative byte marks neighbors <= center - t. A neighbor
// inside the band contributes to neither byte.
struct LtpPair {
    uint8_t positive = 0;
    uint8_t negative = 0;
};
LtpPair ltp_code(const Window3& window, double t = kDefaultLtpThreshold);

// Even-position bits of a code (bits 0,2,4,6) and odd-position bits
// (bits 1,3,5,7).
inline uint8_t even_bits(uint8_t c) { return c & 0x55; }
inline uint8_t odd_bits(uint8_t c) { return c & 0xaa; }

// The four cross-operator combinations: each group takes the even bits of
// one code and the odd bits of the other, pairing the binary code with one
// half of the ternary code.
struct Groups {
    uint8_t a1, a2, a3, a4;
};
Groups orthogonal_combine(uint8_t lbp, const LtpPair& ltp);

// Per-pixel descriptor code: the elementwise maximum of the four groups.
inline uint8_t combined_code(const Groups& g) {
    uint8_t m = g.a1 > g.a2 ? g.a1 : g.a2;
    uint8_t n = g.a3 > g.a4 ? g.a3 : g.a4;
    return m > n ? m : n;
}

struct CodeMap {
    int height = 0;
    int width = 0;
    std::vector<uint8_t> codes;

    CodeMap() = default;
    CodeMap(int h, int w) : height(h), width(w), codes(static_cast<size_t>(h) * w, 0) {}
    uint8_t& at(int y, int x) { return codes[static_cast<size_t>(y) * width + x]; }
    const uint8_t& at(int y, int x) const { return codes[static_cast<size_t>(y) * width + x]; }
};

// Dense code map over a grayscale image. Border pixels use replicated edge
// values for the out-of-image neighbors. Requires at least a 3x3 input.
CodeMap descriptor_map(const img::GrayImage& image, double t = kDefaultLtpThreshold);

}  // namespace oclbcp::codes
