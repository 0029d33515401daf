#include "oclbcp/image.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace oclbcp::img {

GrayImage to_gray(const ColorImage& src) {
    if (src.height < 1 || src.width < 1) throw std::invalid_argument("to_gray: empty image");
    GrayImage out(src.height, src.width);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < src.height; ++y) {
        for (int x = 0; x < src.width; ++x) {
            double v = 0.299 * src.at(y, x, 0) + 0.587 * src.at(y, x, 1) + 0.114 * src.at(y, x, 2);
            out.at(y, x) = std::clamp(v / 255.0, 0.0, 1.0);
        }
    }
    return out;
}

namespace {

// Maps output pixel centers onto source coordinates and clamps the sample
// points to the image border.
struct Axis {
    int i0, i1;
    double w1;  // weight of the i1 sample
};

inline Axis axis_sample(int out_i, int out_n, int src_n) {
    double scale = static_cast<double>(src_n) / out_n;
    double pos = (out_i + 0.5) * scale - 0.5;
    double f = std::floor(pos);
    int i0 = static_cast<int>(f);
    int i1 = i0 + 1;
    double w1 = pos - f;
    i0 = std::clamp(i0, 0, src_n - 1);
    i1 = std::clamp(i1, 0, src_n - 1);
    return {i0, i1, w1};
}

inline double lerp(double a, double b, double t) { return a + t * (b - a); }

}  // namespace

GrayImage resize_bilinear(const GrayImage& src, int out_h, int out_w) {
    if (src.height < 1 || src.width < 1) throw std::invalid_argument("resize: empty image");
    if (out_h < 1 || out_w < 1) throw std::invalid_argument("resize: bad target size");
    if (out_h == src.height && out_w == src.width) return src;
    GrayImage out(out_h, out_w);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < out_h; ++y) {
        Axis ay = axis_sample(y, out_h, src.height);
        for (int x = 0; x < out_w; ++x) {
            Axis ax = axis_sample(x, out_w, src.width);
            double top = lerp(src.at(ay.i0, ax.i0), src.at(ay.i0, ax.i1), ax.w1);
            double bot = lerp(src.at(ay.i1, ax.i0), src.at(ay.i1, ax.i1), ax.w1);
            out.at(y, x) = lerp(top, bot, ay.w1);
        }
    }
    return out;
}

ColorImage resize_bilinear(const ColorImage& src, int out_h, int out_w) {
    if (src.height < 1 || src.width < 1) throw std::invalid_argument("resize: empty image");
    if (out_h < 1 || out_w < 1) throw std::invalid_argument("resize: bad target size");
    if (out_h == src.height && out_w == src.width) return src;
    ColorImage out(out_h, out_w);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < out_h; ++y) {
        Axis ay = axis_sample(y, out_h, src.height);
        for (int x = 0; x < out_w; ++x) {
            Axis ax = axis_sample(x, out_w, src.width);
            for (int c = 0; c < 3; ++c) {
                double top = lerp(src.at(ay.i0, ax.i0, c), src.at(ay.i0, ax.i1, c), ax.w1);
                double bot = lerp(src.at(ay.i1, ax.i0, c), src.at(ay.i1, ax.i1, c), ax.w1);
                double v = lerp(top, bot, ay.w1);
                out.at(y, x, c) = static_cast<uint8_t>(std::clamp(std::lround(v), 0L, 255L));
            }
        }
    }
    return out;
}

}  // namespace oclbcp::img
