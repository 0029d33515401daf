#pragma once

#include <cstdint>
#include <vector>

namespace oclbcp::img {

// Planar-free row-major grayscale image with intensities in [0, 1].
struct GrayImage {
    int height = 0;
    int width = 0;
    std::vector<double> data;

    GrayImage() = default;
    GrayImage(int h, int w, double fill = 0.0)
        : height(h), width(w), data(static_cast<size_t>(h) * w, fill) {}

    double& at(int y, int x) { return data[static_cast<size_t>(y) * width + x]; }
    const double& at(int y, int x) const { return data[static_cast<size_t>(y) * width + x]; }
    size_t pixels() const { return static_cast<size_t>(height) * width; }
};

// Interleaved 8-bit RGB image.
struct ColorImage {
    int height = 0;
    int width = 0;
    std::vector<uint8_t> data;  // r, g, b per pixel

    ColorImage() = default;
    ColorImage(int h, int w) : height(h), width(w), data(static_cast<size_t>(h) * w * 3, 0) {}

    uint8_t& at(int y, int x, int c) {
        return data[(static_cast<size_t>(y) * width + x) * 3 + c];
    }
    const uint8_t& at(int y, int x, int c) const {
        return data[(static_cast<size_t>(y) * width + x) * 3 + c];
    }
    size_t pixels() const { return static_cast<size_t>(height) * width; }
};

// Rec. 601 luma: 0.299 R + 0.587 G + 0.114 B, normalized to [0, 1].
GrayImage to_gray(const ColorImage& src);

// Bilinear resampling with pixel-center alignment and edge clamping.
// Resizing to the source size returns a bit-identical copy.
GrayImage resize_bilinear(const GrayImage& src, int out_h, int out_w);
ColorImage resize_bilinear(const ColorImage& src, int out_h, int out_w);

}  // namespace oclbcp::img
