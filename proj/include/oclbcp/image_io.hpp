#pragma once

#include <string>

#include "oclbcp/image.hpp"

namespace oclbcp::img {

// Reads an 8-bit image file into interleaved RGB. PNG (any color type,
// expanded to RGB) and binary PPM (P6) are supported; 16-bit channels are
// reduced to 8 bits. Throws std::runtime_error on I/O or format problems.
ColorImage load_image(const std::string& path);

// Writes an interleaved RGB image as an 8-bit PNG. The encoder is configured
// for reproducible output: fixed filtering and compression, no timestamps or
// ancillary chunks.
void save_png(const ColorImage& image, const std::string& path);

// Writes a single-channel 8-bit grayscale PNG from raw bytes (row-major).
void save_gray_png(const uint8_t* data, int height, int width, const std::string& path);

}  // namespace oclbcp::img
