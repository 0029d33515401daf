#include "oclbcp/image_io.hpp"

#include <png.h>

#include <cctype>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <vector>

namespace oclbcp::img {

namespace {

struct FileCloser {
    void operator()(FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw std::runtime_error(path + ": " + what);
}

ColorImage load_png(const std::string& path, FILE* f) {
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) fail(path, "png reader allocation failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        fail(path, "png info allocation failed");
    }
    std::vector<png_bytep> rows;
    ColorImage out;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail(path, "png decode error");
    }
    png_init_io(png, f);
    png_read_info(png, info);

    png_uint_32 w = png_get_image_width(png, info);
    png_uint_32 h = png_get_image_height(png, info);
    int color = png_get_color_type(png, info);
    int depth = png_get_bit_depth(png, info);

    if (depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA)
        png_set_gray_to_rgb(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);

    if (png_get_rowbytes(png, info) != w * 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail(path, "unexpected png row layout");
    }
    out = ColorImage(static_cast<int>(h), static_cast<int>(w));
    rows.resize(h);
    for (png_uint_32 y = 0; y < h; ++y) rows[y] = out.data.data() + static_cast<size_t>(y) * w * 3;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return out;
}

int ppm_next_int(std::istream& in, const std::string& path) {
    // Skips whitespace and '#' comments between header tokens.
    for (;;) {
        int c = in.peek();
        if (c == EOF) fail(path, "truncated ppm header");
        if (std::isspace(c)) {
            in.get();
        } else if (c == '#') {
            std::string line;
            std::getline(in, line);
        } else {
            break;
        }
    }
    int v = 0;
    in >> v;
    if (!in) fail(path, "bad ppm header");
    return v;
}

ColorImage load_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(path, "cannot open");
    char m0 = 0, m1 = 0;
    in.get(m0);
    in.get(m1);
    if (m0 != 'P' || m1 != '6') fail(path, "not a P6 ppm");
    int w = ppm_next_int(in, path);
    int h = ppm_next_int(in, path);
    int maxval = ppm_next_int(in, path);
    if (w < 1 || h < 1 || maxval < 1 || maxval > 65535) fail(path, "bad ppm dimensions");
    in.get();  // single whitespace before raster
    ColorImage out(h, w);
    if (maxval < 256) {
        in.read(reinterpret_cast<char*>(out.data.data()), static_cast<std::streamsize>(out.data.size()));
        if (!in) fail(path, "truncated ppm raster");
    } else {
        std::vector<unsigned char> raw(out.data.size() * 2);
        in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
        if (!in) fail(path, "truncated ppm raster");
        for (size_t i = 0; i < out.data.size(); ++i) {
            int v = (raw[2 * i] << 8) | raw[2 * i + 1];
            out.data[i] = static_cast<uint8_t>(v * 255 / maxval);
        }
    }
    return out;
}

}  // namespace

ColorImage load_image(const std::string& path) {
    FilePtr f(std::fopen(path.c_str(), "rb"));
    if (!f) fail(path, "cannot open");
    unsigned char sig[8] = {0};
    size_t got = std::fread(sig, 1, 8, f.get());
    if (got >= 2 && sig[0] == 'P' && sig[1] == '6') {
        f.reset();
        return load_ppm(path);
    }
    if (got == 8 && !png_sig_cmp(sig, 0, 8)) {
        std::rewind(f.get());
        return load_png(path, f.get());
    }
    fail(path, "unsupported image format");
}

namespace {

void write_png_impl(const uint8_t* data, int height, int width, int channels,
                    const std::string& path) {
    if (height < 1 || width < 1) fail(path, "empty image");
    FilePtr f(std::fopen(path.c_str(), "wb"));
    if (!f) fail(path, "cannot open for writing");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) fail(path, "png writer allocation failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        fail(path, "png info allocation failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        fail(path, "png encode error");
    }
    png_init_io(png, f.get());
    // Deterministic output: fixed filter and compression level, no tIME.
    png_set_filter(png, 0, PNG_FILTER_NONE);
    png_set_compression_level(png, 6);
    int type = channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
                 type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_bytep> rows(height);
    for (int y = 0; y < height; ++y)
        rows[y] = const_cast<png_bytep>(data + static_cast<size_t>(y) * width * channels);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

}  // namespace

void save_png(const ColorImage& image, const std::string& path) {
    write_png_impl(image.data.data(), image.height, image.width, 3, path);
}

void save_gray_png(const uint8_t* data, int height, int width, const std::string& path) {
    write_png_impl(data, height, width, 1, path);
}

}  // namespace oclbcp::img
