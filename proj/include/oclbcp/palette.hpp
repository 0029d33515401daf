#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "oclbcp/codes.hpp"
#include "oclbcp/image.hpp"

namespace oclbcp::palette {

inline constexpr int kCodeCount = 256;
inline constexpr int kBinCount = 8;

// Mass distribution over the eight bit positions of a code, arranged on a
// circle. Set bits share unit mass uniformly; code 0 maps to the uniform
// distribution.
using Distribution = std::array<double, kBinCount>;
Distribution code_to_distribution(uint8_t code);

// Exact earth mover's distance between two distributions on the 8-cycle with
// hop-count ground distance. Computed by minimizing the linearized transport
// cost over all cut positions. Inputs must be nonnegative and sum to 1
// within 1e-9; otherwise std::invalid_argument is thrown.
double emd_circular(const Distribution& p, const Distribution& q);

// Dense 256 x 256 matrix of pairwise code distances.
struct CodeDistanceMatrix {
    std::vector<double> d;  // row-major kCodeCount^2
    double at(int u, int v) const { return d[static_cast<size_t>(u) * kCodeCount + v]; }
};
CodeDistanceMatrix build_distance_matrix();

// Classical (Torgerson) multidimensional scaling of an n x n distance matrix
// into `dims` coordinates: double-center the squared distances, take the top
// eigenpairs of the resulting Gram matrix (cyclic Jacobi), and scale each
// eigenvector by the square root of its eigenvalue. Eigenvalues that are
// negative beyond tolerance produce zero-filled coordinates and a warning on
// stderr. Column signs are fixed so the entry of largest magnitude in each
// coordinate is positive.
std::vector<double> classical_mds(const std::vector<double>& dist, int n, int dims);

// 256 codes embedded in 3 dimensions.
struct Embedding {
    std::array<std::array<double, 3>, kCodeCount> pts{};
};

// Full palette: the embedding plus the quantized pair matrix mapping every
// ordered code pair (u, v) to an RGB color. Each embedding channel is
// affinely mapped to [0, 127] and the pair color is floor(m(u) + m(v)) per
// channel, so diagonal entries reach 254 at most.
struct ColorPalette {
    Embedding embedding;
    std::vector<uint8_t> pair;  // kCodeCount^2 * 3, u-major then v then channel

    const uint8_t* color(uint8_t u, uint8_t v) const {
        return &pair[(static_cast<size_t>(u) * kCodeCount + v) * 3];
    }
};

Embedding embed_codes(const CodeDistanceMatrix& dist);
ColorPalette build_pair_matrix(const Embedding& embedding);

// Distance matrix -> embedding -> pair matrix in one call.
ColorPalette build_palette();

// Pearson correlation between code pair distances and the Euclidean
// distances of their embedded points, over all unordered pairs.
double embedding_distance_correlation(const CodeDistanceMatrix& dist, const Embedding& embedding);

// Colorizes a code map through the palette diagonal: pixel p takes the color
// of the pair (code(p), code(p)).
img::ColorImage colorize(const codes::CodeMap& map, const ColorPalette& palette);

// Versioned little-endian binary palette file ("OCLB" magic, format version,
// raw embedding doubles, raw pair matrix bytes).
void save_palette(const ColorPalette& palette, const std::string& path);
ColorPalette load_palette(const std::string& path);

// 256 x 16 swatch strip of the diagonal colors, one column per code.
img::ColorImage palette_swatch(const ColorPalette& palette);

}  // namespace oclbcp::palette
