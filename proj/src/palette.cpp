#include "oclbcp/palette.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace oclbcp::palette {

static_assert(std::endian::native == std::endian::little,
              "palette file i/o assumes a little-endian host");

Distribution code_to_distribution(uint8_t code) {
    Distribution d{};
    int bits = std::popcount(static_cast<unsigned>(code));
    if (bits == 0) {
        d.fill(1.0 / kBinCount);
        return d;
    }
    double mass = 1.0 / bits;
    for (int i = 0; i < kBinCount; ++i)
        if (code & (1u << i)) d[i] = mass;
    return d;
}

double emd_circular(const Distribution& p, const Distribution& q) {
    double sp = 0.0, sq = 0.0;
    for (int i = 0; i < kBinCount; ++i) {
        if (p[i] < 0.0 || q[i] < 0.0)
            throw std::invalid_argument("emd_circular: negative mass");
        sp += p[i];
        sq += q[i];
    }
    if (std::abs(sp - 1.0) > 1e-9 || std::abs(sq - 1.0) > 1e-9)
        throw std::invalid_argument("emd_circular: distributions must sum to 1");

    // Cutting the cycle at position c turns the circular problem into a
    // linear one whose cost is the sum of absolute prefix differences. The
    // optimum over all cuts is the circular optimum, and with n bins the
    // prefix sums S_k only need shifting by S_c per candidate cut.
    double s[kBinCount];
    double acc = 0.0;
    for (int i = 0; i < kBinCount; ++i) {
        acc += p[i] - q[i];
        s[i] = acc;
    }
    double best = -1.0;
    for (int c = 0; c < kBinCount; ++c) {
        double cost = 0.0;
        for (int k = 0; k < kBinCount; ++k) cost += std::abs(s[k] - s[c]);
        if (best < 0.0 || cost < best) best = cost;
    }
    return best;
}

CodeDistanceMatrix build_distance_matrix() {
    CodeDistanceMatrix m;
    m.d.assign(static_cast<size_t>(kCodeCount) * kCodeCount, 0.0);
    std::array<Distribution, kCodeCount> dist;
    for (int c = 0; c < kCodeCount; ++c) dist[c] = code_to_distribution(static_cast<uint8_t>(c));
#pragma omp parallel for schedule(static)
    for (int u = 0; u < kCodeCount; ++u)
        for (int v = 0; v < kCodeCount; ++v)
            m.d[static_cast<size_t>(u) * kCodeCount + v] = emd_circular(dist[u], dist[v]);
    return m;
}

namespace {

// Cyclic Jacobi eigendecomposition of a symmetric matrix. `a` is destroyed;
// on return its diagonal holds the eigenvalues and `v` the eigenvectors
// (columns). Converges when the off-diagonal Frobenius norm falls below tol.
void jacobi_eigen(std::vector<double>& a, std::vector<double>& v, int n, double tol = 1e-10,
                  int max_sweeps = 100) {
    auto at = [&](std::vector<double>& m, int i, int j) -> double& {
        return m[static_cast<size_t>(i) * n + j];
    };
    v.assign(static_cast<size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) at(v, i, i) = 1.0;

    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) off += 2.0 * at(a, i, j) * at(a, i, j);
        if (std::sqrt(off) < tol) return;

        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                double apq = at(a, p, q);
                if (apq == 0.0) continue;
                double theta = (at(a, q, q) - at(a, p, p)) / (2.0 * apq);
                double t = (theta >= 0.0 ? 1.0 : -1.0) /
                           (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;
                double tau = s / (1.0 + c);
                double app = at(a, p, p), aqq = at(a, q, q);
                at(a, p, p) = app - t * apq;
                at(a, q, q) = aqq + t * apq;
                at(a, p, q) = 0.0;
                at(a, q, p) = 0.0;
                for (int i = 0; i < n; ++i) {
                    if (i != p && i != q) {
                        double aip = at(a, i, p), aiq = at(a, i, q);
                        at(a, i, p) = aip - s * (aiq + tau * aip);
                        at(a, i, q) = aiq + s * (aip - tau * aiq);
                        at(a, p, i) = at(a, i, p);
                        at(a, q, i) = at(a, i, q);
                    }
                    double vip = at(v, i, p), viq = at(v, i, q);
                    at(v, i, p) = vip - s * (viq + tau * vip);
                    at(v, i, q) = viq + s * (vip - tau * viq);
                }
            }
        }
    }
}

}  // namespace

std::vector<double> classical_mds(const std::vector<double>& dist, int n, int dims) {
    if (n < 1 || dims < 1 || dist.size() != static_cast<size_t>(n) * n)
        throw std::invalid_argument("classical_mds: bad dimensions");

    // Double centering of squared distances: B = -1/2 J D^2 J.
    std::vector<double> d2(dist.size());
    for (size_t i = 0; i < dist.size(); ++i) d2[i] = dist[i] * dist[i];
    std::vector<double> rowmean(n, 0.0);
    double grand = 0.0;
    for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int j = 0; j < n; ++j) s += d2[static_cast<size_t>(i) * n + j];
        rowmean[i] = s / n;
        grand += s;
    }
    grand /= static_cast<double>(n) * n;
    std::vector<double> b(dist.size());
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            b[static_cast<size_t>(i) * n + j] =
                -0.5 * (d2[static_cast<size_t>(i) * n + j] - rowmean[i] - rowmean[j] + grand);

    std::vector<double> v;
    jacobi_eigen(b, v, n);

    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](int x, int y) {
        return b[static_cast<size_t>(x) * n + x] > b[static_cast<size_t>(y) * n + y];
    });

    double lmax = 0.0;
    for (int i = 0; i < n; ++i)
        lmax = std::max(lmax, std::abs(b[static_cast<size_t>(i) * n + i]));
    double tol = 1e-9 * std::max(lmax, 1.0);

    std::vector<double> out(static_cast<size_t>(n) * dims, 0.0);
    for (int c = 0; c < dims; ++c) {
        if (c >= n) break;
        int e = order[c];
        double lambda = b[static_cast<size_t>(e) * n + e];
        if (lambda < -tol) {
            std::fprintf(stderr,
                         "classical_mds: eigenvalue %d is negative (%.3e); zero-filling axis\n",
                         c, lambda);
            continue;
        }
        if (lambda <= tol) continue;
        double scale = std::sqrt(lambda);
        for (int i = 0; i < n; ++i)
            out[static_cast<size_t>(i) * dims + c] = v[static_cast<size_t>(i) * n + e] * scale;

        // Sign convention: the largest-magnitude coordinate on each axis is
        // positive; ties resolve to the first occurrence.
        int imax = 0;
        double amax = -1.0;
        for (int i = 0; i < n; ++i) {
            double m = std::abs(out[static_cast<size_t>(i) * dims + c]);
            if (m > amax) {
                amax = m;
                imax = i;
            }
        }
        if (out[static_cast<size_t>(imax) * dims + c] < 0.0)
            for (int i = 0; i < n; ++i) out[static_cast<size_t>(i) * dims + c] *= -1.0;
    }
    return out;
}

Embedding embed_codes(const CodeDistanceMatrix& dist) {
    auto coords = classical_mds(dist.d, kCodeCount, 3);
    Embedding e;
    for (int c = 0; c < kCodeCount; ++c)
        for (int k = 0; k < 3; ++k) e.pts[c][k] = coords[static_cast<size_t>(c) * 3 + k];
    return e;
}

ColorPalette build_pair_matrix(const Embedding& embedding) {
    ColorPalette p;
    p.embedding = embedding;
    p.pair.assign(static_cast<size_t>(kCodeCount) * kCodeCount * 3, 0);

    // Per-channel affine map of embedding coordinates onto [0, 127].
    std::array<std::array<double, kCodeCount>, 3> m{};
    for (int k = 0; k < 3; ++k) {
        double lo = embedding.pts[0][k], hi = embedding.pts[0][k];
        for (int c = 1; c < kCodeCount; ++c) {
            lo = std::min(lo, embedding.pts[c][k]);
            hi = std::max(hi, embedding.pts[c][k]);
        }
        if (hi - lo < 1e-12) {
            for (int c = 0; c < kCodeCount; ++c) m[k][c] = 0.0;
        } else {
            double inv = 127.0 / (hi - lo);
            for (int c = 0; c < kCodeCount; ++c) m[k][c] = (embedding.pts[c][k] - lo) * inv;
        }
    }

    for (int u = 0; u < kCodeCount; ++u)
        for (int v = 0; v < kCodeCount; ++v)
            for (int k = 0; k < 3; ++k)
                p.pair[(static_cast<size_t>(u) * kCodeCount + v) * 3 + k] =
                    static_cast<uint8_t>(std::floor(m[k][u] + m[k][v]));
    return p;
}

ColorPalette build_palette() { return build_pair_matrix(embed_codes(build_distance_matrix())); }

double embedding_distance_correlation(const CodeDistanceMatrix& dist, const Embedding& e) {
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    long n = 0;
    for (int u = 0; u < kCodeCount; ++u) {
        for (int v = u + 1; v < kCodeCount; ++v) {
            double x = dist.at(u, v);
            double dx = e.pts[u][0] - e.pts[v][0];
            double dy = e.pts[u][1] - e.pts[v][1];
            double dz = e.pts[u][2] - e.pts[v][2];
            double y = std::sqrt(dx * dx + dy * dy + dz * dz);
            sx += x;
            sy += y;
            sxx += x * x;
            syy += y * y;
            sxy += x * y;
            ++n;
        }
    }
    double cov = sxy - sx * sy / n;
    double vx = sxx - sx * sx / n;
    double vy = syy - sy * sy / n;
    return cov / std::sqrt(vx * vy);
}

img::ColorImage colorize(const codes::CodeMap& map, const ColorPalette& palette) {
    if (map.height < 1 || map.width < 1) throw std::invalid_argument("colorize: empty code map");
    img::ColorImage out(map.height, map.width);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < map.height; ++y) {
        for (int x = 0; x < map.width; ++x) {
            uint8_t c = map.at(y, x);
            const uint8_t* rgb = palette.color(c, c);
            out.at(y, x, 0) = rgb[0];
            out.at(y, x, 1) = rgb[1];
            out.at(y, x, 2) = rgb[2];
        }
    }
    return out;
}

namespace {

constexpr char kPaletteMagic[4] = {'O', 'C', 'L', 'B'};
constexpr uint32_t kPaletteVersion = 1;

}  // namespace

void save_palette(const ColorPalette& palette, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error(path + ": cannot open for writing");
    out.write(kPaletteMagic, 4);
    uint32_t ver = kPaletteVersion;
    out.write(reinterpret_cast<const char*>(&ver), 4);
    for (int c = 0; c < kCodeCount; ++c)
        out.write(reinterpret_cast<const char*>(palette.embedding.pts[c].data()), 3 * sizeof(double));
    out.write(reinterpret_cast<const char*>(palette.pair.data()),
              static_cast<std::streamsize>(palette.pair.size()));
    if (!out) throw std::runtime_error(path + ": write failed");
}

ColorPalette load_palette(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error(path + ": cannot open");
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kPaletteMagic, 4) != 0)
        throw std::runtime_error(path + ": not a palette file");
    uint32_t ver = 0;
    in.read(reinterpret_cast<char*>(&ver), 4);
    if (!in || ver != kPaletteVersion)
        throw std::runtime_error(path + ": unsupported palette version");
    ColorPalette p;
    for (int c = 0; c < kCodeCount; ++c)
        in.read(reinterpret_cast<char*>(p.embedding.pts[c].data()), 3 * sizeof(double));
    p.pair.assign(static_cast<size_t>(kCodeCount) * kCodeCount * 3, 0);
    in.read(reinterpret_cast<char*>(p.pair.data()), static_cast<std::streamsize>(p.pair.size()));
    if (!in) throw std::runtime_error(path + ": truncated palette file");
    return p;
}

img::ColorImage palette_swatch(const ColorPalette& palette) {
    img::ColorImage out(16, kCodeCount);
    for (int x = 0; x < kCodeCount; ++x) {
        const uint8_t* rgb = palette.color(static_cast<uint8_t>(x), static_cast<uint8_t>(x));
        for (int y = 0; y < 16; ++y)
            for (int c = 0; c < 3; ++c) out.at(y, x, c) = rgb[c];
    }
    return out;
}

}  // namespace oclbcp::palette
