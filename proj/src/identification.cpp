#include "oclbcp/identification.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace oclbcp::ident {

double side_score(const std::vector<double>& gallery, const std::vector<double>& probe,
                  ScoreMode mode) {
    if (gallery.size() != probe.size() || gallery.empty())
        throw std::invalid_argument("side_score: dimension mismatch");
    double dot = 0.0, ng = 0.0, np = 0.0;
    for (size_t i = 0; i < gallery.size(); ++i) {
        dot += gallery[i] * probe[i];
        ng += gallery[i] * gallery[i];
        np += probe[i] * probe[i];
    }
    if (ng <= 0.0 || np <= 0.0) throw std::invalid_argument("side_score: zero-norm vector");
    double cosv = dot / (std::sqrt(ng) * std::sqrt(np));
    return mode == ScoreMode::cosine_similarity ? cosv : 1.0 - cosv;
}

double fuse_lr(const GalleryEntry& g, const std::vector<double>& probe_left,
               const std::vector<double>& probe_right, ScoreMode mode) {
    return side_score(g.left, probe_left, mode) + side_score(g.right, probe_right, mode);
}

namespace {

inline bool better(double a, double b, ScoreMode mode) {
    return mode == ScoreMode::cosine_similarity ? a > b : a < b;
}

}  // namespace

std::vector<RankedMatch> identify(const std::vector<GalleryEntry>& gallery, const Probe& probe,
                                  ScoreMode mode) {
    if (gallery.empty()) throw std::invalid_argument("identify: empty gallery");
    std::vector<RankedMatch> out;
    out.reserve(gallery.size());
    for (const auto& g : gallery) {
        double s;
        if (!probe.left.empty() && !probe.right.empty())
            s = fuse_lr(g, probe.left, probe.right, mode);
        else if (!probe.left.empty())
            s = side_score(g.left, probe.left, mode);
        else if (!probe.right.empty())
            s = side_score(g.right, probe.right, mode);
        else
            throw std::invalid_argument("identify: probe has no score vectors");
        out.push_back({g.subject, s});
    }
    std::sort(out.begin(), out.end(), [&](const RankedMatch& a, const RankedMatch& b) {
        if (a.score != b.score) return better(a.score, b.score, mode);
        return a.subject < b.subject;
    });
    return out;
}

CmcCurve cmc(const std::vector<Repetition>& reps, ScoreMode mode) {
    if (reps.empty()) throw std::invalid_argument("cmc: no repetitions");
    size_t ranks = reps.front().gallery.size();
    CmcCurve curve;
    for (const auto& rep : reps) {
        if (rep.gallery.size() != ranks)
            throw std::invalid_argument("cmc: repetitions have different gallery sizes");
        if (rep.probes.empty()) throw std::invalid_argument("cmc: repetition has no probes");
        std::vector<long> hits(ranks, 0);
        for (const auto& probe : rep.probes) {
            auto ranked = identify(rep.gallery, probe, mode);
            size_t pos = ranks;
            for (size_t i = 0; i < ranked.size(); ++i)
                if (ranked[i].subject == probe.true_subject) {
                    pos = i;
                    break;
                }
            if (pos == ranks)
                throw std::invalid_argument("cmc: probe subject " + probe.true_subject +
                                            " is not enrolled");
            hits[pos] += 1;
        }
        std::vector<double> rate(ranks);
        long cum = 0;
        for (size_t k = 0; k < ranks; ++k) {
            cum += hits[k];
            rate[k] = static_cast<double>(cum) / static_cast<double>(rep.probes.size());
        }
        curve.per_rep.push_back(std::move(rate));
    }

    size_t n = curve.per_rep.size();
    curve.mean.assign(ranks, 0.0);
    curve.ci_low.assign(ranks, 0.0);
    curve.ci_high.assign(ranks, 0.0);
    for (size_t k = 0; k < ranks; ++k) {
        double m = 0.0;
        for (const auto& r : curve.per_rep) m += r[k];
        m /= static_cast<double>(n);
        double sd = 0.0;
        if (n > 1) {
            for (const auto& r : curve.per_rep) sd += (r[k] - m) * (r[k] - m);
            sd = std::sqrt(sd / static_cast<double>(n - 1));
        }
        double half = 1.96 * sd / std::sqrt(static_cast<double>(n));
        curve.mean[k] = m;
        curve.ci_low[k] = m - half;
        curve.ci_high[k] = m + half;
    }
    return curve;
}

void write_cmc_csv(const CmcCurve& curve, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error(path + ": cannot open for writing");
    out << "rank";
    for (size_t r = 0; r < curve.per_rep.size(); ++r) out << ",rate_rep" << (r + 1);
    out << ",mean,ci_low,ci_high\n";
    char buf[32];
    for (int k = 0; k < curve.ranks(); ++k) {
        out << (k + 1);
        auto put = [&](double v) {
            std::snprintf(buf, sizeof buf, "%.6f", v);
            out << ',' << buf;
        };
        for (const auto& r : curve.per_rep) put(r[k]);
        put(curve.mean[k]);
        put(curve.ci_low[k]);
        put(curve.ci_high[k]);
        out << '\n';
    }
    if (!out) throw std::runtime_error(path + ": write failed");
}

namespace {

// Plot geometry: fixed margins, rank on x, rate on y in [0, 1].
struct PlotMap {
    double x0 = 60, y0 = 20, w = 640, h = 380;
    int ranks;
    double x(double rank) const {
        return ranks > 1 ? x0 + (rank - 1.0) / (ranks - 1.0) * w : x0 + w / 2;
    }
    double y(double rate) const { return y0 + (1.0 - rate) * h; }
};

void poly_points(std::string& d, const PlotMap& pm, const std::vector<double>& rates) {
    char buf[64];
    for (size_t k = 0; k < rates.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%s%.2f,%.2f", k ? " " : "",
                      pm.x(static_cast<double>(k + 1)), pm.y(rates[k]));
        d += buf;
    }
}

}  // namespace

void write_cmc_svg(const CmcCurve& curve, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error(path + ": cannot open for writing");
    PlotMap pm;
    pm.ranks = curve.ranks();
    char buf[256];

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"760\" height=\"460\" "
           "viewBox=\"0 0 760 460\">\n";
    out << "<rect width=\"760\" height=\"460\" fill=\"white\"/>\n";

    // Confidence band as a closed polygon (upper curve then lower reversed).
    std::string band;
    poly_points(band, pm, curve.ci_high);
    {
        std::vector<double> low = curve.ci_low;
        for (size_t k = low.size(); k-- > 0;) {
            std::snprintf(buf, sizeof buf, " %.2f,%.2f", pm.x(static_cast<double>(k + 1)),
                          pm.y(low[k]));
            band += buf;
        }
    }
    out << "<polygon points=\"" << band << "\" fill=\"#c6dbef\" stroke=\"none\"/>\n";

    for (const auto& rep : curve.per_rep) {
        std::string d;
        poly_points(d, pm, rep);
        out << "<polyline points=\"" << d
            << "\" fill=\"none\" stroke=\"#9ecae1\" stroke-width=\"1\"/>\n";
    }
    std::string d;
    poly_points(d, pm, curve.mean);
    out << "<polyline points=\"" << d
        << "\" fill=\"none\" stroke=\"#08519c\" stroke-width=\"2\"/>\n";

    // Axes and gridlines.
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"black\"/>\n",
                  pm.x0, pm.y0 + pm.h, pm.x0 + pm.w, pm.y0 + pm.h);
    out << buf;
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"black\"/>\n",
                  pm.x0, pm.y0, pm.x0, pm.y0 + pm.h);
    out << buf;
    for (int t = 0; t <= 10; t += 2) {
        double rate = t / 10.0;
        std::snprintf(buf, sizeof buf,
                      "<text x=\"%.1f\" y=\"%.1f\" font-size=\"12\" text-anchor=\"end\">%.1f</text>\n",
                      pm.x0 - 6, pm.y(rate) + 4, rate);
        out << buf;
    }
    int step = std::max(1, pm.ranks / 10);
    for (int k = 1; k <= pm.ranks; k += step) {
        std::snprintf(buf, sizeof buf,
                      "<text x=\"%.1f\" y=\"%.1f\" font-size=\"12\" text-anchor=\"middle\">%d</text>\n",
                      pm.x(k), pm.y0 + pm.h + 16, k);
        out << buf;
    }
    out << "<text x=\"380\" y=\"450\" font-size=\"13\" text-anchor=\"middle\">rank</text>\n";
    out << "<text x=\"16\" y=\"210\" font-size=\"13\" transform=\"rotate(-90 16 210)\" "
           "text-anchor=\"middle\">identification rate</text>\n";
    out << "</svg>\n";
    if (!out) throw std::runtime_error(path + ": write failed");
}

}  // namespace oclbcp::ident
