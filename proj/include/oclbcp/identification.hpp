#pragma once

#include <string>
#include <vector>

namespace oclbcp::ident {

// Comparison convention for matching scores. Both settings rank candidates
// identically; cosine_distance just reports 1 - cos and sorts ascending.
enum class ScoreMode { cosine_similarity, cosine_distance };

// Angle-based score between a gallery score vector and a probe score
// vector. Zero-norm vectors are rejected with std::invalid_argument.
double side_score(const std::vector<double>& gallery, const std::vector<double>& probe,
                  ScoreMode mode = ScoreMode::cosine_similarity);

// Enrolled subject: one averaged score vector per eye.
struct GalleryEntry {
    std::string subject;
    std::vector<double> left, right;
};

// Probe pair with ground-truth identity.
struct Probe {
    std::string true_subject;
    std::vector<double> left, right;
};

// Score-level fusion across eyes: the left and right side scores add.
double fuse_lr(const GalleryEntry& g, const std::vector<double>& probe_left,
               const std::vector<double>& probe_right, ScoreMode mode);

struct RankedMatch {
    std::string subject;
    double score;
};

// Ranks the gallery for one probe, best match first. Ties order by subject
// id ascending so results do not depend on gallery ordering.
std::vector<RankedMatch> identify(const std::vector<GalleryEntry>& gallery, const Probe& probe,
                                  ScoreMode mode = ScoreMode::cosine_similarity);

// One evaluation repetition: an enrolled gallery and its probe set.
struct Repetition {
    std::vector<GalleryEntry> gallery;
    std::vector<Probe> probes;
};

// Cumulative match curve over repetitions. rate[k-1] is the fraction of
// probes whose true subject appears within the top k matches; the mean curve
// carries a 95% normal confidence interval across repetitions.
struct CmcCurve {
    std::vector<std::vector<double>> per_rep;  // [rep][rank-1]
    std::vector<double> mean, ci_low, ci_high;
    int ranks() const { return static_cast<int>(mean.size()); }
};

CmcCurve cmc(const std::vector<Repetition>& reps, ScoreMode mode = ScoreMode::cosine_similarity);

// rank,rate_rep1..rate_repN,mean,ci_low,ci_high rows with fixed formatting,
// one line per rank.
void write_cmc_csv(const CmcCurve& curve, const std::string& path);

// Self-contained SVG line plot of the mean curve with its confidence band
// and the per-repetition traces.
void write_cmc_svg(const CmcCurve& curve, const std::string& path);

}  // namespace oclbcp::ident
