#include "oclbcp/pipeline.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

#include "oclbcp/image_io.hpp"

namespace oclbcp::pipeline {

codes::CodeMap compute_codes(const img::ColorImage& rgb, const EncodeConfig& cfg) {
    img::GrayImage gray = img::to_gray(rgb);
    img::GrayImage norm = img::butterworth_homomorphic(gray, cfg.filter);
    return codes::descriptor_map(norm, cfg.ltp_threshold);
}

img::ColorImage encode_descriptor(const img::ColorImage& rgb, const palette::ColorPalette& pal,
                                  const EncodeConfig& cfg) {
    return palette::colorize(compute_codes(rgb, cfg), pal);
}

namespace {

struct ImagePair {
    img::ColorImage rgb, desc;
};

ImagePair preprocess(const std::string& path, const palette::ColorPalette& pal,
                     const EncodeConfig& cfg) {
    img::ColorImage raw = img::load_image(path);
    ImagePair p;
    p.rgb = img::resize_bilinear(raw, cfg.input_size, cfg.input_size);
    p.desc = encode_descriptor(p.rgb, pal, cfg);
    return p;
}

}  // namespace

std::vector<net::TrainExample> build_training_set(const data::DatasetManifest& manifest,
                                                  net::Side side,
                                                  const palette::ColorPalette& pal,
                                                  const EncodeConfig& cfg) {
    if (manifest.train_subjects.empty())
        throw std::invalid_argument("build_training_set: manifest has no training split");
    std::vector<net::TrainExample> out;
    for (size_t label = 0; label < manifest.train_subjects.size(); ++label) {
        const auto& id = manifest.train_subjects[label];
        const data::SubjectFiles& sf = manifest.subjects.at(id);
        const auto& files = side == net::Side::left ? sf.left : sf.right;
        for (const auto& path : files) {
            ImagePair p = preprocess(path, pal, cfg);
            net::TrainExample ex;
            ex.rgb = std::move(p.rgb);
            ex.descriptor = std::move(p.desc);
            ex.label = static_cast<int>(label);
            ex.side = side;
            out.push_back(std::move(ex));
        }
    }
    return out;
}

namespace {

// Per-side embedding cache so each image runs the network once even when it
// appears in several repetitions.
class EmbedCache {
public:
    EmbedCache(const net::DualStreamNet<net::train_real_t>& model,
               const palette::ColorPalette& pal, const EncodeConfig& cfg)
        : model_(model), pal_(pal), cfg_(cfg) {}

    const std::vector<double>& get(const std::string& path) {
        auto it = cache_.find(path);
        if (it != cache_.end()) return it->second;
        ImagePair p = preprocess(path, pal_, cfg_);
        return cache_.emplace(path, net::embed(model_, p.rgb, p.desc)).first->second;
    }

private:
    const net::DualStreamNet<net::train_real_t>& model_;
    const palette::ColorPalette& pal_;
    const EncodeConfig& cfg_;
    std::map<std::string, std::vector<double>> cache_;
};

std::vector<double> mean_vector(const std::vector<const std::vector<double>*>& vs) {
    std::vector<double> m(vs.front()->size(), 0.0);
    for (const auto* v : vs)
        for (size_t i = 0; i < m.size(); ++i) m[i] += (*v)[i];
    for (double& x : m) x /= static_cast<double>(vs.size());
    return m;
}

}  // namespace

ident::CmcCurve evaluate_identification(const data::DatasetManifest& manifest,
                                        const net::DualStreamNet<net::train_real_t>& left,
                                        const net::DualStreamNet<net::train_real_t>& right,
                                        const palette::ColorPalette& pal, const EncodeConfig& cfg,
                                        ident::ScoreMode mode, EyeSelection eyes) {
    if (manifest.repetitions.empty())
        throw std::invalid_argument("evaluate_identification: manifest has no repetitions");
    bool use_left = eyes != EyeSelection::right_only;
    bool use_right = eyes != EyeSelection::left_only;
    EmbedCache lcache(left, pal, cfg), rcache(right, pal, cfg);

    std::vector<ident::Repetition> reps;
    for (const auto& split : manifest.repetitions) {
        ident::Repetition rep;
        for (const auto& [id, files] : split.gallery) {
            ident::GalleryEntry entry;
            entry.subject = id;
            if (use_left) {
                std::vector<const std::vector<double>*> vs;
                for (const auto& path : files.left) vs.push_back(&lcache.get(path));
                if (vs.empty())
                    throw std::invalid_argument("evaluate_identification: empty gallery side");
                entry.left = mean_vector(vs);
            }
            if (use_right) {
                std::vector<const std::vector<double>*> vs;
                for (const auto& path : files.right) vs.push_back(&rcache.get(path));
                if (vs.empty())
                    throw std::invalid_argument("evaluate_identification: empty gallery side");
                entry.right = mean_vector(vs);
            }
            rep.gallery.push_back(std::move(entry));
        }
        for (const auto& [id, files] : split.probe) {
            size_t n;
            if (use_left && use_right)
                n = std::min(files.left.size(), files.right.size());
            else
                n = use_left ? files.left.size() : files.right.size();
            for (size_t i = 0; i < n; ++i) {
                ident::Probe probe;
                probe.true_subject = id;
                if (use_left) probe.left = lcache.get(files.left[i]);
                if (use_right) probe.right = rcache.get(files.right[i]);
                rep.probes.push_back(std::move(probe));
            }
        }
        reps.push_back(std::move(rep));
    }
    return ident::cmc(reps, mode);
}

}  // namespace oclbcp::pipeline
