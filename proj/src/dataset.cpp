#include "oclbcp/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "json.hpp"
#include "oclbcp/image.hpp"
#include "oclbcp/image_io.hpp"
#include "oclbcp/rng.hpp"

namespace fs = std::filesystem;

namespace oclbcp::data {

namespace {

std::vector<std::string> list_side(const fs::path& dir) {
    std::vector<std::string> files;
    if (!fs::is_directory(dir)) return files;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        if (e.path().extension() != ".png") continue;
        std::ifstream probe(e.path(), std::ios::binary);
        if (!probe) throw std::runtime_error(e.path().string() + ": unreadable file");
        files.push_back(e.path().string());
    }
    std::sort(files.begin(), files.end());
    return files;
}

}  // namespace

DatasetManifest scan_dataset(const std::string& root) {
    if (!fs::is_directory(root)) throw std::runtime_error(root + ": not a directory");
    DatasetManifest m;
    m.root = root;
    std::vector<std::string> subject_dirs;
    for (const auto& e : fs::directory_iterator(root))
        if (e.is_directory()) subject_dirs.push_back(e.path().filename().string());
    std::sort(subject_dirs.begin(), subject_dirs.end());
    for (const auto& id : subject_dirs) {
        SubjectFiles sf;
        sf.left = list_side(fs::path(root) / id / "left");
        sf.right = list_side(fs::path(root) / id / "right");
        if (sf.left.empty() || sf.right.empty()) {
            std::fprintf(stderr, "scan_dataset: subject %s has an empty side, excluding\n",
                         id.c_str());
            continue;
        }
        m.subjects[id] = std::move(sf);
    }
    return m;
}

void make_splits(DatasetManifest& m, const SplitConfig& cfg) {
    int total = static_cast<int>(m.subjects.size());
    if (cfg.repetitions < 1) throw std::invalid_argument("make_splits: need at least 1 repetition");
    if (cfg.train_subject_count < 1 || cfg.train_subject_count > total ||
        (!cfg.eval_on_train && cfg.train_subject_count >= total))
        throw std::invalid_argument("make_splits: bad train subject count");

    std::vector<std::string> ids;
    ids.reserve(m.subjects.size());
    for (const auto& [id, files] : m.subjects) ids.push_back(id);
    Rng subject_rng(derive_seed(cfg.seed, 0x51));
    subject_rng.shuffle(ids);

    m.seed = cfg.seed;
    m.eval_on_train = cfg.eval_on_train;
    m.train_subjects.assign(ids.begin(), ids.begin() + cfg.train_subject_count);
    if (cfg.eval_on_train)
        m.eval_subjects = m.train_subjects;
    else
        m.eval_subjects.assign(ids.begin() + cfg.train_subject_count, ids.end());
    std::sort(m.train_subjects.begin(), m.train_subjects.end());
    std::sort(m.eval_subjects.begin(), m.eval_subjects.end());

    m.repetitions.clear();
    for (int r = 0; r < cfg.repetitions; ++r) {
        RepSplit rep;
        for (const auto& id : m.eval_subjects) {
            const SubjectFiles& sf = m.subjects.at(id);
            SubjectFiles gal, prb;
            uint64_t idh = fnv1a(id.data(), id.size());
            for (int side = 0; side < 2; ++side) {
                const auto& files = side == 0 ? sf.left : sf.right;
                std::vector<size_t> idx(files.size());
                for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
                Rng rng(derive_seed(cfg.seed, static_cast<uint64_t>(r) + 1, idh,
                                    static_cast<uint64_t>(side)));
                rng.shuffle(idx);
                size_t ngal = (files.size() + 1) / 2;
                std::vector<size_t> gsel(idx.begin(), idx.begin() + ngal);
                std::vector<size_t> psel(idx.begin() + ngal, idx.end());
                std::sort(gsel.begin(), gsel.end());
                std::sort(psel.begin(), psel.end());
                auto& gdst = side == 0 ? gal.left : gal.right;
                auto& pdst = side == 0 ? prb.left : prb.right;
                for (size_t i : gsel) gdst.push_back(files[i]);
                for (size_t i : psel) pdst.push_back(files[i]);
            }
            rep.gallery[id] = std::move(gal);
            rep.probe[id] = std::move(prb);
        }
        m.repetitions.push_back(std::move(rep));
    }
}

namespace {

nlohmann::json files_to_json(const SubjectFiles& sf) {
    return {{"left", sf.left}, {"right", sf.right}};
}

SubjectFiles files_from_json(const nlohmann::json& j) {
    SubjectFiles sf;
    sf.left = j.at("left").get<std::vector<std::string>>();
    sf.right = j.at("right").get<std::vector<std::string>>();
    return sf;
}

nlohmann::json split_map_to_json(const std::map<std::string, SubjectFiles>& m) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [id, sf] : m) j[id] = files_to_json(sf);
    return j;
}

std::map<std::string, SubjectFiles> split_map_from_json(const nlohmann::json& j) {
    std::map<std::string, SubjectFiles> m;
    for (auto it = j.begin(); it != j.end(); ++it) m[it.key()] = files_from_json(it.value());
    return m;
}

}  // namespace

void save_manifest(const DatasetManifest& m, const std::string& path) {
    nlohmann::json j;
    j["format_version"] = 1;
    j["root"] = m.root;
    j["seed"] = m.seed;
    j["eval_on_train"] = m.eval_on_train;
    j["subjects"] = split_map_to_json(m.subjects);
    j["train_subjects"] = m.train_subjects;
    j["eval_subjects"] = m.eval_subjects;
    nlohmann::json reps = nlohmann::json::array();
    for (const auto& r : m.repetitions)
        reps.push_back({{"gallery", split_map_to_json(r.gallery)},
                        {"probe", split_map_to_json(r.probe)}});
    j["repetitions"] = reps;
    std::ofstream out(path);
    if (!out) throw std::runtime_error(path + ": cannot open for writing");
    out << j.dump(2) << "\n";
    if (!out) throw std::runtime_error(path + ": write failed");
}

DatasetManifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path + ": cannot open");
    nlohmann::json j = nlohmann::json::parse(in);
    if (j.at("format_version").get<int>() != 1)
        throw std::runtime_error(path + ": unsupported manifest version");
    DatasetManifest m;
    m.root = j.at("root").get<std::string>();
    m.seed = j.at("seed").get<uint64_t>();
    m.eval_on_train = j.value("eval_on_train", false);
    m.subjects = split_map_from_json(j.at("subjects"));
    m.train_subjects = j.at("train_subjects").get<std::vector<std::string>>();
    m.eval_subjects = j.at("eval_subjects").get<std::vector<std::string>>();
    for (const auto& r : j.at("repetitions")) {
        RepSplit rep;
        rep.gallery = split_map_from_json(r.at("gallery"));
        rep.probe = split_map_from_json(r.at("probe"));
        m.repetitions.push_back(std::move(rep));
    }
    return m;
}

namespace {

constexpr double kTau = 6.283185307179586;

// Band-limited random field: a small sum of low-frequency cosines plus an
// elliptical arc and an iris disk, all parameterized per class. Evaluated on
// continuous coordinates so translation jitter is sub-pixel exact.
struct ClassPattern {
    struct Wave {
        double fx, fy, phase, amp;
    };
    std::vector<Wave> base;      // shared luminance field
    std::vector<Wave> tint[3];   // per-channel offsets
    double dc[3];                // class color signature
    double cx, cy, rx, ry;       // arc ellipse
    double arc_theta0, arc_theta1;
    double icx, icy, irad;       // iris disk
    double amp_total = 0.0;

    static ClassPattern make(Rng& rng, int size) {
        ClassPattern p;
        int waves = 6;
        for (int i = 0; i < waves; ++i) {
            Wave w;
            w.fx = rng.uniform(-6.0, 6.0) / size;
            w.fy = rng.uniform(-6.0, 6.0) / size;
            w.phase = rng.uniform(0.0, kTau);
            w.amp = rng.uniform(0.4, 1.0);
            p.base.push_back(w);
            p.amp_total += w.amp;
        }
        for (int c = 0; c < 3; ++c)
            for (int i = 0; i < 3; ++i) {
                Wave w;
                w.fx = rng.uniform(-5.0, 5.0) / size;
                w.fy = rng.uniform(-5.0, 5.0) / size;
                w.phase = rng.uniform(0.0, kTau);
                w.amp = rng.uniform(0.5, 1.0);
                p.tint[c].push_back(w);
            }
        double s = size;
        p.cx = rng.uniform(0.40, 0.60) * s;
        p.cy = rng.uniform(0.45, 0.60) * s;
        p.rx = rng.uniform(0.22, 0.38) * s;
        p.ry = rng.uniform(0.10, 0.20) * s;
        p.arc_theta0 = rng.uniform(kTau * 0.52, kTau * 0.58);
        p.arc_theta1 = p.arc_theta0 + rng.uniform(kTau * 0.30, kTau * 0.42);
        p.icx = p.cx + rng.uniform(-0.05, 0.05) * s;
        p.icy = p.cy + rng.uniform(-0.05, 0.05) * s;
        p.irad = rng.uniform(0.05, 0.11) * s;
        for (double& d : p.dc) d = rng.uniform(-0.15, 0.15);
        return p;
    }

    double field(const std::vector<Wave>& waves, double x, double y) const {
        double v = 0.0;
        for (const auto& w : waves) v += w.amp * std::cos(kTau * (w.fx * x + w.fy * y) + w.phase);
        return v;
    }

    // Multiplicative shading from the curvilinear features.
    double shading(double x, double y) const {
        double shade = 1.0;
        double nx = (x - cx) / rx, ny = (y - cy) / ry;
        double e = nx * nx + ny * ny;
        if (std::abs(e - 1.0) < 0.16) {
            double theta = std::atan2(ny, nx);
            if (theta < 0) theta += kTau;
            double t0 = std::fmod(arc_theta0, kTau), t1 = std::fmod(arc_theta1, kTau);
            bool in_arc = t0 <= t1 ? (theta >= t0 && theta <= t1) : (theta >= t0 || theta <= t1);
            if (in_arc) shade *= 0.45 + 2.5 * std::abs(e - 1.0);
        }
        double dx = x - icx, dy = y - icy;
        if (dx * dx + dy * dy < irad * irad) shade *= 0.5;
        return shade;
    }

    // Full color sample at continuous coordinates, in [0, 1] per channel.
    void sample(double x, double y, double out[3]) const {
        double lum = 0.5 + 0.32 * field(base, x, y) / amp_total;
        double shade = shading(x, y);
        for (int c = 0; c < 3; ++c) {
            double t = dc[c] + 0.10 * field(tint[c], x, y) / 3.0;
            out[c] = std::clamp((lum + t) * shade, 0.0, 1.0);
        }
    }
};

}  // namespace

void synth_generate(const SynthConfig& cfg) {
    if (cfg.classes < 1 || cfg.per_class < 1 || cfg.image_size < 8)
        throw std::invalid_argument("synth_generate: bad config");
    if (cfg.root.empty()) throw std::invalid_argument("synth_generate: no output root");
    fs::create_directories(cfg.root);

    for (int c = 0; c < cfg.classes; ++c) {
        Rng class_rng(derive_seed(cfg.seed, 0xC1A5, static_cast<uint64_t>(c)));
        ClassPattern pat = ClassPattern::make(class_rng, cfg.image_size);
        char subject[32];
        std::snprintf(subject, sizeof subject, "c%03d", c);
        for (int side = 0; side < 2; ++side) {
            const char* side_name = side == 0 ? "left" : "right";
            fs::path dir = fs::path(cfg.root) / subject / side_name;
            fs::create_directories(dir);
            for (int k = 0; k < cfg.per_class; ++k) {
                Rng jitter(derive_seed(cfg.seed, static_cast<uint64_t>(c),
                                       static_cast<uint64_t>(side), static_cast<uint64_t>(k)));
                double brightness = jitter.uniform(0.9, 1.1);
                double tx = jitter.uniform(-2.0, 2.0);
                double ty = jitter.uniform(-2.0, 2.0);
                img::ColorImage im(cfg.image_size, cfg.image_size);
                for (int y = 0; y < cfg.image_size; ++y) {
                    for (int x = 0; x < cfg.image_size; ++x) {
                        // Left eyes are horizontal mirrors of the right-side
                        // pattern space.
                        double px = side == 0 ? (cfg.image_size - 1 - x) : x;
                        double rgb[3];
                        pat.sample(px + tx, y + ty, rgb);
                        for (int ch = 0; ch < 3; ++ch) {
                            double v = rgb[ch] * brightness + jitter.uniform(-0.02, 0.02);
                            im.at(y, x, ch) = static_cast<uint8_t>(
                                std::clamp(std::lround(v * 255.0), 0L, 255L));
                        }
                    }
                }
                char name[32];
                std::snprintf(name, sizeof name, "img%03d.png", k);
                img::save_png(im, (dir / name).string());
            }
        }
    }
}

}  // namespace oclbcp::data
