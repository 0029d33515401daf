#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace oclbcp::data {

// File lists for one subject, sorted by path.
struct SubjectFiles {
    std::vector<std::string> left, right;
};

// One gallery/probe partition of the evaluation subjects.
struct RepSplit {
    std::map<std::string, SubjectFiles> gallery, probe;
};

struct DatasetManifest {
    std::string root;
    uint64_t seed = 0;
    bool eval_on_train = false;
    std::map<std::string, SubjectFiles> subjects;
    std::vector<std::string> train_subjects;
    std::vector<std::string> eval_subjects;
    std::vector<RepSplit> repetitions;
};

// Walks root/<subject>/{left,right}/*.png and collects per-subject file
// lists in sorted order, independent of directory enumeration order.
// Subjects missing images on either side are excluded with a warning on
// stderr. Unreadable image files raise std::runtime_error.
DatasetManifest scan_dataset(const std::string& root);

struct SplitConfig {
    int train_subject_count = 0;
    int repetitions = 3;
    uint64_t seed = 0;
    // When set, the gallery/probe partitions are drawn from the training
    // subjects themselves (closed-set evaluation on the training identities)
    // instead of from held-out subjects.
    bool eval_on_train = false;
};

// Seeded subject-level split: a shuffled subject list is cut into train and
// evaluation groups, then every repetition halves each evaluation subject's
// images per side into gallery and probe (gallery receives the extra image
// on odd counts). All randomness derives from the named seed.
void make_splits(DatasetManifest& m, const SplitConfig& cfg);

// JSON round trip for the manifest. Serialization is key-sorted and
// fixed-format so equal manifests produce identical bytes.
void save_manifest(const DatasetManifest& m, const std::string& path);
DatasetManifest load_manifest(const std::string& path);

// Synthetic ocular-style corpus: per class a seeded band-limited color
// texture with an elliptical arc and iris disk, rendered with per-image
// brightness, translation and noise jitter. Left images mirror the pattern
// horizontally. Images are written as PNGs in the scan layout.
struct SynthConfig {
    int classes = 10;
    int per_class = 10;  // images per side
    uint64_t seed = 0;
    int image_size = 80;
    std::string root;
};
void synth_generate(const SynthConfig& cfg);

}  // namespace oclbcp::data
