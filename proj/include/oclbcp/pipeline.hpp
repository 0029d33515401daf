#pragma once

#include <string>
#include <vector>

#include "oclbcp/butterworth.hpp"
#include "oclbcp/codes.hpp"
#include "oclbcp/dataset.hpp"
#include "oclbcp/dual_stream.hpp"
#include "oclbcp/identification.hpp"
#include "oclbcp/palette.hpp"

namespace oclbcp::pipeline {

// Preprocessing knobs shared by training and evaluation.
struct EncodeConfig {
    img::ButterworthConfig filter;
    double ltp_threshold = codes::kDefaultLtpThreshold;
    int input_size = 80;
};

// Illumination-normalized code map of an RGB image (no resizing).
codes::CodeMap compute_codes(const img::ColorImage& rgb, const EncodeConfig& cfg);

// Full descriptor rendering: grayscale, homomorphic filter, per-pixel codes,
// palette colorization. Output matches the input size.
img::ColorImage encode_descriptor(const img::ColorImage& rgb, const palette::ColorPalette& pal,
                                  const EncodeConfig& cfg);

// Loads and preprocesses the training images of one side: each file is
// resized to the network input size and paired with its descriptor
// rendering. Labels index the sorted training subject list.
std::vector<net::TrainExample> build_training_set(const data::DatasetManifest& manifest,
                                                  net::Side side,
                                                  const palette::ColorPalette& pal,
                                                  const EncodeConfig& cfg);

// Which eyes participate in evaluation scoring.
enum class EyeSelection { both, left_only, right_only };

// Runs the closed-set identification protocol over every repetition in the
// manifest: gallery entries average the model scores of each enrolled
// subject's gallery images per side, probes pair the i-th left and right
// probe images of a subject, and ranking fuses the per-side scores.
ident::CmcCurve evaluate_identification(
    const data::DatasetManifest& manifest, const net::DualStreamNet<net::train_real_t>& left,
    const net::DualStreamNet<net::train_real_t>& right, const palette::ColorPalette& pal,
    const EncodeConfig& cfg, ident::ScoreMode mode = ident::ScoreMode::cosine_similarity,
    EyeSelection eyes = EyeSelection::both);

}  // namespace oclbcp::pipeline
