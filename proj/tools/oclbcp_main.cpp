// Command line front end for the deskside recognition pipeline: palette
// construction, descriptor encoding, dataset splitting, training, evaluation
// and synthetic data generation.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "oclbcp/dataset.hpp"
#include "oclbcp/dual_stream.hpp"
#include "oclbcp/image_io.hpp"
#include "oclbcp/parallel.hpp"
#include "oclbcp/pipeline.hpp"
#include "oclbcp/rng.hpp"

namespace {

using namespace oclbcp;

uint64_t file_hash(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error(path + ": cannot open");
    std::ostringstream ss;
    ss << in.rdbuf();
    std::string bytes = ss.str();
    return fnv1a(bytes.data(), bytes.size());
}

int cmd_palette(const std::string& out, const std::string& swatch, int dims) {
    if (dims != 3)
        throw std::invalid_argument("palette: embedding dimension must be 3, got " +
                                    std::to_string(dims));
    palette::ColorPalette pal = palette::build_palette();
    palette::save_palette(pal, out);
    std::printf("palette written to %s (hash %016llx)\n", out.c_str(),
                static_cast<unsigned long long>(file_hash(out)));
    if (!swatch.empty()) {
        img::save_png(palette::palette_swatch(pal), swatch);
        std::printf("swatch written to %s\n", swatch.c_str());
    }
    return 0;
}

int cmd_encode(const std::string& input, const std::string& palette_path, const std::string& out,
               const std::string& codes_out, int size) {
    palette::ColorPalette pal = palette::load_palette(palette_path);
    pipeline::EncodeConfig cfg;
    cfg.input_size = size;
    img::ColorImage raw = img::load_image(input);
    img::ColorImage resized = img::resize_bilinear(raw, size, size);
    if (!codes_out.empty()) {
        codes::CodeMap map = pipeline::compute_codes(resized, cfg);
        img::save_gray_png(map.codes.data(), map.height, map.width, codes_out);
    }
    img::save_png(pipeline::encode_descriptor(resized, pal, cfg), out);
    std::printf("descriptor written to %s\n", out.c_str());
    return 0;
}

int cmd_split(const std::string& dataset, const std::string& out, uint64_t seed,
              int train_subjects, int repetitions, bool eval_on_train) {
    data::DatasetManifest m = data::scan_dataset(dataset);
    data::SplitConfig cfg;
    cfg.train_subject_count = train_subjects;
    cfg.repetitions = repetitions;
    cfg.seed = seed;
    cfg.eval_on_train = eval_on_train;
    data::make_splits(m, cfg);
    data::save_manifest(m, out);
    std::printf("manifest written to %s (%zu subjects, %zu train, %zu eval, %d repetitions)\n",
                out.c_str(), m.subjects.size(), m.train_subjects.size(), m.eval_subjects.size(),
                repetitions);
    return 0;
}

int cmd_train(const std::string& dataset, const std::string& side_str,
              const std::string& palette_path, const std::string& mode_str, uint64_t seed,
              int epochs, int batch_size, double lr, const std::string& out) {
    data::DatasetManifest manifest = data::load_manifest(dataset);
    palette::ColorPalette pal = palette::load_palette(palette_path);
    net::Side side = net::side_from_name(side_str);

    pipeline::EncodeConfig enc;
    auto examples = pipeline::build_training_set(manifest, side, pal, enc);
    std::printf("training %s side: %zu examples, %zu classes\n", side_str.c_str(),
                examples.size(), manifest.train_subjects.size());

    net::NetworkConfig nc;
    nc.num_classes = static_cast<int>(manifest.train_subjects.size());
    nc.mode = net::mode_from_name(mode_str);
    nc.side = side;
    net::DualStreamNet<net::train_real_t> model(
        nc, derive_seed(seed, side == net::Side::left ? 0 : 1, 0x11));

    nn::OptimizerConfig oc;
    oc.initial_lr = lr;
    oc.epochs = epochs;
    oc.batch_size = batch_size;
    net::train(model, examples, oc, seed, &std::cout);

    net::ModelMeta meta;
    meta.class_labels = manifest.train_subjects;
    meta.palette_hash = file_hash(palette_path);
    meta.train_seed = seed;
    meta.optimizer = oc;
    net::save_model(model, meta, out);
    std::printf("model written to %s\n", out.c_str());
    return 0;
}

int cmd_eval(const std::string& dataset, const std::string& model_left,
             const std::string& model_right, const std::string& palette_path,
             const std::string& out, const std::string& format, const std::string& score_str,
             const std::string& eyes_str) {
    data::DatasetManifest manifest = data::load_manifest(dataset);
    palette::ColorPalette pal = palette::load_palette(palette_path);
    auto left = net::load_model<net::train_real_t>(model_left);
    auto right = net::load_model<net::train_real_t>(model_right);

    ident::ScoreMode mode = score_str == "distance" ? ident::ScoreMode::cosine_distance
                                                    : ident::ScoreMode::cosine_similarity;
    pipeline::EyeSelection eyes = pipeline::EyeSelection::both;
    if (eyes_str == "left") eyes = pipeline::EyeSelection::left_only;
    if (eyes_str == "right") eyes = pipeline::EyeSelection::right_only;

    pipeline::EncodeConfig enc;
    ident::CmcCurve curve = pipeline::evaluate_identification(manifest, left, right, pal, enc,
                                                              mode, eyes);
    if (format == "svg")
        ident::write_cmc_svg(curve, out);
    else
        ident::write_cmc_csv(curve, out);
    std::printf("rank-1 %.4f (ci %.4f..%.4f), curve written to %s\n", curve.mean[0],
                curve.ci_low[0], curve.ci_high[0], out.c_str());
    return 0;
}

int cmd_synth(const std::string& out, int classes, int per_class, uint64_t seed, int size) {
    data::SynthConfig cfg;
    cfg.root = out;
    cfg.classes = classes;
    cfg.per_class = per_class;
    cfg.seed = seed;
    cfg.image_size = size;
    data::synth_generate(cfg);
    std::printf("synthetic dataset written to %s (%d classes, %d images per side)\n", out.c_str(),
                classes, per_class);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    oclbcp::apply_thread_cap_from_env();

    CLI::App app{"periocular color-texture recognition pipeline"};
    app.set_config("--config");
    app.require_subcommand(1);

    // palette
    auto* sp = app.add_subcommand("palette", "build the code color palette");
    std::string pal_out, pal_swatch;
    int pal_dims = 3;
    sp->add_option("--out", pal_out, "palette file to write")->required();
    sp->add_option("--swatch", pal_swatch, "optional swatch PNG");
    sp->add_option("--dims", pal_dims, "embedding dimension (only 3 is supported)");

    // encode
    auto* se = app.add_subcommand("encode", "render the descriptor image for one input");
    std::string enc_in, enc_pal, enc_out, enc_codes;
    int enc_size = 80;
    se->add_option("input", enc_in, "input image (png or ppm)")->required();
    se->add_option("--palette", enc_pal, "palette file")->required();
    se->add_option("--out", enc_out, "output PNG")->required();
    se->add_option("--codes", enc_codes, "optional grayscale code map PNG");
    se->add_option("--size", enc_size, "working size (default 80)");

    // split
    auto* ss = app.add_subcommand("split", "scan a dataset and write a split manifest");
    std::string split_ds, split_out;
    uint64_t split_seed = 0;
    int split_train = 0, split_reps = 3;
    bool split_eot = false;
    ss->add_option("--dataset", split_ds, "dataset root directory")->required();
    ss->add_option("--out", split_out, "manifest path")->required();
    ss->add_option("--seed", split_seed, "split seed");
    ss->add_option("--train-subjects", split_train, "number of training subjects")->required();
    ss->add_option("--repetitions", split_reps, "gallery/probe repetitions (default 3)");
    ss->add_flag("--eval-on-train", split_eot, "evaluate on the training subjects");

    // train
    auto* st = app.add_subcommand("train", "train one side's network");
    std::string tr_ds, tr_side, tr_pal, tr_out, tr_mode = "dual";
    uint64_t tr_seed = 0;
    int tr_epochs = 200, tr_batch = 64;
    double tr_lr = 1e-3;
    st->add_option("--dataset", tr_ds, "split manifest")->required();
    st->add_option("--side", tr_side, "left or right")
        ->required()
        ->check(CLI::IsMember({"left", "right"}));
    st->add_option("--palette", tr_pal, "palette file")->required();
    st->add_option("--mode", tr_mode, "dual, rgb_only or descriptor_only")
        ->check(CLI::IsMember({"dual", "rgb_only", "descriptor_only"}));
    st->add_option("--seed", tr_seed, "training seed");
    st->add_option("--epochs", tr_epochs, "epochs (default 200)");
    st->add_option("--batch-size", tr_batch, "minibatch size (default 64)");
    st->add_option("--lr", tr_lr, "initial learning rate (default 1e-3)");
    st->add_option("--out", tr_out, "checkpoint path")->required();

    // eval
    auto* sv = app.add_subcommand("eval", "run identification and write the match curve");
    std::string ev_ds, ev_l, ev_r, ev_pal, ev_out, ev_fmt = "csv", ev_score = "similarity",
                       ev_eyes = "both";
    sv->add_option("--dataset", ev_ds, "split manifest")->required();
    sv->add_option("--model-left", ev_l, "left-side model")->required();
    sv->add_option("--model-right", ev_r, "right-side model")->required();
    sv->add_option("--palette", ev_pal, "palette file")->required();
    sv->add_option("--out", ev_out, "output path")->required();
    sv->add_option("--format", ev_fmt, "csv or svg")->check(CLI::IsMember({"csv", "svg"}));
    sv->add_option("--score", ev_score, "similarity or distance")
        ->check(CLI::IsMember({"similarity", "distance"}));
    sv->add_option("--eyes", ev_eyes, "both, left or right")
        ->check(CLI::IsMember({"both", "left", "right"}));

    // synth
    auto* sy = app.add_subcommand("synth", "generate a synthetic dataset");
    std::string sy_out;
    int sy_classes = 10, sy_per = 10, sy_size = 80;
    uint64_t sy_seed = 0;
    sy->add_option("--out", sy_out, "output root directory")->required();
    sy->add_option("--classes", sy_classes, "number of classes (default 10)");
    sy->add_option("--per-class", sy_per, "images per class per side (default 10)");
    sy->add_option("--seed", sy_seed, "generator seed");
    sy->add_option("--size", sy_size, "image size (default 80)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sp->parsed()) return cmd_palette(pal_out, pal_swatch, pal_dims);
        if (se->parsed()) return cmd_encode(enc_in, enc_pal, enc_out, enc_codes, enc_size);
        if (ss->parsed())
            return cmd_split(split_ds, split_out, split_seed, split_train, split_reps, split_eot);
        if (st->parsed())
            return cmd_train(tr_ds, tr_side, tr_pal, tr_mode, tr_seed, tr_epochs, tr_batch, tr_lr,
                             tr_out);
        if (sv->parsed())
            return cmd_eval(ev_ds, ev_l, ev_r, ev_pal, ev_out, ev_fmt, ev_score, ev_eyes);
        if (sy->parsed()) return cmd_synth(sy_out, sy_classes, sy_per, sy_seed, sy_size);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
