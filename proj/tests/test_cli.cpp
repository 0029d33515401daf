// Drives the command line tool as a subprocess: every subcommand is judged
// on exit status, emitted files and logs.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "oclbcp/dataset.hpp"
#include "oclbcp/dual_stream.hpp"
#include "oclbcp/image_io.hpp"
#include "oclbcp/palette.hpp"

namespace fs = std::filesystem;
using namespace oclbcp;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::path("tmp_test") / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string str() const { return path.string(); }
};

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) return {};
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string golden_palette_path() {
    return std::string(OCLBCP_TEST_DATA) + "/palette_golden.bin";
}

struct CmdResult {
    int status = -1;
    std::string out, err;
};

CmdResult run_cli(const std::string& args, const fs::path& dir, const std::string& env = "") {
    static int seq = 0;
    fs::path so = dir / ("stdout" + std::to_string(seq) + ".txt");
    fs::path se = dir / ("stderr" + std::to_string(seq) + ".txt");
    ++seq;
    std::string cmd = env.empty() ? std::string() : env + " ";
    cmd += std::string(OCLBCP_CLI) + " " + args + " >" + so.string() + " 2>" + se.string();
    int rc = std::system(cmd.c_str());
    CmdResult r;
    r.status = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    r.out = read_file(so);
    r.err = read_file(se);
    return r;
}

bool same_nonempty_bytes(const fs::path& a, const fs::path& b) {
    std::string ba = read_file(a), bb = read_file(b);
    return !ba.empty() && ba == bb;
}

size_t count_pngs(const fs::path& root) {
    size_t n = 0;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file() && e.path().extension() == ".png") ++n;
    return n;
}

img::ColorImage wave_card(int n) {
    img::ColorImage im(n, n);
    const double tau = 6.283185307179586;
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x)
            for (int c = 0; c < 3; ++c) {
                double v = 0.5 + 0.3 * std::sin(tau * (0.19 * x + 0.07 * y + 0.3 * c)) +
                           0.2 * std::sin(tau * (0.04 * x - 0.13 * y));
                im.at(y, x, c) = static_cast<uint8_t>(std::lround(40.0 + 170.0 * v));
            }
    return im;
}

double parse_rank1(const std::string& stdout_text) {
    double v = -1.0;
    REQUIRE(std::sscanf(stdout_text.c_str(), "rank-1 %lf", &v) == 1);
    return v;
}

}  // namespace

TEST_CASE("malformed invocations exit nonzero with a diagnostic") {
    TempDir dir("cli_bad");
    CHECK(run_cli("", dir.path).status != 0);
    CHECK(run_cli("frobnicate", dir.path).status != 0);
    CHECK(run_cli("train --side left", dir.path).status != 0);
    CHECK(run_cli("eval --dataset x --model-left a --model-right b --palette p --out o "
                  "--format bogus",
                  dir.path)
              .status != 0);

    CmdResult r = run_cli("encode missing.png --palette nope.bin --out x.png", dir.path);
    CHECK(r.status == 1);
    CHECK(r.err.find("error:") != std::string::npos);
}

TEST_CASE("synthetic data generation is reproducible") {
    TempDir dir("cli_synth");
    std::string base = "synth --classes 2 --per-class 2 --seed 7 --size 24 --out ";
    CHECK(run_cli(base + (dir.path / "a").string(), dir.path).status == 0);
    CHECK(run_cli(base + (dir.path / "b").string(), dir.path).status == 0);
    CHECK(same_nonempty_bytes(dir.path / "a/c000/left/img000.png",
                              dir.path / "b/c000/left/img000.png"));
    CHECK(same_nonempty_bytes(dir.path / "a/c001/right/img001.png",
                              dir.path / "b/c001/right/img001.png"));
    CHECK(count_pngs(dir.path / "a") == 8);

    CHECK(run_cli("synth --classes 2 --per-class 2 --seed 8 --size 24 --out " +
                      (dir.path / "c").string(),
                  dir.path)
              .status == 0);
    CHECK(read_file(dir.path / "a/c000/left/img000.png") !=
          read_file(dir.path / "c/c000/left/img000.png"));

    CmdResult r = run_cli("synth --classes 0 --out " + (dir.path / "z").string(), dir.path);
    CHECK(r.status == 1);
    CHECK(r.err.find("error:") != std::string::npos);
}

TEST_CASE("split writes a manifest honoring the requested protocol") {
    TempDir dir("cli_split");
    REQUIRE(run_cli("synth --classes 4 --per-class 3 --seed 3 --size 24 --out " +
                        (dir.path / "ds").string(),
                    dir.path)
                .status == 0);

    std::string m1 = (dir.path / "m1.json").string();
    CmdResult r = run_cli("split --dataset " + (dir.path / "ds").string() + " --out " + m1 +
                              " --seed 5 --train-subjects 2 --repetitions 2",
                          dir.path);
    REQUIRE(r.status == 0);
    CHECK(r.out.find("manifest written") != std::string::npos);

    data::DatasetManifest m = data::load_manifest(m1);
    CHECK(m.train_subjects.size() == 2);
    CHECK(m.eval_subjects.size() == 2);
    REQUIRE(m.repetitions.size() == 2);
    for (const auto& id : m.eval_subjects) {
        const auto& g = m.repetitions[0].gallery.at(id);
        const auto& p = m.repetitions[0].probe.at(id);
        CHECK(g.left.size() == 2);
        CHECK(p.left.size() == 1);
    }

    std::string m2 = (dir.path / "m2.json").string();
    REQUIRE(run_cli("split --dataset " + (dir.path / "ds").string() + " --out " + m2 +
                        " --seed 5 --train-subjects 2 --repetitions 2",
                    dir.path)
                .status == 0);
    CHECK(same_nonempty_bytes(m1, m2));

    CHECK(run_cli("split --dataset " + (dir.path / "ds").string() + " --out " +
                      (dir.path / "m3.json").string() + " --seed 5 --train-subjects 4",
                  dir.path)
              .status == 1);
    CmdResult eot = run_cli("split --dataset " + (dir.path / "ds").string() + " --out " +
                                (dir.path / "m4.json").string() +
                                " --seed 5 --train-subjects 4 --eval-on-train",
                            dir.path);
    REQUIRE(eot.status == 0);
    data::DatasetManifest m4 = data::load_manifest((dir.path / "m4.json").string());
    CHECK(m4.eval_subjects == m4.train_subjects);

    CHECK(run_cli("split --dataset " + (dir.path / "no_such_dir").string() + " --out " +
                      (dir.path / "m5.json").string() + " --seed 1 --train-subjects 1",
                  dir.path)
              .status == 1);
}

TEST_CASE("encode renders deterministic descriptor images") {
    TempDir dir("cli_encode");
    img::save_png(wave_card(32), (dir.path / "in.png").string());

    std::string common = "encode " + (dir.path / "in.png").string() + " --palette " +
                         golden_palette_path() + " --size 32";
    REQUIRE(run_cli(common + " --out " + (dir.path / "d1.png").string() + " --codes " +
                        (dir.path / "c1.png").string(),
                    dir.path)
                .status == 0);
    REQUIRE(run_cli(common + " --out " + (dir.path / "d2.png").string() + " --codes " +
                        (dir.path / "c2.png").string(),
                    dir.path)
                .status == 0);
    CHECK(same_nonempty_bytes(dir.path / "d1.png", dir.path / "d2.png"));
    CHECK(same_nonempty_bytes(dir.path / "c1.png", dir.path / "c2.png"));

    img::ColorImage desc = img::load_image((dir.path / "d1.png").string());
    CHECK(desc.height == 32);
    CHECK(desc.width == 32);
    img::ColorImage codes = img::load_image((dir.path / "c1.png").string());
    CHECK(codes.height == 32);
    for (int y = 0; y < codes.height; ++y)
        for (int x = 0; x < codes.width; ++x) {
            REQUIRE(codes.at(y, x, 0) == codes.at(y, x, 1));
            REQUIRE(codes.at(y, x, 1) == codes.at(y, x, 2));
        }

    img::ColorImage flat(24, 24);
    std::fill(flat.data.begin(), flat.data.end(), uint8_t{140});
    img::save_png(flat, (dir.path / "flat.png").string());
    REQUIRE(run_cli("encode " + (dir.path / "flat.png").string() + " --palette " +
                        golden_palette_path() + " --size 24 --out " +
                        (dir.path / "flat_out.png").string(),
                    dir.path)
                .status == 0);
    palette::ColorPalette pal = palette::load_palette(golden_palette_path());
    const uint8_t* expect = pal.color(170, 170);
    img::ColorImage flat_out = img::load_image((dir.path / "flat_out.png").string());
    for (int y = 0; y < flat_out.height; ++y)
        for (int x = 0; x < flat_out.width; ++x)
            for (int c = 0; c < 3; ++c) REQUIRE(flat_out.at(y, x, c) == expect[c]);

    CmdResult tiny = run_cli("encode " + (dir.path / "in.png").string() + " --palette " +
                                 golden_palette_path() + " --size 2 --out " +
                                 (dir.path / "t.png").string(),
                             dir.path);
    CHECK(tiny.status == 1);
    CHECK(tiny.err.find("error:") != std::string::npos);
}

TEST_CASE("palette build is deterministic and matches the committed file") {
    TempDir dir("cli_palette");
    CmdResult r1 = run_cli("palette --out " + (dir.path / "p1.bin").string(), dir.path);
    REQUIRE(r1.status == 0);
    CHECK(r1.out.find("hash") != std::string::npos);

    CmdResult r2 = run_cli("palette --out " + (dir.path / "p2.bin").string() +
                               " --dims 3 --swatch " + (dir.path / "sw.png").string(),
                           dir.path);
    REQUIRE(r2.status == 0);
    CHECK(same_nonempty_bytes(dir.path / "p1.bin", dir.path / "p2.bin"));
    CHECK(same_nonempty_bytes(dir.path / "p1.bin", golden_palette_path()));

    img::ColorImage sw = img::load_image((dir.path / "sw.png").string());
    CHECK(sw.height == 16);
    CHECK(sw.width == 256);

    CmdResult bad_dims =
        run_cli("palette --out " + (dir.path / "p3.bin").string() + " --dims 4", dir.path);
    CHECK(bad_dims.status == 1);
    CHECK(bad_dims.err.find("error:") != std::string::npos);

    CmdResult unwritable = run_cli("palette --out " + (dir.path / "no" / "p.bin").string(),
                                   dir.path);
    CHECK(unwritable.status == 1);
    CHECK(unwritable.err.find("error:") != std::string::npos);
}

TEST_CASE("thread cap does not change command output") {
    TempDir dir("cli_threads");
    CmdResult r = run_cli("palette --out " + (dir.path / "p.bin").string(), dir.path,
                          "OCLBCP_THREADS=1");
    REQUIRE(r.status == 0);
    CHECK(same_nonempty_bytes(dir.path / "p.bin", golden_palette_path()));
}

TEST_CASE("training logs the stepped learning-rate schedule") {
    TempDir dir("cli_lr");
    REQUIRE(run_cli("synth --classes 2 --per-class 1 --seed 13 --size 24 --out " +
                        (dir.path / "ds").string(),
                    dir.path)
                .status == 0);
    REQUIRE(run_cli("split --dataset " + (dir.path / "ds").string() + " --out " +
                        (dir.path / "m.json").string() +
                        " --seed 13 --train-subjects 2 --repetitions 1 --eval-on-train",
                    dir.path)
                .status == 0);

    std::string model = (dir.path / "model.bin").string();
    CmdResult r = run_cli("train --dataset " + (dir.path / "m.json").string() +
                              " --side left --palette " + golden_palette_path() +
                              " --seed 13 --epochs 25 --out " + model,
                          dir.path);
    REQUIRE(r.status == 0);

    std::vector<std::string> lr_tokens;
    std::istringstream lines(r.out);
    std::string line;
    while (std::getline(lines, line)) {
        if (line.rfind("epoch ", 0) != 0) continue;
        size_t lr_pos = line.find(" lr ");
        size_t loss_pos = line.find(" loss ");
        REQUIRE(lr_pos != std::string::npos);
        REQUIRE(loss_pos != std::string::npos);
        REQUIRE(loss_pos > lr_pos);
        lr_tokens.push_back(line.substr(lr_pos + 4, loss_pos - (lr_pos + 4)));
    }
    REQUIRE(lr_tokens.size() == 25);
    for (int e = 0; e < 25; ++e) {
        std::string expect = e < 10 ? "0.001" : e < 20 ? "0.0001" : "1e-05";
        CHECK(lr_tokens[static_cast<size_t>(e)] == expect);
    }

    net::ModelMeta meta;
    auto net_model = net::load_model<net::train_real_t>(model, &meta);
    CHECK(net_model.config().side == net::Side::left);
    CHECK(meta.optimizer.epochs == 25);
    CHECK(meta.train_seed == 13);
    CHECK(meta.class_labels == std::vector<std::string>{"c000", "c001"});
}

TEST_CASE("trained models identify the synthetic classes") {
    TempDir dir("cli_endtoend");
    REQUIRE(run_cli("synth --classes 5 --per-class 4 --seed 11 --size 80 --out " +
                        (dir.path / "ds").string(),
                    dir.path)
                .status == 0);
    REQUIRE(run_cli("split --dataset " + (dir.path / "ds").string() + " --out " +
                        (dir.path / "m.json").string() +
                        " --seed 11 --train-subjects 5 --repetitions 1 --eval-on-train",
                    dir.path)
                .status == 0);

    std::string model = (dir.path / "left.bin").string();
    CmdResult tr = run_cli("train --dataset " + (dir.path / "m.json").string() +
                               " --side left --palette " + golden_palette_path() +
                               " --seed 11 --epochs 15 --batch-size 4 --lr 1e-4 --out " + model,
                           dir.path);
    REQUIRE(tr.status == 0);
    REQUIRE(tr.out.find("model written") != std::string::npos);

    std::string eval_base = "eval --dataset " + (dir.path / "m.json").string() +
                            " --model-left " + model + " --model-right " + model +
                            " --palette " + golden_palette_path() + " --eyes left";
    std::string csv1 = (dir.path / "curve1.csv").string();
    CmdResult ev = run_cli(eval_base + " --out " + csv1, dir.path);
    REQUIRE(ev.status == 0);
    double rank1 = parse_rank1(ev.out);
    CHECK(rank1 >= 0.95);

    std::vector<std::string> rows;
    {
        std::istringstream csv(read_file(csv1));
        std::string line;
        while (std::getline(csv, line)) rows.push_back(line);
    }
    REQUIRE(rows.size() == 6);
    CHECK(rows[0] == "rank,rate_rep1,mean,ci_low,ci_high");
    for (int k = 1; k <= 5; ++k) CHECK(rows[static_cast<size_t>(k)].rfind(std::to_string(k) + ",", 0) == 0);
    CHECK(rows[5].find(",1.000000,") != std::string::npos);

    std::string csv2 = (dir.path / "curve2.csv").string();
    REQUIRE(run_cli(eval_base + " --out " + csv2, dir.path).status == 0);
    CHECK(same_nonempty_bytes(csv1, csv2));

    CmdResult svg = run_cli(eval_base + " --format svg --out " +
                                (dir.path / "curve.svg").string(),
                            dir.path);
    REQUIRE(svg.status == 0);
    CHECK(read_file(dir.path / "curve.svg").rfind("<svg", 0) == 0);

    CmdResult dist = run_cli(eval_base + " --score distance --out " +
                                 (dir.path / "curve3.csv").string(),
                             dir.path);
    REQUIRE(dist.status == 0);
    CHECK(std::abs(parse_rank1(dist.out) - rank1) < 1e-9);

    CmdResult missing = run_cli("eval --dataset " + (dir.path / "m.json").string() +
                                    " --model-left " + (dir.path / "nope.bin").string() +
                                    " --model-right " + model + " --palette " +
                                    golden_palette_path() + " --out " +
                                    (dir.path / "x.csv").string(),
                                dir.path);
    CHECK(missing.status == 1);
    CHECK(missing.err.find("error:") != std::string::npos);
}
