// Copyright 2026 The GridPrune Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cstdlib>
#include <random>
#include <sstream>

#include "gridprune/cli.hpp"
#include "gridprune/pipeline.hpp"
#include "gridprune/selection_io.hpp"
#include "gridprune/synth.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace gridprune;
using testing_util::slurp;
using testing_util::TempDir;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run_cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string p(const std::filesystem::path& path) { return path.string(); }

}  // namespace

TEST(Cli, FlopsPrintsTwoDecimals) {
    const auto r = run_cli({"flops", "--tokens", "576", "--layers", "32", "--hidden", "4096", "--ffn", "11008"});
    EXPECT_EQ(r.code, 0);
    EXPECT_EQ(r.out, "3.82\n");
    EXPECT_NE(r.err.find("resolved config"), std::string::npos);
}

TEST(Cli, PruneRejectsKeepAboveTokenCount) {
    TempDir dir;
    std::mt19937_64 rng(1);
    save_field(oracle::random_field(rng, 4, 4, 8, 2), dir / "f");
    const auto r = run_cli({"prune", "--input", p(dir / "f"), "--keep", "17", "--alpha", "0.5", "--out",
                            p(dir / "s.json")});
    EXPECT_EQ(r.code, cli::kExitValidation);
    EXPECT_NE(r.err.find("keep exceeds token count"), std::string::npos) << r.err;
}

TEST(Cli, UsageErrorsNameTheFlag) {
    auto r = run_cli({"flops", "--tokens", "5", "--layers", "1", "--hidden", "1", "--ffn", "1", "--warp", "9"});
    EXPECT_EQ(r.code, cli::kExitValidation);
    EXPECT_NE(r.err.find("--warp"), std::string::npos) << r.err;
    EXPECT_EQ(std::count(r.err.begin(), r.err.end(), '\n'), 1);
    r = run_cli({"flops", "--tokens", "5", "--layers", "1", "--hidden", "1"});
    EXPECT_EQ(r.code, cli::kExitValidation);
    EXPECT_NE(r.err.find("--ffn"), std::string::npos) << r.err;
    r = run_cli({"nonsense"});
    EXPECT_EQ(r.code, cli::kExitValidation);
}

TEST(Cli, MissingInputIsIoError) {
    TempDir dir;
    const auto r = run_cli({"prune", "--input", p(dir / "nope"), "--keep", "4", "--alpha", "0.5", "--out",
                            p(dir / "s.json")});
    EXPECT_EQ(r.code, cli::kExitIo);
}

TEST(Cli, PresetAndExplicitAlpha) {
    TempDir dir;
    std::mt19937_64 rng(2);
    save_field(oracle::random_field(rng, 6, 6, 8, 2), dir / "f");
    auto r = run_cli({"prune", "--input", p(dir / "f"), "--keep", "9", "--preset", "llava15-33", "--out",
                      p(dir / "a.json")});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(read_selection(dir / "a.json").config.alpha, 0.8);
    r = run_cli({"prune", "--input", p(dir / "f"), "--keep", "9", "--preset", "llava15-33", "--alpha", "0.25",
                 "--out", p(dir / "b.json")});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(read_selection(dir / "b.json").config.alpha, 0.25);
    r = run_cli({"prune", "--input", p(dir / "f"), "--keep", "9", "--out", p(dir / "c.json")});
    EXPECT_EQ(r.code, cli::kExitValidation);
    r = run_cli({"prune", "--input", p(dir / "f"), "--keep", "9", "--preset", "gpt-4", "--out", p(dir / "c.json")});
    EXPECT_EQ(r.code, cli::kExitValidation);
}

TEST(Cli, ConfigOverlayFlagsWin) {
    TempDir dir;
    std::mt19937_64 rng(3);
    save_field(oracle::random_field(rng, 6, 6, 8, 2), dir / "f");
    testing_util::spit(dir / "run.toml", "[prune]\nkeep = 12\nalpha = 0.3\nblock-size = 3\n");
    auto r = run_cli({"--config", p(dir / "run.toml"), "prune", "--input", p(dir / "f"), "--alpha", "0.9", "--out",
                      p(dir / "s.json")});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto sel = read_selection(dir / "s.json");
    EXPECT_EQ(sel.kept_indices.size(), 12u);
    EXPECT_EQ(sel.config.block_size, 3);
    EXPECT_EQ(sel.config.alpha, 0.9);
    testing_util::spit(dir / "bad.toml", "[prune]\nkeep = 12\nturbo = true\n");
    r = run_cli({"--config", p(dir / "bad.toml"), "prune", "--input", p(dir / "f"), "--alpha", "0.9", "--out",
                 p(dir / "s.json")});
    EXPECT_EQ(r.code, cli::kExitValidation);
}

TEST(Cli, PruneThenBiasRoundTripsSelections) {
    TempDir dir;
    auto r = run_cli({"synth", "--pattern", "sink_tail", "--count", "3", "--seed", "42", "--out", p(dir / "corpus")});
    ASSERT_EQ(r.code, 0) << r.err;
    for (int i = 0; i < 3; ++i) {
        const auto scene = dir / "corpus" / ("scene_000" + std::to_string(i));
        r = run_cli({"prune", "--input", p(scene), "--keep", "192", "--alpha", "0.8", "--out",
                     p(dir / "sel" / ("s" + std::to_string(i) + ".json"))});
        ASSERT_EQ(r.code, 0) << r.err;
        const auto text = slurp(dir / "sel" / ("s" + std::to_string(i) + ".json"));
        ASSERT_EQ(dump_json(selection_to_json(selection_from_json(nlohmann::json::parse(text)))), text);
    }
    r = run_cli({"bias", "--selections", p(dir / "sel" / "s*.json"), "--tokens", "576", "--out",
                 p(dir / "bias.json"), "--tsv", p(dir / "hist.tsv"), "--grid-h", "24", "--grid-w", "24",
                 "--block-size", "2"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto report = nlohmann::json::parse(slurp(dir / "bias.json"));
    EXPECT_EQ(report.at("sample_count"), 3);
    EXPECT_EQ(report.at("total_kept"), 576);
    EXPECT_FALSE(slurp(dir / "hist.tsv").empty());
    r = run_cli({"bias", "--selections", p(dir / "sel" / "*.json"), "--tokens", "100"});
    EXPECT_EQ(r.code, cli::kExitValidation);
    r = run_cli({"bias", "--selections", p(dir / "sel" / "zz*.json"), "--tokens", "576"});
    EXPECT_EQ(r.code, cli::kExitIo);
}

TEST(Cli, AllocateFromFiles) {
    TempDir dir;
    testing_util::spit(dir / "rel.txt", "0.1 0.1\n0.1 0.1\n");
    testing_util::spit(dir / "caps.json", "[4, 4, 4, 4]");
    const auto r = run_cli({"allocate", "--zone-rel", p(dir / "rel.txt"), "--capacities", p(dir / "caps.json"),
                            "--keep", "8"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto doc = nlohmann::json::parse(r.out);
    EXPECT_EQ(doc.at("budgets"), nlohmann::json({2, 2, 2, 2}));
    const auto over = run_cli({"allocate", "--zone-rel", p(dir / "rel.txt"), "--capacities", p(dir / "caps.json"),
                               "--keep", "17"});
    EXPECT_EQ(over.code, cli::kExitValidation);
}

TEST(Cli, PruneHighRes) {
    TempDir dir;
    std::mt19937_64 rng(4);
    HighResInput in;
    for (int s = 0; s < 5; ++s) {
        in.sub_images.push_back(oracle::random_field(rng, 24, 24, 8, 2));
        in.names.push_back("tile_" + std::to_string(s));
    }
    in.text_embedding.assign(in.sub_images[0].text_embedding().begin(), in.sub_images[0].text_embedding().end());
    save_high_res(in, dir / "hr");
    const auto r = run_cli({"prune-hr", "--input", p(dir / "hr"), "--keep", "64", "--preset", "llava-next-11",
                            "--out", p(dir / "hr.json"), "--gather", p(dir / "rows.f32")});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto doc = nlohmann::json::parse(slurp(dir / "hr.json"));
    EXPECT_EQ(doc.at("concatenated").size(), 320u);
    EXPECT_EQ(doc.at("sub_images").size(), 5u);
    EXPECT_EQ(std::filesystem::file_size(dir / "rows.f32"), 320u * 8u * 4u);
}

TEST(Cli, CompareEmitsMarkdown) {
    TempDir dir;
    ASSERT_EQ(run_cli({"synth", "--pattern", "centered_object", "--count", "4", "--seed", "1", "--out",
                       p(dir / "c")})
                  .code,
              0);
    const auto r = run_cli({"compare", "--methods", "gridprune,saliency_topk,tail_k", "--corpus", p(dir / "c"),
                            "--keep", "64", "--alpha", "0.7", "--json", p(dir / "cmp.json")});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("| gridprune |"), std::string::npos);
    EXPECT_NE(r.out.find("| recall |"), std::string::npos);
    EXPECT_EQ(nlohmann::json::parse(slurp(dir / "cmp.json")).at("rows").size(), 3u);
    EXPECT_EQ(run_cli({"compare", "--methods", "magic", "--corpus", p(dir / "c"), "--keep", "64", "--alpha", "0.7"})
                  .code,
              cli::kExitValidation);
}

TEST(Cli, SynthTwiceIsIdentical) {
    TempDir dir;
    for (const char* sub : {"a", "b"}) {
        ASSERT_EQ(run_cli({"synth", "--pattern", "multi_object", "--count", "3", "--seed", "42", "--out",
                           p(dir / sub)})
                      .code,
                  0);
    }
    EXPECT_EQ(testing_util::tree_digest(dir / "a"), testing_util::tree_digest(dir / "b"));
    EXPECT_EQ(run_cli({"synth", "--pattern", "centered_object", "--seed", "1", "--rect", "30,0,2,2", "--out",
                       p(dir / "bad")})
                  .code,
              cli::kExitValidation);
}

TEST(Cli, BinaryExitCodes) {
    const std::string bin = GRIDPRUNE_CLI_PATH;
    EXPECT_EQ(std::system((bin + " flops --tokens 1 --layers 1 --hidden 1 --ffn 1 > /dev/null 2>&1").c_str()), 0);
    const int status = std::system((bin + " flops --tokens 1 --bogus > /dev/null 2>&1").c_str());
    EXPECT_EQ(WEXITSTATUS(status), 1);
    const int io = std::system((bin + " prune --input /nonexistent --keep 1 --alpha 0.5 --out /dev/null "
                                      "> /dev/null 2>&1")
                                   .c_str());
    EXPECT_EQ(WEXITSTATUS(io), 2);
}
