// Copyright 2026 The GridPrune Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "gridprune/error.hpp"
#include "gridprune/pipeline.hpp"
#include "gridprune/selection_io.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace gridprune;

TEST(GridPrune, StandardConfiguration) {
    std::mt19937_64 rng(1);
    const auto f = oracle::random_field(rng, 24, 24, 32, 4);
    const auto sel = grid_prune(f, PruneConfig{192, 2, 0.8, std::nullopt});
    EXPECT_EQ(sel.kept_indices.size(), 192u);
    EXPECT_EQ(sel.per_zone.size(), 144u);
    EXPECT_EQ(std::accumulate(sel.budgets.budgets.begin(), sel.budgets.budgets.end(), 0), 192);
    EXPECT_EQ(sel.config.block_size, 2);
    EXPECT_EQ(sel.config.alpha, 0.8);
}

TEST(GridPrune, KeepAllIsIdentity) {
    std::mt19937_64 rng(2);
    const auto f = oracle::random_field(rng, 5, 7, 8, 2);
    const auto sel = grid_prune(f, PruneConfig{35, 3, 0.5, std::nullopt});
    std::vector<int> all(35);
    std::iota(all.begin(), all.end(), 0);
    EXPECT_EQ(sel.kept_indices, all);
}

TEST(GridPrune, RejectsKeepAboveTokenCount) {
    std::mt19937_64 rng(3);
    const auto f = oracle::random_field(rng, 2, 2, 4, 1);
    try {
        grid_prune(f, PruneConfig{5, 1, 0.5, std::nullopt});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::BudgetExceedsCapacity);
        EXPECT_NE(std::string(e.what()).find("keep exceeds token count"), std::string::npos);
    }
    EXPECT_THROW(grid_prune(f, PruneConfig{0, 1, 0.5, std::nullopt}), Error);
    EXPECT_THROW(grid_prune(f, PruneConfig{2, 1, 1.5, std::nullopt}), Error);
}

TEST(GridPrune, IsTheCompositionOfItsStages) {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 50; ++trial) {
        const auto f = oracle::random_field(rng, 9, 11, 8, 3);
        const PruneConfig cfg{40, 3, 0.6, std::nullopt};
        const auto scores = fuse(relevance_scores(f), saliency_scores(f), cfg.alpha);
        const auto zmap = partition(9, 11, 3);
        const auto budget = allocate(zone_relevance(scores.relevance, zmap), zmap.capacities(), cfg.k);
        const auto manual = select(scores, zmap, budget);
        const auto sel = grid_prune(f, cfg);
        ASSERT_EQ(sel.kept_indices, manual.kept_indices);
        ASSERT_EQ(sel.budgets.budgets, manual.budgets.budgets);
        // Referential transparency.
        ASSERT_EQ(selection_to_json(sel), selection_to_json(grid_prune(f, cfg)));
    }
}

TEST(GridPrune, BlockCoveringGridEqualsGlobalTopK) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        const auto f = oracle::random_field(rng, 24, 24, 8, 2, trial % 2 ? 4 : 0);
        const auto sel = grid_prune(f, PruneConfig{192, 24, 0.8, std::nullopt});
        ASSERT_EQ(sel.kept_indices, global_topk(score_field(f, 0.8), 192).kept_indices);
    }
}

TEST(GridPrune, TextScaleDoesNotChangeSelection) {
    std::mt19937_64 rng(6);
    const auto f = oracle::random_field(rng, 12, 12, 16, 2);
    std::vector<float> scaled(f.text_embedding().begin(), f.text_embedding().end());
    for (auto& x : scaled) x *= 8.0f;
    const PruneConfig cfg{48, 2, 0.7, std::nullopt};
    EXPECT_EQ(grid_prune(f, cfg).kept_indices, grid_prune(f.with_text_embedding(scaled), cfg).kept_indices);
}

TEST(GridPrune, GatherFollowsKeptOrder) {
    std::mt19937_64 rng(7);
    const auto f = oracle::random_field(rng, 6, 6, 5, 1);
    const auto sel = grid_prune(f, PruneConfig{10, 2, 0.5, std::nullopt});
    const auto rows = gather_embeddings(f, sel.kept_indices);
    ASSERT_EQ(rows.size(), 50u);
    for (std::size_t r = 0; r < sel.kept_indices.size(); ++r) {
        const auto src = f.embedding(sel.kept_indices[r]);
        ASSERT_TRUE(std::equal(src.begin(), src.end(), rows.begin() + r * 5));
    }
}

namespace {

HighResInput random_high_res(std::mt19937_64& rng, int count) {
    HighResInput in;
    for (int s = 0; s < count; ++s) {
        in.sub_images.push_back(oracle::random_field(rng, 24, 24, 16, 2));
        in.names.push_back("sub_" + std::to_string(s));
    }
    in.text_embedding.assign(in.sub_images[0].text_embedding().begin(), in.sub_images[0].text_embedding().end());
    return in;
}

}  // namespace

TEST(HighRes, FiveSubImagesKeep64Each) {
    std::mt19937_64 rng(8);
    const auto in = random_high_res(rng, 5);
    const auto out = prune_high_res(in, PruneConfig{64, 2, 0.7, std::nullopt});
    ASSERT_EQ(out.selections.size(), 5u);
    ASSERT_EQ(out.concatenated.size(), 320u);
    for (int s = 0; s < 5; ++s) {
        ASSERT_EQ(out.offsets[s], 576 * s);
        for (int i = 0; i < 64; ++i) {
            const int g = out.concatenated[s * 64 + i];
            ASSERT_GE(g, 576 * s);
            ASSERT_LT(g, 576 * (s + 1));
            ASSERT_EQ(g - 576 * s, out.selections[s].kept_indices[i]);
        }
    }
}

TEST(HighRes, SharedTextEmbeddingOverridesSubImages) {
    std::mt19937_64 rng(9);
    auto in = random_high_res(rng, 3);
    const PruneConfig cfg{50, 2, 0.4, std::nullopt};
    const auto out = prune_high_res(in, cfg);
    for (int s = 0; s < 3; ++s) {
        const auto expect = grid_prune(in.sub_images[s].with_text_embedding(in.text_embedding), cfg);
        EXPECT_EQ(out.selections[s].kept_indices, expect.kept_indices);
    }
}

TEST(HighRes, SingleSubImageMatchesGridPrune) {
    std::mt19937_64 rng(10);
    const auto in = random_high_res(rng, 1);
    const PruneConfig cfg{100, 2, 0.8, std::nullopt};
    EXPECT_EQ(prune_high_res(in, cfg).concatenated, grid_prune(in.sub_images[0], cfg).kept_indices);
}

TEST(HighRes, PermutingSubImagesPermutesBlocks) {
    std::mt19937_64 rng(11);
    const auto in = random_high_res(rng, 5);
    const PruneConfig cfg{64, 2, 0.7, std::nullopt};
    const auto base = prune_high_res(in, cfg);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<int> perm{0, 1, 2, 3, 4};
        std::shuffle(perm.begin(), perm.end(), rng);
        HighResInput p;
        p.text_embedding = in.text_embedding;
        for (int s : perm) p.sub_images.push_back(in.sub_images[s]);
        const auto out = prune_high_res(p, cfg, 3);
        for (int s = 0; s < 5; ++s) {
            ASSERT_EQ(out.selections[s].kept_indices, base.selections[perm[s]].kept_indices);
        }
    }
}

TEST(HighRes, GatherAndDiskRoundTrip) {
    std::mt19937_64 rng(12);
    const auto in = random_high_res(rng, 2);
    testing_util::TempDir dir;
    save_high_res(in, dir.path());
    const auto loaded = load_high_res(dir.path());
    ASSERT_EQ(loaded.names, in.names);
    ASSERT_EQ(loaded.text_embedding, in.text_embedding);
    const PruneConfig cfg{30, 2, 0.5, std::nullopt};
    const auto a = prune_high_res(in, cfg);
    const auto b = prune_high_res(loaded, cfg);
    EXPECT_EQ(a.concatenated, b.concatenated);
    const auto rows = gather_high_res(in, a);
    ASSERT_EQ(rows.size(), 60u * 16u);
    const auto last = in.sub_images[1].embedding(a.selections[1].kept_indices.back());
    EXPECT_TRUE(std::equal(last.begin(), last.end(), rows.end() - 16));
    const auto doc = high_res_to_json(in, a);
    EXPECT_EQ(doc.at("sub_images").size(), 2u);
    EXPECT_EQ(doc.at("sub_images")[1].at("sub_image"), 1);
}

TEST(HighRes, OrderFileIsStrict) {
    testing_util::TempDir dir;
    testing_util::spit(dir / "order.json", R"({"version": "1", "sub_images": ["a"], "tiles": 4})");
    EXPECT_THROW(load_high_res(dir.path()), Error);
    testing_util::spit(dir / "order.json", R"({"version": "1", "sub_images": []})");
    EXPECT_THROW(load_high_res(dir.path()), Error);
}

TEST(HighResIo, EmptyTextFallsBackToFirstSubImage) {
    testing_util::TempDir dir;
    std::mt19937_64 rng(31);
    HighResInput in;
    for (int s = 0; s < 2; ++s) {
        in.sub_images.push_back(oracle::random_field(rng, 4, 4, 8, 2));
        in.names.push_back("t" + std::to_string(s));
    }
    save_high_res(in, dir.path());
    EXPECT_FALSE(std::filesystem::exists(dir / "text_embedding.f32"));
    const auto back = load_high_res(dir.path());
    const auto first = in.sub_images[0].text_embedding();
    EXPECT_EQ(back.text_embedding, std::vector<float>(first.begin(), first.end()));
}
