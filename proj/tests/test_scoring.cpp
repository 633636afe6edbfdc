// Copyright 2026 The GridPrune Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gridprune/error.hpp"
#include "gridprune/scoring.hpp"
#include "oracles.hpp"

using namespace gridprune;

TEST(Relevance, IdenticalAndAntipodal) {
    const std::vector<float> text{0.3f, -1.2f, 2.5f};
    const std::vector<float> emb{0.3f, -1.2f, 2.5f, -0.3f, 1.2f, -2.5f};
    const auto r = relevance_scores(emb, 3, text);
    EXPECT_EQ(r[0], 1.0);
    EXPECT_EQ(r[1], -1.0);
}

TEST(Relevance, HandChosenVectors) {
    const auto r = relevance_scores(std::vector<float>{1, 0, 0, 1, 1, 1}, 2, std::vector<float>{1, 0});
    ASSERT_EQ(r.size(), 3u);
    EXPECT_DOUBLE_EQ(r[0], 1.0);
    EXPECT_DOUBLE_EQ(r[1], 0.0);
    EXPECT_NEAR(r[2], std::sqrt(2.0) / 2.0, 1e-15);
}

TEST(Relevance, MatchesNormalizeThenDotOracle) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const auto f = oracle::random_field(rng, 5, 7, 16, 1);
        const auto r = relevance_scores(f);
        for (int i = 0; i < f.num_tokens(); ++i) {
            ASSERT_NEAR(r[i], oracle::cosine(f.embedding(i), f.text_embedding()), 1e-12);
        }
    }
}

TEST(Relevance, ZeroTextIsAnError) {
    try {
        relevance_scores(std::vector<float>{1, 2}, 2, std::vector<float>{0, 0});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ZeroNormText);
    }
}

TEST(Relevance, ZeroRowScoresZeroWithWarning) {
    std::vector<int> dead;
    const auto r = relevance_scores(std::vector<float>{0, 0, 1, 1}, 2, std::vector<float>{1, 0}, &dead);
    EXPECT_EQ(r[0], 0.0);
    EXPECT_EQ(dead, std::vector<int>{0});
}

TEST(Relevance, PositiveTextScalingIsInvariant) {
    std::mt19937_64 rng(5);
    const auto f = oracle::random_field(rng, 4, 4, 8, 1);
    std::vector<float> scaled(f.text_embedding().begin(), f.text_embedding().end());
    for (auto& x : scaled) x *= 4.0f;  // power of two keeps float products exact
    const auto g = f.with_text_embedding(scaled);
    EXPECT_EQ(relevance_scores(f), relevance_scores(g));
    for (float s : {0.37f, 13.0f}) {
        std::vector<float> other(f.text_embedding().begin(), f.text_embedding().end());
        for (auto& x : other) x *= s;
        const auto a = relevance_scores(f);
        const auto b = relevance_scores(f.with_text_embedding(other));
        for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-6);
    }
}

TEST(Saliency, DegenerateConstantIsHalf) {
    // heads x N layout: head 0 = [0.1, 0.3], head 1 = [0.3, 0.1].
    const auto f = TokenField::create(1, 2, 1, {1, 1}, ClsAttention{2, {0.1f, 0.3f, 0.3f, 0.1f}}, {1});
    const auto a = saliency_scores(f);
    EXPECT_EQ(a, (std::vector<double>{0.5, 0.5}));
}

TEST(Saliency, AlreadySpanned) {
    const auto f = TokenField::create(1, 3, 1, {1, 1, 1}, ClsAttention{1, {0.0f, 0.5f, 1.0f}}, {1});
    EXPECT_EQ(saliency_scores(f), (std::vector<double>{0.0, 0.5, 1.0}));
}

TEST(Saliency, PrecomputedOnlyNormalized) {
    const auto f = TokenField::create(1, 3, 1, {1, 1, 1}, PrecomputedSaliency{{2.0f, 4.0f, 3.0f}}, {1});
    EXPECT_EQ(saliency_scores(f), (std::vector<double>{0.0, 1.0, 0.5}));
}

TEST(Saliency, MatchesMeanThenMinMaxOracle) {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 100; ++trial) {
        const auto f = oracle::random_field(rng, 6, 6, 4, 4);
        const auto& cls = std::get<ClsAttention>(f.saliency_source());
        const auto expected = oracle::head_mean_minmax(cls.weights, 4, f.num_tokens());
        const auto a = saliency_scores(f);
        int zeros = 0, ones = 0;
        for (int i = 0; i < f.num_tokens(); ++i) {
            ASSERT_NEAR(a[i], expected[i], 1e-9);
            zeros += a[i] == 0.0;
            ones += a[i] == 1.0;
        }
        EXPECT_GE(zeros, 1);
        EXPECT_GE(ones, 1);
    }
}

TEST(Fuse, Endpoints) {
    const std::vector<double> r{-1.0, 0.2, 0.9};
    const std::vector<double> a{0.3, 1.0, 0.0};
    const auto at1 = fuse(r, a, 1.0);
    EXPECT_EQ(at1.fused, a);
    const auto at0 = fuse(r, a, 0.0);
    EXPECT_EQ(at0.fused, at0.relevance_norm);
    EXPECT_EQ(at0.relevance_norm, (std::vector<double>{0.0, 0.6, 0.95}));
}

TEST(Fuse, DirectEvaluation) {
    const auto s = fuse(std::vector<double>{0.0}, std::vector<double>{0.5}, 0.8);
    EXPECT_DOUBLE_EQ(s.fused[0], 0.5);
    EXPECT_EQ(s.alpha, 0.8);
}

TEST(Fuse, AlphaOutOfRange) {
    for (double alpha : {-0.01, 1.01, std::nan("")}) {
        try {
            fuse(std::vector<double>{0.0}, std::vector<double>{0.5}, alpha);
            FAIL() << alpha;
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::AlphaOutOfRange);
        }
    }
}

TEST(Fuse, BoundedByItsSourcesProperty) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> sym(-1.0, 1.0), unit(0.0, 1.0);
    for (int trial = 0; trial < 2000; ++trial) {
        std::vector<double> r(17), a(17);
        for (auto& x : r) x = sym(rng);
        for (auto& x : a) x = unit(rng);
        const double alpha = unit(rng);
        const auto s = fuse(r, a, alpha);
        for (int i = 0; i < 17; ++i) {
            ASSERT_DOUBLE_EQ(s.relevance_norm[i], (r[i] + 1.0) / 2.0);
            const double lo = std::min(s.relevance_norm[i], a[i]);
            const double hi = std::max(s.relevance_norm[i], a[i]);
            ASSERT_GE(s.fused[i], lo - 1e-12);
            ASSERT_LE(s.fused[i], hi + 1e-12);
            ASSERT_GE(s.fused[i], 0.0);
            ASSERT_LE(s.fused[i], 1.0);
        }
    }
}

TEST(Presets, TunedAlphaTable) {
    EXPECT_EQ(find_preset("llava15-33").alpha, 0.8);
    EXPECT_EQ(find_preset("llava15-22").alpha, 0.7);
    EXPECT_EQ(find_preset("llava15-11").alpha, 0.7);
    EXPECT_EQ(find_preset("llava-next-22").alpha, 0.8);
    EXPECT_EQ(find_preset("llava-next-11").alpha, 0.7);
    EXPECT_EQ(find_preset("llava-next-5").alpha, 0.7);
    for (const char* q : {"qwen25vl-33", "qwen25vl-22", "qwen25vl-11"}) EXPECT_EQ(find_preset(q).alpha, 0.7);
    EXPECT_EQ(alpha_presets().size(), 9u);
    EXPECT_THROW(find_preset("llava15-50"), Error);
}
