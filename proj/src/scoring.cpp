// Copyright 2026 The GridPrune Authors
// SPDX-License-Identifier: Apache-2.0

#include "gridprune/scoring.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "gridprune/error.hpp"

namespace gridprune {

namespace {

double squared_norm(std::span<const float> v) {
    double acc = 0.0;
    for (float x : v) acc += static_cast<double>(x) * x;
    return acc;
}

constexpr std::array<AlphaPreset, 9> kPresets{{
    {"llava15-33", "llava15", 33.3, 0.8},
    {"llava15-22", "llava15", 22.2, 0.7},
    {"llava15-11", "llava15", 11.1, 0.7},
    {"llava-next-22", "llava-next", 22.2, 0.8},
    {"llava-next-11", "llava-next", 11.1, 0.7},
    {"llava-next-5", "llava-next", 5.6, 0.7},
    {"qwen25vl-33", "qwen25vl", 33.3, 0.7},
    {"qwen25vl-22", "qwen25vl", 22.2, 0.7},
    {"qwen25vl-11", "qwen25vl", 11.1, 0.7},
}};

}  // namespace

std::vector<double> relevance_scores(std::span<const float> embeddings, int embed_dim,
                                     std::span<const float> text, std::vector<int>* zero_norm_tokens) {
    if (embed_dim <= 0 || text.size() != static_cast<std::size_t>(embed_dim) ||
        embeddings.size() % static_cast<std::size_t>(embed_dim) != 0) {
        fail(ErrorCode::ShapeMismatch, "embedding and text dimensions disagree");
    }
    const double text_sq = squared_norm(text);
    if (text_sq == 0.0) {
        fail(ErrorCode::ZeroNormText, "text embedding is all zeros");
    }
    const auto n = static_cast<int>(embeddings.size() / embed_dim);
    std::vector<double> out(n);
    for (int i = 0; i < n; ++i) {
        const auto row = embeddings.subspan(static_cast<std::size_t>(i) * embed_dim, embed_dim);
        double dot = 0.0;
        double row_sq = 0.0;
        for (int c = 0; c < embed_dim; ++c) {
            dot += static_cast<double>(row[c]) * text[c];
            row_sq += static_cast<double>(row[c]) * row[c];
        }
        if (row_sq == 0.0) {
            out[i] = 0.0;
            if (zero_norm_tokens) zero_norm_tokens->push_back(i);
            continue;
        }
        // sqrt of the product keeps cos(v, v) == 1 exactly.
        out[i] = std::clamp(dot / std::sqrt(row_sq * text_sq), -1.0, 1.0);
    }
    return out;
}

std::vector<double> relevance_scores(const TokenField& field, std::vector<int>* zero_norm_tokens) {
    return relevance_scores(field.embeddings(), field.embed_dim(), field.text_embedding(), zero_norm_tokens);
}

std::vector<double> min_max_normalize(std::span<const double> values) {
    std::vector<double> out(values.size(), 0.5);
    if (values.empty()) return out;
    const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    const double lo = *lo_it;
    const double range = *hi_it - lo;
    if (range == 0.0) return out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        out[i] = (values[i] - lo) / range;
    }
    return out;
}

std::vector<double> saliency_scores(const TokenField& field) {
    const int n = field.num_tokens();
    std::vector<double> raw(n, 0.0);
    if (const auto* cls = std::get_if<ClsAttention>(&field.saliency_source())) {
        for (int h = 0; h < cls->num_heads; ++h) {
            const float* row = cls->weights.data() + static_cast<std::size_t>(h) * n;
            for (int i = 0; i < n; ++i) raw[i] += row[i];
        }
        for (auto& v : raw) v /= cls->num_heads;
    } else {
        const auto& pre = std::get<PrecomputedSaliency>(field.saliency_source()).values;
        std::copy(pre.begin(), pre.end(), raw.begin());
    }
    return min_max_normalize(raw);
}

ScoreSet fuse(std::span<const double> relevance, std::span<const double> saliency, double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        fail(ErrorCode::AlphaOutOfRange, "alpha must lie in [0, 1], got " + std::to_string(alpha));
    }
    if (relevance.size() != saliency.size()) {
        fail(ErrorCode::ShapeMismatch, "relevance and saliency lengths differ");
    }
    ScoreSet s;
    s.alpha = alpha;
    s.relevance.assign(relevance.begin(), relevance.end());
    s.saliency.assign(saliency.begin(), saliency.end());
    s.relevance_norm.resize(relevance.size());
    s.fused.resize(relevance.size());
    for (std::size_t i = 0; i < relevance.size(); ++i) {
        s.relevance_norm[i] = (relevance[i] + 1.0) / 2.0;
        s.fused[i] = (1.0 - alpha) * s.relevance_norm[i] + alpha * saliency[i];
    }
    return s;
}

ScoreSet score_field(const TokenField& field, double alpha, std::vector<int>* zero_norm_tokens) {
    const auto relevance = relevance_scores(field, zero_norm_tokens);
    const auto saliency = saliency_scores(field);
    return fuse(relevance, saliency, alpha);
}

std::span<const AlphaPreset> alpha_presets() { return kPresets; }

const AlphaPreset& find_preset(std::string_view name) {
    for (const auto& p : kPresets) {
        if (p.name == name) return p;
    }
    fail(ErrorCode::InvalidConfig, "unknown preset '" + std::string(name) + "'");
}

}  // namespace gridprune
