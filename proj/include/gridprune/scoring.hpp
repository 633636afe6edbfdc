// Copyright 2026 The GridPrune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "gridprune/token_field.hpp"

namespace gridprune {

/// Per-token importance scores for one field.
///   relevance      cosine(embedding, text) in [-1, 1]
///   relevance_norm (relevance + 1) / 2
///   saliency       head-averaged attention, min-max normalized to [0, 1]
///   fused          (1 - alpha) * relevance_norm + alpha * saliency
struct ScoreSet {
    std::vector<double> relevance;
    std::vector<double> relevance_norm;
    std::vector<double> saliency;
    std::vector<double> fused;
    double alpha = 0.0;

    int size() const noexcept { return static_cast<int>(fused.size()); }
};

/// Plain cosine similarity of every embedding row against `text`.
/// Rows with zero norm score 0 and are appended to `zero_norm_tokens`.
std::vector<double> relevance_scores(std::span<const float> embeddings, int embed_dim,
                                     std::span<const float> text,
                                     std::vector<int>* zero_norm_tokens = nullptr);
std::vector<double> relevance_scores(const TokenField& field, std::vector<int>* zero_norm_tokens = nullptr);

/// A constant input maps to 0.5 everywhere.
std::vector<double> min_max_normalize(std::span<const double> values);

std::vector<double> saliency_scores(const TokenField& field);

ScoreSet fuse(std::span<const double> relevance, std::span<const double> saliency, double alpha);

ScoreSet score_field(const TokenField& field, double alpha, std::vector<int>* zero_norm_tokens = nullptr);

struct AlphaPreset {
    std::string_view name;
    std::string_view model;
    double retention_percent;
    double alpha;
};

/// Fusion weights tuned per model and retention ratio.
std::span<const AlphaPreset> alpha_presets();
const AlphaPreset& find_preset(std::string_view name);

}  // namespace gridprune
