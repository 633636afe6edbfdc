// Copyright 2026 The GridPrune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gridprune/token_field.hpp"
#include "gridprune/zonal.hpp"
#include "json.hpp"

namespace gridprune {

struct PruneConfig {
    int k = 0;
    int block_size = 2;
    double alpha = 0.8;
    std::optional<std::string> preset;

    /// Throws InvalidConfig / InvalidBlockSize / AlphaOutOfRange.
    void validate() const;
};

/// score -> partition -> allocate -> select.
Selection grid_prune(const TokenField& field, const PruneConfig& cfg,
                     std::vector<int>* zero_norm_tokens = nullptr);
/// Same flow from already-computed scores.
Selection grid_prune(const ScoreSet& scores, int grid_h, int grid_w, const PruneConfig& cfg);

/// Rows embeddings[kept[0]], embeddings[kept[1]], ... concatenated.
std::vector<float> gather_embeddings(const TokenField& field, std::span<const int> kept);

/// Sub-images of one high-resolution image (e.g. four tiles plus a global
/// view), pruned with one shared prompt embedding.
struct HighResInput {
    std::vector<std::string> names;
    std::vector<TokenField> sub_images;
    std::vector<float> text_embedding;
};

struct HighResResult {
    std::vector<Selection> selections;
    /// offsets[s] = total tokens of sub-images before s.
    std::vector<int> offsets;
    /// Kept tokens of every sub-image in order, as indices into the
    /// concatenated token stream of all sub-images.
    std::vector<int> concatenated;
};

HighResResult prune_high_res(const HighResInput& input, const PruneConfig& cfg, int workers = 1);

/// Gathered rows in the concatenated kept order.
std::vector<float> gather_high_res(const HighResInput& input, const HighResResult& result);

inline constexpr const char* kOrderFileName = "order.json";

/// Directory with order.json {version, sub_images: [dir...], text_embedding?}.
/// Without a text_embedding blob the first sub-image's embedding is shared.
HighResInput load_high_res(const std::filesystem::path& directory);
void save_high_res(const HighResInput& input, const std::filesystem::path& directory);

nlohmann::json high_res_to_json(const HighResInput& input, const HighResResult& result);

}  // namespace gridprune
