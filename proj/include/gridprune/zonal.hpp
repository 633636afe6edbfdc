// Copyright 2026 The GridPrune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gridprune/scoring.hpp"

namespace gridprune {

struct Zone {
    int id = 0;
    /// Token indices in raster order.
    std::vector<int> members;

    int capacity() const noexcept { return static_cast<int>(members.size()); }
};

/// Partition of a patch grid into square zones of side `block_size`.
/// Zones on the right/bottom edge of a non-divisible grid are truncated
/// rectangles. Zone ids are raster-ordered by their top-left token.
class ZoneMap {
public:
    ZoneMap(int grid_h, int grid_w, int block_size);

    int grid_h() const noexcept { return m_grid_h; }
    int grid_w() const noexcept { return m_grid_w; }
    int block_size() const noexcept { return m_block_size; }
    int num_zones() const noexcept { return static_cast<int>(m_zones.size()); }
    int num_tokens() const noexcept { return m_grid_h * m_grid_w; }

    const std::vector<Zone>& zones() const noexcept { return m_zones; }
    const std::vector<int>& token_to_zone() const noexcept { return m_token_to_zone; }
    std::vector<int> capacities() const;

private:
    int m_grid_h;
    int m_grid_w;
    int m_block_size;
    std::vector<Zone> m_zones;
    std::vector<int> m_token_to_zone;
};

ZoneMap partition(int grid_h, int grid_w, int block_size);

struct BudgetAllocation {
    std::vector<double> float_budgets;
    std::vector<double> probs;
    std::vector<int> budgets;
    int k = 0;
};

struct SelectionConfig {
    std::string method = "gridprune";
    int k = 0;
    /// 0 for methods without zones.
    int block_size = 0;
    std::optional<double> alpha;
};

struct Selection {
    /// Strictly increasing raster indices.
    std::vector<int> kept_indices;
    /// Indexed by zone id; empty for zone-free baselines.
    std::vector<std::vector<int>> per_zone;
    BudgetAllocation budgets;
    int num_tokens = 0;
    SelectionConfig config;
};

/// Mean of the raw relevance over each zone's members.
std::vector<double> zone_relevance(std::span<const double> relevance, const ZoneMap& zmap);

/// Max-subtracted softmax. The denominator is summed in ascending order of
/// the inputs so the result does not depend on zone labeling.
std::vector<double> softmax(std::span<const double> logits);

/// Integer apportionment of fractional budgets under per-zone caps:
/// capped floors, then the residual goes one token per zone per pass in
/// order of (fractional part desc, float budget desc, index asc) among
/// zones still below capacity, repeating passes until exhausted.
std::vector<int> apportion(std::span<const double> float_budgets, std::span<const int> capacities, int k);

BudgetAllocation allocate(std::span<const double> zone_rel, std::span<const int> capacities, int k);

/// Keeps the budgets[j] highest fused scores in each zone (ties: lower index).
Selection select(const ScoreSet& scores, const ZoneMap& zmap, const BudgetAllocation& budget);

/// The k highest fused scores over the whole field (ties: lower index).
Selection global_topk(const ScoreSet& scores, int k);
/// Ranks on an arbitrary score vector, e.g. saliency alone.
Selection global_topk(std::span<const double> scores, int k);

/// The last k raster indices.
Selection tail_k_baseline(int num_tokens, int k);

}  // namespace gridprune
