// Copyright 2026 The GridPrune Authors
// SPDX-License-Identifier: Apache-2.0

#include "gridprune/zonal.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gridprune/error.hpp"

namespace gridprune {

namespace {

int ceil_div(int a, int b) { return (a + b - 1) / b; }

// Indices of the `count` largest scores among `candidates`, ties to the lower
// index, returned in ascending index order.
std::vector<int> top_by_score(std::vector<int> candidates, std::span<const double> scores, int count) {
    auto better = [&](int a, int b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;
    };
    count = std::min<int>(count, static_cast<int>(candidates.size()));
    std::partial_sort(candidates.begin(), candidates.begin() + count, candidates.end(), better);
    candidates.resize(count);
    std::sort(candidates.begin(), candidates.end());
    return candidates;
}

}  // namespace

ZoneMap::ZoneMap(int grid_h, int grid_w, int block_size)
    : m_grid_h(grid_h), m_grid_w(grid_w), m_block_size(block_size) {
    if (grid_h <= 0 || grid_w <= 0) {
        fail(ErrorCode::ShapeMismatch, "grid dimensions must be positive");
    }
    if (block_size < 1 || block_size > std::max(grid_h, grid_w)) {
        fail(ErrorCode::InvalidBlockSize, "block size " + std::to_string(block_size) +
                                              " outside [1, " + std::to_string(std::max(grid_h, grid_w)) +
                                              "]");
    }
    const int zone_rows = ceil_div(grid_h, block_size);
    const int zone_cols = ceil_div(grid_w, block_size);
    m_zones.resize(static_cast<std::size_t>(zone_rows) * zone_cols);
    m_token_to_zone.resize(static_cast<std::size_t>(grid_h) * grid_w);
    for (int j = 0; j < static_cast<int>(m_zones.size()); ++j) m_zones[j].id = j;
    for (int row = 0; row < grid_h; ++row) {
        for (int col = 0; col < grid_w; ++col) {
            const int token = row * grid_w + col;
            const int zone = (row / block_size) * zone_cols + col / block_size;
            m_zones[zone].members.push_back(token);
            m_token_to_zone[token] = zone;
        }
    }
}

std::vector<int> ZoneMap::capacities() const {
    std::vector<int> out;
    out.reserve(m_zones.size());
    for (const auto& z : m_zones) out.push_back(z.capacity());
    return out;
}

ZoneMap partition(int grid_h, int grid_w, int block_size) { return ZoneMap(grid_h, grid_w, block_size); }

std::vector<double> zone_relevance(std::span<const double> relevance, const ZoneMap& zmap) {
    if (relevance.size() != static_cast<std::size_t>(zmap.num_tokens())) {
        fail(ErrorCode::ShapeMismatch, "relevance length does not match the zone map");
    }
    std::vector<double> out;
    out.reserve(zmap.zones().size());
    for (const auto& zone : zmap.zones()) {
        double sum = 0.0;
        for (int t : zone.members) sum += relevance[t];
        out.push_back(sum / zone.capacity());
    }
    return out;
}

std::vector<double> softmax(std::span<const double> logits) {
    if (logits.empty()) return {};
    const double peak = *std::max_element(logits.begin(), logits.end());
    std::vector<double> exps(logits.size());
    for (std::size_t j = 0; j < logits.size(); ++j) exps[j] = std::exp(logits[j] - peak);
    std::vector<double> sorted = exps;
    std::sort(sorted.begin(), sorted.end());
    const double total = std::accumulate(sorted.begin(), sorted.end(), 0.0);
    for (auto& e : exps) e /= total;
    return exps;
}

std::vector<int> apportion(std::span<const double> float_budgets, std::span<const int> capacities, int k) {
    const std::size_t m = float_budgets.size();
    if (capacities.size() != m) {
        fail(ErrorCode::ShapeMismatch, "float budgets and capacities differ in length");
    }
    if (k < 0) {
        fail(ErrorCode::InvalidConfig, "k must be non-negative");
    }
    long long total_capacity = 0;
    for (int c : capacities) {
        if (c < 0) fail(ErrorCode::InvalidConfig, "zone capacity must be non-negative");
        total_capacity += c;
    }
    if (k > total_capacity) {
        fail(ErrorCode::BudgetExceedsCapacity, "k = " + std::to_string(k) + " exceeds total zone capacity " +
                                                   std::to_string(total_capacity));
    }
    if (k == total_capacity) {
        return {capacities.begin(), capacities.end()};
    }

    std::vector<int> budgets(m);
    std::vector<double> fraction(m);
    long long assigned = 0;
    for (std::size_t j = 0; j < m; ++j) {
        const double b = float_budgets[j];
        if (!std::isfinite(b) || b < 0.0) {
            fail(ErrorCode::InvalidConfig, "float budget " + std::to_string(j) + " is negative or non-finite");
        }
        const double whole = std::floor(b);
        fraction[j] = b - whole;
        budgets[j] = static_cast<int>(std::min<double>(whole, capacities[j]));
        assigned += budgets[j];
    }
    if (assigned > k) {
        fail(ErrorCode::InvalidConfig, "float budgets sum above k");
    }

    std::vector<int> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (fraction[a] != fraction[b]) return fraction[a] > fraction[b];
        if (float_budgets[a] != float_budgets[b]) return float_budgets[a] > float_budgets[b];
        return a < b;
    });

    // One token per eligible zone per pass; later passes only happen when
    // capping freed more residual than there are zones below capacity.
    long long residual = k - assigned;
    while (residual > 0) {
        for (int j : order) {
            if (residual == 0) break;
            if (budgets[j] < capacities[j]) {
                ++budgets[j];
                --residual;
            }
        }
    }
    return budgets;
}

BudgetAllocation allocate(std::span<const double> zone_rel, std::span<const int> capacities, int k) {
    if (zone_rel.size() != capacities.size()) {
        fail(ErrorCode::ShapeMismatch, "zone relevance and capacities differ in length");
    }
    for (double r : zone_rel) {
        if (!std::isfinite(r)) fail(ErrorCode::NonFiniteValue, "zone relevance must be finite");
    }
    BudgetAllocation out;
    out.k = k;
    out.probs = softmax(zone_rel);
    out.float_budgets.resize(out.probs.size());
    for (std::size_t j = 0; j < out.probs.size(); ++j) out.float_budgets[j] = out.probs[j] * k;
    out.budgets = apportion(out.float_budgets, capacities, k);
    return out;
}

Selection select(const ScoreSet& scores, const ZoneMap& zmap, const BudgetAllocation& budget) {
    if (scores.size() != zmap.num_tokens()) {
        fail(ErrorCode::ShapeMismatch, "score length does not match the zone map");
    }
    if (budget.budgets.size() != zmap.zones().size()) {
        fail(ErrorCode::ShapeMismatch, "budget count does not match the zone count");
    }
    Selection sel;
    sel.num_tokens = zmap.num_tokens();
    sel.budgets = budget;
    sel.config = {"gridprune", budget.k, zmap.block_size(), scores.alpha};
    sel.per_zone.reserve(zmap.zones().size());
    for (const auto& zone : zmap.zones()) {
        const int want = budget.budgets[zone.id];
        if (want < 0 || want > zone.capacity()) {
            fail(ErrorCode::BudgetExceedsCapacity, "zone " + std::to_string(zone.id) + " budget out of range");
        }
        auto kept = top_by_score(zone.members, scores.fused, want);
        sel.kept_indices.insert(sel.kept_indices.end(), kept.begin(), kept.end());
        sel.per_zone.push_back(std::move(kept));
    }
    std::sort(sel.kept_indices.begin(), sel.kept_indices.end());
    return sel;
}

Selection global_topk(std::span<const double> scores, int k) {
    const int n = static_cast<int>(scores.size());
    if (k < 0 || k > n) {
        fail(ErrorCode::BudgetExceedsCapacity, "keep exceeds token count");
    }
    std::vector<int> all(n);
    std::iota(all.begin(), all.end(), 0);
    Selection sel;
    sel.num_tokens = n;
    sel.kept_indices = top_by_score(std::move(all), scores, k);
    sel.budgets.k = k;
    sel.config = {"global_topk", k, 0, std::nullopt};
    return sel;
}

Selection global_topk(const ScoreSet& scores, int k) {
    Selection sel = global_topk(std::span<const double>(scores.fused), k);
    sel.config.alpha = scores.alpha;
    return sel;
}

Selection tail_k_baseline(int num_tokens, int k) {
    if (k < 0 || k > num_tokens) {
        fail(ErrorCode::BudgetExceedsCapacity, "keep exceeds token count");
    }
    Selection sel;
    sel.num_tokens = num_tokens;
    sel.kept_indices.resize(k);
    std::iota(sel.kept_indices.begin(), sel.kept_indices.end(), num_tokens - k);
    sel.budgets.k = k;
    sel.config = {"tail_k", k, 0, std::nullopt};
    return sel;
}

}  // namespace gridprune
