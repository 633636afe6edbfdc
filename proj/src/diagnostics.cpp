// Copyright 2026 The GridPrune Authors
// SPDX-License-Identifier: Apache-2.0

#include "gridprune/diagnostics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <unordered_set>

#include "gridprune/error.hpp"
#include "gridprune/scoring.hpp"
#include "gridprune/worker_pool.hpp"

namespace gridprune {

using json = nlohmann::json;

double flops(long long num_tokens, const FlopsModel& model) {
    if (num_tokens < 0) {
        fail(ErrorCode::InvalidConfig, "token count must be non-negative");
    }
    if (model.layers <= 0 || model.hidden <= 0 || model.ffn <= 0) {
        fail(ErrorCode::InvalidConfig, "layers, hidden and ffn must be positive");
    }
    const double n = static_cast<double>(num_tokens);
    const double d = static_cast<double>(model.hidden);
    const double m = static_cast<double>(model.ffn);
    const double per_layer = 2.0 * n * n * d + 4.0 * n * d * d + 3.0 * n * d * m;
    return static_cast<double>(model.layers) * per_layer / 1e12;
}

std::string format_fixed(double value, int precision) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::fixed, precision);
    return std::string(buf, res.ptr);
}

BiasReport::BiasReport(int num_tokens, const ZoneMap* zones) : m_num_tokens(num_tokens) {
    if (num_tokens <= 0) {
        fail(ErrorCode::InvalidConfig, "bias report needs a positive token count");
    }
    m_region_of.resize(num_tokens);
    if (zones) {
        if (zones->num_tokens() != num_tokens) {
            fail(ErrorCode::MixedN, "zone map covers " + std::to_string(zones->num_tokens()) +
                                        " tokens, report expects " + std::to_string(num_tokens));
        }
        m_region_of = zones->token_to_zone();
        m_region_counts.assign(zones->num_zones(), 0);
    } else {
        for (int i = 0; i < num_tokens; ++i) {
            m_region_of[i] = static_cast<int>(static_cast<long long>(i) * kHistogramBins / num_tokens);
        }
        m_region_counts.assign(kHistogramBins, 0);
    }
}

int BiasReport::tail_start() const noexcept { return (9 * m_num_tokens + 9) / 10; }

int BiasReport::final_third_start() const noexcept { return (2 * m_num_tokens + 2) / 3; }

void BiasReport::add(const Selection& sel) {
    if (sel.num_tokens != m_num_tokens) {
        fail(ErrorCode::MixedN, "selection over " + std::to_string(sel.num_tokens) + " tokens, report expects " +
                                    std::to_string(m_num_tokens));
    }
    const int tail = tail_start();
    const int third = final_third_start();
    for (int t : sel.kept_indices) {
        if (t < 0 || t >= m_num_tokens) {
            fail(ErrorCode::ShapeMismatch, "kept index " + std::to_string(t) + " out of range");
        }
        ++m_histogram[static_cast<std::size_t>(static_cast<long long>(t) * kHistogramBins / m_num_tokens)];
        ++m_region_counts[m_region_of[t]];
        if (t >= tail) ++m_tail_count;
        if (t >= third) ++m_final_third_count;
    }
    m_total_kept += static_cast<long long>(sel.kept_indices.size());
    ++m_samples;
}

void BiasReport::merge(const BiasReport& other) {
    if (other.m_num_tokens != m_num_tokens) {
        fail(ErrorCode::MixedN, "cannot merge reports over different token counts");
    }
    if (other.m_region_of != m_region_of) {
        fail(ErrorCode::InvalidConfig, "cannot merge reports with different region layouts");
    }
    for (int b = 0; b < kHistogramBins; ++b) m_histogram[b] += other.m_histogram[b];
    for (std::size_t r = 0; r < m_region_counts.size(); ++r) m_region_counts[r] += other.m_region_counts[r];
    m_samples += other.m_samples;
    m_total_kept += other.m_total_kept;
    m_tail_count += other.m_tail_count;
    m_final_third_count += other.m_final_third_count;
}

double BiasReport::tail_mass() const {
    return m_total_kept == 0 ? 0.0 : static_cast<double>(m_tail_count) / static_cast<double>(m_total_kept);
}

double BiasReport::final_third_mass() const {
    return m_total_kept == 0 ? 0.0
                             : static_cast<double>(m_final_third_count) / static_cast<double>(m_total_kept);
}

double BiasReport::spatial_entropy() const {
    const std::unordered_set<int> regions(m_region_of.begin(), m_region_of.end());
    if (m_total_kept == 0 || regions.size() <= 1) return 0.0;
    double h = 0.0;
    for (long long c : m_region_counts) {
        if (c == 0) continue;
        const double p = static_cast<double>(c) / static_cast<double>(m_total_kept);
        h -= p * std::log(p);
    }
    return std::clamp(h / std::log(static_cast<double>(regions.size())), 0.0, 1.0);
}

json BiasReport::to_json() const {
    return json{
        {"num_tokens", m_num_tokens},
        {"sample_count", m_samples},
        {"total_kept", m_total_kept},
        {"histogram", m_histogram},
        {"tail_start", tail_start()},
        {"tail_mass", tail_mass()},
        {"final_third_start", final_third_start()},
        {"final_third_mass", final_third_mass()},
        {"spatial_entropy", spatial_entropy()},
    };
}

std::string BiasReport::histogram_tsv() const {
    std::string out = "# bin\tstart\tend\tcount\n";
    for (int b = 0; b < kHistogramBins; ++b) {
        // Bin b holds raster indices i with floor(i * bins / N) == b.
        const long long start = (static_cast<long long>(b) * m_num_tokens + kHistogramBins - 1) / kHistogramBins;
        const long long end = (static_cast<long long>(b + 1) * m_num_tokens + kHistogramBins - 1) / kHistogramBins;
        out += std::to_string(b) + "\t" + std::to_string(start) + "\t" + std::to_string(end) + "\t" +
               std::to_string(m_histogram[b]) + "\n";
    }
    return out;
}

BiasReport bias_report(std::span<const Selection> selections, int num_tokens, const ZoneMap* zones) {
    BiasReport report(num_tokens, zones);
    for (const auto& sel : selections) report.add(sel);
    return report;
}

double planted_recall(const Selection& sel, std::span<const int> planted) {
    if (planted.empty()) return 0.0;
    std::vector<int> mask(planted.begin(), planted.end());
    std::sort(mask.begin(), mask.end());
    std::size_t hits = 0;
    for (int t : sel.kept_indices) {
        if (std::binary_search(mask.begin(), mask.end(), t)) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(mask.size());
}

NamedMethod builtin_method(std::string_view name) {
    if (name == "gridprune") {
        return {"gridprune", [](const TokenField& f, const PruneConfig& cfg) { return grid_prune(f, cfg); }};
    }
    if (name == "global_topk") {
        return {"global_topk", [](const TokenField& f, const PruneConfig& cfg) {
                    return global_topk(score_field(f, cfg.alpha), cfg.k);
                }};
    }
    if (name == "saliency_topk") {
        return {"saliency_topk", [](const TokenField& f, const PruneConfig& cfg) {
                    auto sel = global_topk(std::span<const double>(saliency_scores(f)), cfg.k);
                    sel.config.method = "saliency_topk";
                    sel.config.alpha = 1.0;
                    return sel;
                }};
    }
    if (name == "relevance_topk") {
        return {"relevance_topk", [](const TokenField& f, const PruneConfig& cfg) {
                    auto sel = global_topk(std::span<const double>(relevance_scores(f)), cfg.k);
                    sel.config.method = "relevance_topk";
                    sel.config.alpha = 0.0;
                    return sel;
                }};
    }
    if (name == "tail_k") {
        return {"tail_k", [](const TokenField& f, const PruneConfig& cfg) {
                    return tail_k_baseline(f.num_tokens(), cfg.k);
                }};
    }
    fail(ErrorCode::InvalidConfig, "unknown method '" + std::string(name) + "'");
}

std::vector<std::string> builtin_method_names() {
    return {"gridprune", "global_topk", "saliency_topk", "relevance_topk", "tail_k"};
}

std::optional<double> ComparisonRow::mean_recall() const {
    if (recalls.empty()) return std::nullopt;
    double sum = 0.0;
    for (double r : recalls) sum += r;
    return sum / static_cast<double>(recalls.size());
}

std::string ComparisonTable::to_markdown() const {
    std::string out = "| method | samples | kept | tail_mass | final_third_mass | spatial_entropy |";
    std::string rule = "|---|---:|---:|---:|---:|---:|";
    if (has_recall) {
        out += " recall |";
        rule += "---:|";
    }
    out += "\n" + rule + "\n";
    for (const auto& row : rows) {
        out += "| " + row.method + " | " + std::to_string(row.report.sample_count()) + " | " +
               std::to_string(row.report.total_kept()) + " | " + format_fixed(row.report.tail_mass(), 4) + " | " +
               format_fixed(row.report.final_third_mass(), 4) + " | " +
               format_fixed(row.report.spatial_entropy(), 4) + " |";
        if (has_recall) {
            const auto r = row.mean_recall();
            out += " " + (r ? format_fixed(*r, 4) : std::string("-")) + " |";
        }
        out += "\n";
    }
    return out;
}

json ComparisonTable::to_json() const {
    json rows_json = json::array();
    for (const auto& row : rows) {
        json entry{{"method", row.method}, {"report", row.report.to_json()}};
        if (has_recall) {
            entry["recalls"] = row.recalls;
            entry["mean_recall"] = row.mean_recall() ? json(*row.mean_recall()) : json(nullptr);
        }
        rows_json.push_back(std::move(entry));
    }
    return json{{"rows", std::move(rows_json)}};
}

ComparisonTable compare(std::span<const NamedMethod> methods, std::span<const CorpusItem> corpus,
                        const PruneConfig& cfg, int workers) {
    if (corpus.empty()) {
        fail(ErrorCode::InvalidConfig, "comparison corpus is empty");
    }
    const auto& first = corpus.front().field;
    for (const auto& item : corpus) {
        if (item.field.grid_h() != first.grid_h() || item.field.grid_w() != first.grid_w()) {
            fail(ErrorCode::MixedN, "corpus item '" + item.name + "' has a different grid shape");
        }
    }
    const ZoneMap zmap = partition(first.grid_h(), first.grid_w(), cfg.block_size);

    ComparisonTable table;
    table.has_recall = std::any_of(corpus.begin(), corpus.end(), [](const CorpusItem& c) { return !c.planted.empty(); });
    for (const auto& method : methods) {
        const auto selections = parallel_map<Selection>(
            corpus.size(), workers, [&](std::size_t i) { return method.select(corpus[i].field, cfg); });
        ComparisonRow row{method.name, bias_report(selections, first.num_tokens(), &zmap), {}};
        if (table.has_recall) {
            for (std::size_t i = 0; i < corpus.size(); ++i) {
                if (!corpus[i].planted.empty()) row.recalls.push_back(planted_recall(selections[i], corpus[i].planted));
            }
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

}  // namespace gridprune
