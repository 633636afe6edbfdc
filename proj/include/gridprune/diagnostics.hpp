// Copyright 2026 The GridPrune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gridprune/pipeline.hpp"
#include "gridprune/zonal.hpp"
#include "json.hpp"

namespace gridprune {

struct FlopsModel {
    long long layers = 0;
    long long hidden = 0;
    long long ffn = 0;
};

/// Decoder cost attributable to `num_tokens` visual tokens, in TFLOPs:
/// layers * (2 N^2 d + 4 N d^2 + 3 N d m) / 1e12.
double flops(long long num_tokens, const FlopsModel& model);

/// Locale-independent fixed-point formatting.
std::string format_fixed(double value, int precision);

inline constexpr int kHistogramBins = 64;

/// Aggregate positional statistics of kept indices over many selections.
/// Counts are integers, so merging partial reports is exact in any order.
/// Spatial entropy is measured over zones when a zone map is supplied and
/// over the raster histogram bins otherwise.
class BiasReport {
public:
    explicit BiasReport(int num_tokens, const ZoneMap* zones = nullptr);

    void add(const Selection& sel);
    void merge(const BiasReport& other);

    int num_tokens() const noexcept { return m_num_tokens; }
    long long sample_count() const noexcept { return m_samples; }
    long long total_kept() const noexcept { return m_total_kept; }
    long long tail_count() const noexcept { return m_tail_count; }
    long long final_third_count() const noexcept { return m_final_third_count; }
    const std::array<long long, kHistogramBins>& histogram() const noexcept { return m_histogram; }
    const std::vector<long long>& region_counts() const noexcept { return m_region_counts; }

    /// First raster index of the final decile, ceil(0.9 N).
    int tail_start() const noexcept;
    /// First raster index of the final third, ceil(2N / 3).
    int final_third_start() const noexcept;

    double tail_mass() const;
    double final_third_mass() const;
    /// Shannon entropy over regions divided by log(#regions); 0 with one region.
    double spatial_entropy() const;

    nlohmann::json to_json() const;
    /// "bin\tstart\tend\tcount" rows, gnuplot-ready.
    std::string histogram_tsv() const;

    bool operator==(const BiasReport&) const = default;

private:
    int m_num_tokens;
    std::vector<int> m_region_of;
    std::vector<long long> m_region_counts;
    std::array<long long, kHistogramBins> m_histogram{};
    long long m_samples = 0;
    long long m_total_kept = 0;
    long long m_tail_count = 0;
    long long m_final_third_count = 0;
};

BiasReport bias_report(std::span<const Selection> selections, int num_tokens, const ZoneMap* zones = nullptr);

/// |kept ∩ planted| / |planted|; 0 for an empty mask.
double planted_recall(const Selection& sel, std::span<const int> planted);

struct CorpusItem {
    std::string name;
    TokenField field;
    std::vector<int> planted;
};

using SelectionMethod = std::function<Selection(const TokenField&, const PruneConfig&)>;

struct NamedMethod {
    std::string name;
    SelectionMethod select;
};

/// gridprune, global_topk (fused), saliency_topk, relevance_topk, tail_k.
NamedMethod builtin_method(std::string_view name);
std::vector<std::string> builtin_method_names();

struct ComparisonRow {
    std::string method;
    BiasReport report;
    /// Per-item recall; empty when no item carries a planted mask.
    std::vector<double> recalls;

    std::optional<double> mean_recall() const;
};

struct ComparisonTable {
    std::vector<ComparisonRow> rows;
    bool has_recall = false;

    std::string to_markdown() const;
    nlohmann::json to_json() const;
};

ComparisonTable compare(std::span<const NamedMethod> methods, std::span<const CorpusItem> corpus,
                        const PruneConfig& cfg, int workers = 1);

}  // namespace gridprune
