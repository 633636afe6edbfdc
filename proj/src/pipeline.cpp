// Copyright 2026 The GridPrune Authors
// SPDX-License-Identifier: Apache-2.0

#include "gridprune/pipeline.hpp"

#include <set>

#include "gridprune/error.hpp"
#include "gridprune/scoring.hpp"
#include "gridprune/selection_io.hpp"
#include "gridprune/worker_pool.hpp"

namespace gridprune {

namespace fs = std::filesystem;
using json = nlohmann::json;

void PruneConfig::validate() const {
    if (k < 1) {
        fail(ErrorCode::InvalidConfig, "keep must be at least 1");
    }
    if (block_size < 1) {
        fail(ErrorCode::InvalidBlockSize, "block size must be at least 1");
    }
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        fail(ErrorCode::AlphaOutOfRange, "alpha must lie in [0, 1]");
    }
}

Selection grid_prune(const ScoreSet& scores, int grid_h, int grid_w, const PruneConfig& cfg) {
    cfg.validate();
    if (cfg.k > scores.size()) {
        fail(ErrorCode::BudgetExceedsCapacity, "keep exceeds token count");
    }
    const ZoneMap zmap = partition(grid_h, grid_w, cfg.block_size);
    const auto zone_rel = zone_relevance(scores.relevance, zmap);
    const auto budget = allocate(zone_rel, zmap.capacities(), cfg.k);
    return select(scores, zmap, budget);
}

Selection grid_prune(const TokenField& field, const PruneConfig& cfg, std::vector<int>* zero_norm_tokens) {
    cfg.validate();
    if (cfg.k > field.num_tokens()) {
        fail(ErrorCode::BudgetExceedsCapacity, "keep exceeds token count");
    }
    const ScoreSet scores = score_field(field, cfg.alpha, zero_norm_tokens);
    return grid_prune(scores, field.grid_h(), field.grid_w(), cfg);
}

std::vector<float> gather_embeddings(const TokenField& field, std::span<const int> kept) {
    std::vector<float> out;
    out.reserve(kept.size() * field.embed_dim());
    for (int t : kept) {
        if (t < 0 || t >= field.num_tokens()) {
            fail(ErrorCode::ShapeMismatch, "kept index " + std::to_string(t) + " out of range");
        }
        const auto row = field.embedding(t);
        out.insert(out.end(), row.begin(), row.end());
    }
    return out;
}

HighResResult prune_high_res(const HighResInput& input, const PruneConfig& cfg, int workers) {
    cfg.validate();
    if (input.sub_images.empty()) {
        fail(ErrorCode::InvalidConfig, "high-resolution input needs at least one sub-image");
    }
    const int dim = input.sub_images.front().embed_dim();
    for (std::size_t s = 0; s < input.sub_images.size(); ++s) {
        const auto& sub = input.sub_images[s];
        if (sub.embed_dim() != dim || input.text_embedding.size() != static_cast<std::size_t>(dim)) {
            fail(ErrorCode::ShapeMismatch, "sub-image " + std::to_string(s) + " embed_dim disagrees");
        }
        if (cfg.k > sub.num_tokens()) {
            fail(ErrorCode::BudgetExceedsCapacity, "keep exceeds token count of sub-image " + std::to_string(s));
        }
    }

    HighResResult out;
    out.selections = parallel_map<Selection>(input.sub_images.size(), workers, [&](std::size_t s) {
        return grid_prune(input.sub_images[s].with_text_embedding(input.text_embedding), cfg);
    });
    int offset = 0;
    for (std::size_t s = 0; s < input.sub_images.size(); ++s) {
        out.offsets.push_back(offset);
        for (int t : out.selections[s].kept_indices) out.concatenated.push_back(offset + t);
        offset += input.sub_images[s].num_tokens();
    }
    return out;
}

std::vector<float> gather_high_res(const HighResInput& input, const HighResResult& result) {
    std::vector<float> out;
    for (std::size_t s = 0; s < result.selections.size(); ++s) {
        const auto rows = gather_embeddings(input.sub_images[s], result.selections[s].kept_indices);
        out.insert(out.end(), rows.begin(), rows.end());
    }
    return out;
}

HighResInput load_high_res(const fs::path& directory) {
    const auto order_path = directory / kOrderFileName;
    json doc;
    try {
        doc = json::parse(read_text_file(order_path));
    } catch (const json::parse_error& e) {
        fail(ErrorCode::ManifestInvalid, order_path.string() + ": " + e.what());
    }
    if (!doc.is_object()) {
        fail(ErrorCode::ManifestInvalid, order_path.string() + ": top level must be an object");
    }
    static const std::set<std::string> allowed{"version", "sub_images", "text_embedding"};
    for (const auto& [key, _] : doc.items()) {
        if (!allowed.contains(key)) {
            fail(ErrorCode::ManifestInvalid, order_path.string() + ": unknown field '" + key + "'");
        }
    }
    if (!doc.contains("version") || doc.at("version") != kFormatVersion) {
        fail(ErrorCode::VersionUnsupported, order_path.string() + ": missing or unsupported version");
    }
    if (!doc.contains("sub_images") || !doc.at("sub_images").is_array() || doc.at("sub_images").empty()) {
        fail(ErrorCode::ManifestInvalid, order_path.string() + ": 'sub_images' must be a non-empty array");
    }

    HighResInput input;
    for (const auto& entry : doc.at("sub_images")) {
        if (!entry.is_string()) {
            fail(ErrorCode::ManifestInvalid, order_path.string() + ": sub_images entries must be strings");
        }
        input.names.push_back(entry.get<std::string>());
        input.sub_images.push_back(load_field(directory / input.names.back()));
    }
    const int dim = input.sub_images.front().embed_dim();
    if (doc.contains("text_embedding")) {
        if (!doc.at("text_embedding").is_string()) {
            fail(ErrorCode::ManifestInvalid, order_path.string() + ": 'text_embedding' must be a string");
        }
        input.text_embedding =
            read_f32_blob(directory / doc.at("text_embedding").get<std::string>(), static_cast<std::size_t>(dim));
    } else {
        const auto text = input.sub_images.front().text_embedding();
        input.text_embedding.assign(text.begin(), text.end());
    }
    return input;
}

void save_high_res(const HighResInput& input, const fs::path& directory) {
    json order{{"version", kFormatVersion}, {"sub_images", json::array()}};
    for (std::size_t s = 0; s < input.sub_images.size(); ++s) {
        const std::string name = s < input.names.size() ? input.names[s] : "sub_" + std::to_string(s);
        save_field(input.sub_images[s], directory / name);
        order["sub_images"].push_back(name);
    }
    // Without a shared text embedding the loader falls back to the first sub-image's.
    if (!input.text_embedding.empty()) {
        order["text_embedding"] = "text_embedding.f32";
        write_f32_blob(directory / "text_embedding.f32", input.text_embedding);
    }
    write_text_file(directory / kOrderFileName, dump_json(order));
}

json high_res_to_json(const HighResInput& input, const HighResResult& result) {
    json subs = json::array();
    for (std::size_t s = 0; s < result.selections.size(); ++s) {
        json entry = selection_to_json(result.selections[s]);
        entry["sub_image"] = s;
        entry["name"] = s < input.names.size() ? input.names[s] : std::string();
        entry["offset"] = result.offsets[s];
        subs.push_back(std::move(entry));
    }
    return json{{"sub_images", std::move(subs)}, {"concatenated", result.concatenated}};
}

}  // namespace gridprune
