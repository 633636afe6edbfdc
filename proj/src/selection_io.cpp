// Copyright 2026 The GridPrune Authors
// SPDX-License-Identifier: Apache-2.0

#include "gridprune/selection_io.hpp"

#include <fstream>
#include <sstream>

#include "gridprune/error.hpp"

namespace gridprune {

using json = nlohmann::json;

json selection_to_json(const Selection& sel) {
    json config = {{"method", sel.config.method}, {"k", sel.config.k}, {"block_size", sel.config.block_size}};
    config["alpha"] = sel.config.alpha ? json(*sel.config.alpha) : json(nullptr);
    return json{
        {"kept_indices", sel.kept_indices},
        {"budgets", sel.budgets.budgets},
        {"probs", sel.budgets.probs},
        {"float_budgets", sel.budgets.float_budgets},
        {"per_zone", sel.per_zone},
        {"num_tokens", sel.num_tokens},
        {"config", std::move(config)},
    };
}

Selection selection_from_json(const json& doc) {
    try {
        Selection sel;
        sel.kept_indices = doc.at("kept_indices").get<std::vector<int>>();
        sel.budgets.budgets = doc.at("budgets").get<std::vector<int>>();
        sel.budgets.probs = doc.at("probs").get<std::vector<double>>();
        sel.budgets.float_budgets = doc.value("float_budgets", std::vector<double>{});
        sel.per_zone = doc.at("per_zone").get<std::vector<std::vector<int>>>();
        sel.num_tokens = doc.at("num_tokens").get<int>();
        const auto& config = doc.at("config");
        sel.config.method = config.value("method", std::string("gridprune"));
        sel.config.k = config.at("k").get<int>();
        sel.config.block_size = config.at("block_size").get<int>();
        if (config.contains("alpha") && !config.at("alpha").is_null()) {
            sel.config.alpha = config.at("alpha").get<double>();
        }
        sel.budgets.k = sel.config.k;
        for (std::size_t i = 0; i < sel.kept_indices.size(); ++i) {
            const int idx = sel.kept_indices[i];
            if (idx < 0 || idx >= sel.num_tokens || (i > 0 && idx <= sel.kept_indices[i - 1])) {
                fail(ErrorCode::ShapeMismatch, "kept_indices must be strictly increasing within [0, num_tokens)");
            }
        }
        return sel;
    } catch (const json::exception& e) {
        fail(ErrorCode::ManifestInvalid, std::string("malformed selection: ") + e.what());
    }
}

std::string dump_json(const json& doc) { return doc.dump(2) + "\n"; }

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) {
        fail(ErrorCode::IoFailure, "cannot write " + path.string());
    }
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorCode::IoFailure, "cannot open " + path.string());
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_selection(const std::filesystem::path& path, const Selection& sel) {
    write_text_file(path, dump_json(selection_to_json(sel)));
}

Selection read_selection(const std::filesystem::path& path) {
    const auto text = read_text_file(path);
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        fail(ErrorCode::ManifestInvalid, path.string() + ": " + e.what());
    }
    return selection_from_json(doc);
}

}  // namespace gridprune
