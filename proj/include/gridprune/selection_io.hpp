// Copyright 2026 The GridPrune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>

#include "gridprune/zonal.hpp"
#include "json.hpp"

namespace gridprune {

// {kept_indices, budgets, probs, float_budgets, per_zone, num_tokens,
//  config: {method, k, block_size, alpha}}
nlohmann::json selection_to_json(const Selection& sel);
Selection selection_from_json(const nlohmann::json& doc);

std::string dump_json(const nlohmann::json& doc);

void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

void write_selection(const std::filesystem::path& path, const Selection& sel);
Selection read_selection(const std::filesystem::path& path);

}  // namespace gridprune
