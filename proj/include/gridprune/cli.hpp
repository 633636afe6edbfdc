// Copyright 2026 The GridPrune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace gridprune::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitIo = 2;

/// Runs one subcommand. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Files matching a glob whose wildcards are confined to the final path
/// component, sorted. A plain directory expands to its *.json files.
std::vector<std::filesystem::path> expand_glob(const std::string& pattern);

}  // namespace gridprune::cli
