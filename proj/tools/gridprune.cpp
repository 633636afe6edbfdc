// Copyright 2026 The GridPrune Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>
#include <string>
#include <vector>

#include "gridprune/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return gridprune::cli::run(args, std::cout, std::cerr);
}
