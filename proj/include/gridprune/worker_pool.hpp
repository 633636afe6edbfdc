// Copyright 2026 The GridPrune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

namespace gridprune {

/// Worker cap from GRIDPRUNE_THREADS, else hardware concurrency (min 1).
int default_worker_count();

/// Runs task(i) for i in [0, count) on at most `workers` threads. If any
/// task throws, the exception from the lowest failing index is rethrown
/// after all workers have joined.
void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& task);

/// Ordered map: result[i] = fn(i), independent of scheduling.
template <typename T, typename Fn>
std::vector<T> parallel_map(std::size_t count, int workers, Fn&& fn) {
    std::vector<std::optional<T>> slots(count);
    parallel_for(count, workers, [&](std::size_t i) { slots[i].emplace(fn(i)); });
    std::vector<T> out;
    out.reserve(count);
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

}  // namespace gridprune
