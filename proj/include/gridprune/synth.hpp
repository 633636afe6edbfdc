// Copyright 2026 The GridPrune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "gridprune/token_field.hpp"

namespace gridprune {

/// xoshiro256** seeded through splitmix64. Only integer arithmetic and
/// IEEE-exact float operations are used downstream, so streams are
/// identical on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next();
    /// Uniform in [0, 1) with 53 random bits.
    double uniform();
    /// Approximately standard normal: sum of twelve uniforms minus six.
    double normal();
    /// Uniform integer in [0, bound).
    std::uint64_t below(std::uint64_t bound);

private:
    std::uint64_t m_state[4];
};

std::uint64_t splitmix64(std::uint64_t& state);

enum class ScenePattern { SinkTail, CenteredObject, MultiObject, UniformNoise };

std::string_view to_string(ScenePattern pattern);
ScenePattern parse_pattern(std::string_view name);

struct Rect {
    int row = 0;
    int col = 0;
    int height = 0;
    int width = 0;
};

struct SceneSpec {
    int grid_h = 24;
    int grid_w = 24;
    int embed_dim = 64;
    int num_heads = 4;
    ScenePattern pattern = ScenePattern::UniformNoise;
    /// Empty means the pattern default (centered square, or three random
    /// squares for multi_object, none otherwise).
    std::vector<Rect> planted_zone_rects;
    double signal_strength = 4.0;
    std::uint64_t seed = 0;
};

struct SyntheticScene {
    TokenField field;
    /// Sorted raster indices covered by the planted rectangles.
    std::vector<int> planted;
    std::vector<Rect> rects;
};

/// Background tokens are isotropic noise; planted tokens are
/// normalize(text + noise / strength). Saliency is CLS attention whose
/// per-token base level depends on the pattern; sink_tail ramps towards
/// the end of raster order with the final decile strictly on top.
SyntheticScene generate(const SceneSpec& spec);

/// Seed of scene `index` in a corpus rooted at `seed`.
std::uint64_t scene_seed(std::uint64_t seed, std::uint64_t index);

inline constexpr const char* kPlantedFileName = "planted.json";

void write_scene(const SyntheticScene& scene, const SceneSpec& spec, const std::filesystem::path& directory);
/// Empty when the directory has no planted.json.
std::vector<int> read_planted(const std::filesystem::path& directory);

/// Writes scene_0000 ... under `directory`, generated on up to `workers` threads.
void write_corpus(const SceneSpec& base, int count, const std::filesystem::path& directory, int workers = 1);

}  // namespace gridprune
