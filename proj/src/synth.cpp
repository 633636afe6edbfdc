// Copyright 2026 The GridPrune Authors
// SPDX-License-Identifier: Apache-2.0

#include "gridprune/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "gridprune/error.hpp"
#include "gridprune/selection_io.hpp"
#include "gridprune/worker_pool.hpp"
#include "json.hpp"

namespace gridprune {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

std::vector<double> noise_vector(Rng& rng, int dim, double scale) {
    std::vector<double> v(dim);
    for (auto& x : v) x = rng.normal() * scale;
    return v;
}

void normalize(std::vector<double>& v) {
    double sq = 0.0;
    for (double x : v) sq += x * x;
    const double norm = std::sqrt(sq);
    if (norm > 0.0) {
        for (auto& x : v) x /= norm;
    }
}

double pow4(double t) {
    const double t2 = t * t;
    return t2 * t2;
}

std::vector<Rect> default_rects(const SceneSpec& spec, Rng& rng) {
    switch (spec.pattern) {
    case ScenePattern::CenteredObject: {
        const int h = std::max(1, spec.grid_h / 3);
        const int w = std::max(1, spec.grid_w / 3);
        return {{(spec.grid_h - h) / 2, (spec.grid_w - w) / 2, h, w}};
    }
    case ScenePattern::MultiObject: {
        const int h = std::max(1, spec.grid_h / 6);
        const int w = std::max(1, spec.grid_w / 6);
        std::vector<Rect> rects;
        for (int i = 0; i < 3; ++i) {
            const int row = static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.grid_h - h + 1)));
            const int col = static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.grid_w - w + 1)));
            rects.push_back({row, col, h, w});
        }
        return rects;
    }
    case ScenePattern::SinkTail:
    case ScenePattern::UniformNoise:
        break;
    }
    return {};
}

}  // namespace

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

Rng::Rng(std::uint64_t seed) {
    for (auto& s : m_state) s = splitmix64(seed);
}

std::uint64_t Rng::next() {
    const std::uint64_t result = rotl(m_state[1] * 5, 7) * 9;
    const std::uint64_t t = m_state[1] << 17;
    m_state[2] ^= m_state[0];
    m_state[3] ^= m_state[1];
    m_state[1] ^= m_state[2];
    m_state[0] ^= m_state[3];
    m_state[2] ^= t;
    m_state[3] = rotl(m_state[3], 45);
    return result;
}

double Rng::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double Rng::normal() {
    double acc = 0.0;
    for (int i = 0; i < 12; ++i) acc += uniform();
    return acc - 6.0;
}

std::uint64_t Rng::below(std::uint64_t bound) {
    // Rejection sampling keeps the draw unbiased.
    const std::uint64_t limit = bound * (UINT64_MAX / bound);
    std::uint64_t x = next();
    while (x >= limit) x = next();
    return x % bound;
}

std::string_view to_string(ScenePattern pattern) {
    switch (pattern) {
    case ScenePattern::SinkTail: return "sink_tail";
    case ScenePattern::CenteredObject: return "centered_object";
    case ScenePattern::MultiObject: return "multi_object";
    case ScenePattern::UniformNoise: return "uniform_noise";
    }
    return "unknown";
}

ScenePattern parse_pattern(std::string_view name) {
    for (auto p : {ScenePattern::SinkTail, ScenePattern::CenteredObject, ScenePattern::MultiObject,
                   ScenePattern::UniformNoise}) {
        if (to_string(p) == name) return p;
    }
    fail(ErrorCode::InvalidConfig, "unknown pattern '" + std::string(name) + "'");
}

SyntheticScene generate(const SceneSpec& spec) {
    if (spec.grid_h <= 0 || spec.grid_w <= 0 || spec.embed_dim <= 0 || spec.num_heads <= 0) {
        fail(ErrorCode::InvalidConfig, "grid, embed_dim and num_heads must be positive");
    }
    if (!(spec.signal_strength > 0.0) || !std::isfinite(spec.signal_strength)) {
        fail(ErrorCode::InvalidConfig, "signal strength must be positive and finite");
    }
    for (const auto& r : spec.planted_zone_rects) {
        if (r.row < 0 || r.col < 0 || r.height <= 0 || r.width <= 0 || r.row + r.height > spec.grid_h ||
            r.col + r.width > spec.grid_w) {
            fail(ErrorCode::InvalidRect, "rect (" + std::to_string(r.row) + "," + std::to_string(r.col) + "," +
                                             std::to_string(r.height) + "," + std::to_string(r.width) +
                                             ") leaves the grid");
        }
    }

    Rng rng(spec.seed);
    const int n = spec.grid_h * spec.grid_w;
    const int d = spec.embed_dim;

    auto rects = spec.planted_zone_rects.empty() ? default_rects(spec, rng) : spec.planted_zone_rects;

    std::vector<char> is_planted(n, 0);
    for (const auto& r : rects) {
        for (int row = r.row; row < r.row + r.height; ++row) {
            for (int col = r.col; col < r.col + r.width; ++col) is_planted[row * spec.grid_w + col] = 1;
        }
    }
    std::vector<int> planted;
    for (int i = 0; i < n; ++i) {
        if (is_planted[i]) planted.push_back(i);
    }

    auto text = noise_vector(rng, d, 1.0);
    normalize(text);

    // Noise scaled by 1/sqrt(d) has unit expected norm.
    const double unit_scale = 1.0 / std::sqrt(static_cast<double>(d));
    std::vector<float> embeddings(static_cast<std::size_t>(n) * d);
    for (int i = 0; i < n; ++i) {
        std::vector<double> row;
        if (is_planted[i]) {
            row = noise_vector(rng, d, unit_scale / spec.signal_strength);
            for (int c = 0; c < d; ++c) row[c] += text[c];
            normalize(row);
        } else {
            row = noise_vector(rng, d, 1.0);
        }
        for (int c = 0; c < d; ++c) embeddings[static_cast<std::size_t>(i) * d + c] = static_cast<float>(row[c]);
    }

    const int tail_start = (9 * n + 9) / 10;
    std::vector<double> base(n);
    double jitter = 0.05;
    for (int i = 0; i < n; ++i) {
        const double pos = static_cast<double>(i) / n;
        switch (spec.pattern) {
        case ScenePattern::SinkTail:
            base[i] = pow4(1.0 + 3.0 * pos) * (i >= tail_start ? 4.0 : 1.0);
            break;
        case ScenePattern::CenteredObject:
            base[i] = pow4(1.0 + pos);
            jitter = 0.3;
            break;
        case ScenePattern::MultiObject:
            base[i] = (0.5 + rng.uniform()) * (is_planted[i] ? 2.0 : 1.0);
            break;
        case ScenePattern::UniformNoise:
            base[i] = 0.5 + rng.uniform();
            break;
        }
    }

    std::vector<float> attention(static_cast<std::size_t>(spec.num_heads) * n);
    for (int h = 0; h < spec.num_heads; ++h) {
        std::vector<double> row(n);
        double total = 0.0;
        for (int i = 0; i < n; ++i) {
            row[i] = base[i] * (1.0 + jitter * (2.0 * rng.uniform() - 1.0));
            total += row[i];
        }
        for (int i = 0; i < n; ++i) attention[static_cast<std::size_t>(h) * n + i] = static_cast<float>(row[i] / total);
    }

    std::vector<float> text_f(text.begin(), text.end());
    std::map<std::string, std::string> meta{
        {"generator", "gridprune-synth"},
        {"pattern", std::string(to_string(spec.pattern))},
        {"seed", std::to_string(spec.seed)},
    };
    return SyntheticScene{TokenField::create(spec.grid_h, spec.grid_w, d, std::move(embeddings),
                                             ClsAttention{spec.num_heads, std::move(attention)},
                                             std::move(text_f), std::move(meta)),
                          std::move(planted), std::move(rects)};
}

std::uint64_t scene_seed(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t state = seed ^ (index * 0xD1B54A32D192ED03ULL);
    return splitmix64(state);
}

void write_scene(const SyntheticScene& scene, const SceneSpec& spec, const fs::path& directory) {
    save_field(scene.field, directory);
    json rects = json::array();
    for (const auto& r : scene.rects) rects.push_back({r.row, r.col, r.height, r.width});
    const json doc{
        {"pattern", to_string(spec.pattern)},
        {"seed", spec.seed},
        {"signal_strength", spec.signal_strength},
        {"rects", std::move(rects)},
        {"planted", scene.planted},
    };
    write_text_file(directory / kPlantedFileName, dump_json(doc));
}

std::vector<int> read_planted(const fs::path& directory) {
    const auto path = directory / kPlantedFileName;
    if (!fs::exists(path)) return {};
    try {
        return json::parse(read_text_file(path)).at("planted").get<std::vector<int>>();
    } catch (const json::exception& e) {
        fail(ErrorCode::ManifestInvalid, path.string() + ": " + e.what());
    }
}

void write_corpus(const SceneSpec& base, int count, const fs::path& directory, int workers) {
    if (count < 0) {
        fail(ErrorCode::InvalidConfig, "count must be non-negative");
    }
    parallel_for(static_cast<std::size_t>(count), workers, [&](std::size_t i) {
        SceneSpec spec = base;
        spec.seed = scene_seed(base.seed, i);
        char name[32];
        std::snprintf(name, sizeof(name), "scene_%04zu", i);
        write_scene(generate(spec), spec, directory / name);
    });
}

}  // namespace gridprune
