// Copyright 2026 The GridPrune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace gridprune {

/// Raw [CLS]-to-patch attention, heads x N, row-major.
struct ClsAttention {
    int num_heads = 0;
    std::vector<float> weights;
};

/// Saliency already reduced to one value per token (e.g. mean last-layer
/// self-attention from a Qwen-style vision tower).
struct PrecomputedSaliency {
    std::vector<float> values;
};

using SaliencySource = std::variant<ClsAttention, PrecomputedSaliency>;

/// Post-encoder tensors for one image. Embeddings are the projected
/// multimodal embeddings, one row of embed_dim floats per patch token in
/// raster order. Immutable once constructed; every instance satisfies the
/// shape and finiteness invariants.
class TokenField {
public:
    static TokenField create(int grid_h, int grid_w, int embed_dim, std::vector<float> embeddings,
                             SaliencySource saliency, std::vector<float> text_embedding,
                             std::map<std::string, std::string> meta = {});

    int grid_h() const noexcept { return m_grid_h; }
    int grid_w() const noexcept { return m_grid_w; }
    int embed_dim() const noexcept { return m_embed_dim; }
    int num_tokens() const noexcept { return m_grid_h * m_grid_w; }
    /// 0 when saliency is precomputed.
    int num_heads() const noexcept;

    std::span<const float> embeddings() const noexcept { return m_embeddings; }
    std::span<const float> embedding(int token) const;
    const SaliencySource& saliency_source() const noexcept { return m_saliency; }
    std::span<const float> text_embedding() const noexcept { return m_text_embedding; }
    const std::map<std::string, std::string>& meta() const noexcept { return m_meta; }

    /// Copy of this field with the text embedding replaced (shared prompt
    /// across high-resolution sub-images).
    TokenField with_text_embedding(std::vector<float> text_embedding) const;

private:
    TokenField() = default;

    int m_grid_h = 0;
    int m_grid_w = 0;
    int m_embed_dim = 0;
    std::vector<float> m_embeddings;
    SaliencySource m_saliency;
    std::vector<float> m_text_embedding;
    std::map<std::string, std::string> m_meta;
};

/// Bitwise equality of all tensors plus equal shapes and meta.
bool bitwise_equal(const TokenField& a, const TokenField& b);

inline constexpr const char* kManifestFileName = "manifest.json";
inline constexpr const char* kFormatVersion = "1";
inline constexpr const char* kDtypeTag = "f32le";

struct ManifestFiles {
    std::string embeddings;
    std::string saliency;
    std::string text_embedding;
};

struct Manifest {
    std::string version = kFormatVersion;
    std::string dtype = kDtypeTag;
    int grid_h = 0;
    int grid_w = 0;
    int embed_dim = 0;
    int num_heads = 0;
    ManifestFiles files;
    std::map<std::string, std::string> meta;

    std::size_t embeddings_count() const;
    std::size_t saliency_count() const;
    std::size_t text_count() const;
};

/// Strict parse: unknown keys, wrong types, and unsupported versions throw.
Manifest parse_manifest(const std::string& text, const std::string& origin = kManifestFileName);
std::string manifest_to_json(const Manifest& manifest);

TokenField load_field(const std::filesystem::path& directory);
void save_field(const TokenField& field, const std::filesystem::path& directory);

/// Little-endian f32 blob helpers shared with other on-disk formats.
std::vector<float> read_f32_blob(const std::filesystem::path& path, std::size_t expected_count);
void write_f32_blob(const std::filesystem::path& path, std::span<const float> values);

}  // namespace gridprune
