// Copyright 2026 The GridPrune Authors
// SPDX-License-Identifier: Apache-2.0

#include "gridprune/token_field.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "gridprune/error.hpp"
#include "json.hpp"

namespace gridprune {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

void check_finite(std::span<const float> values, const std::string& name) {
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i])) {
            fail(ErrorCode::NonFiniteValue,
                 name + " holds a non-finite value at flat index " + std::to_string(i));
        }
    }
}

void check_count(std::size_t actual, std::size_t expected, const std::string& name) {
    if (actual != expected) {
        fail(ErrorCode::ShapeMismatch, name + " has " + std::to_string(actual) +
                                           " elements, expected " + std::to_string(expected));
    }
}

std::uint32_t byteswap32(std::uint32_t v) {
    return ((v & 0xFFu) << 24) | ((v & 0xFF00u) << 8) | ((v >> 8) & 0xFF00u) | (v >> 24);
}

int require_int(const json& doc, const char* key, int min_value, const std::string& origin) {
    if (!doc.contains(key)) {
        fail(ErrorCode::ManifestInvalid, origin + ": missing field '" + key + "'");
    }
    const auto& v = doc.at(key);
    if (!v.is_number_integer()) {
        fail(ErrorCode::ManifestInvalid, origin + ": field '" + key + "' must be an integer");
    }
    const auto value = v.get<std::int64_t>();
    if (value < min_value || value > (1 << 24)) {
        fail(ErrorCode::ShapeMismatch,
             origin + ": field '" + key + "' out of range: " + std::to_string(value));
    }
    return static_cast<int>(value);
}

std::string require_string(const json& doc, const char* key, const std::string& origin) {
    if (!doc.contains(key)) {
        fail(ErrorCode::ManifestInvalid, origin + ": missing field '" + key + "'");
    }
    const auto& v = doc.at(key);
    if (!v.is_string()) {
        fail(ErrorCode::ManifestInvalid, origin + ": field '" + key + "' must be a string");
    }
    return v.get<std::string>();
}

void reject_unknown(const json& doc, const std::set<std::string>& allowed, const std::string& where) {
    for (const auto& [key, _] : doc.items()) {
        if (!allowed.contains(key)) {
            fail(ErrorCode::ManifestInvalid, where + ": unknown field '" + key + "'");
        }
    }
}

}  // namespace

TokenField TokenField::create(int grid_h, int grid_w, int embed_dim, std::vector<float> embeddings,
                              SaliencySource saliency, std::vector<float> text_embedding,
                              std::map<std::string, std::string> meta) {
    if (grid_h <= 0 || grid_w <= 0 || embed_dim <= 0) {
        fail(ErrorCode::ShapeMismatch, "grid_h, grid_w and embed_dim must be positive");
    }
    const auto n = static_cast<std::size_t>(grid_h) * static_cast<std::size_t>(grid_w);
    check_count(embeddings.size(), n * static_cast<std::size_t>(embed_dim), "embeddings");
    check_count(text_embedding.size(), static_cast<std::size_t>(embed_dim), "text_embedding");
    if (auto* cls = std::get_if<ClsAttention>(&saliency)) {
        if (cls->num_heads < 1) {
            fail(ErrorCode::ShapeMismatch, "cls attention needs at least one head");
        }
        check_count(cls->weights.size(), n * static_cast<std::size_t>(cls->num_heads), "saliency");
        check_finite(cls->weights, "saliency");
    } else {
        const auto& pre = std::get<PrecomputedSaliency>(saliency);
        check_count(pre.values.size(), n, "saliency");
        check_finite(pre.values, "saliency");
    }
    check_finite(embeddings, "embeddings");
    check_finite(text_embedding, "text_embedding");

    TokenField field;
    field.m_grid_h = grid_h;
    field.m_grid_w = grid_w;
    field.m_embed_dim = embed_dim;
    field.m_embeddings = std::move(embeddings);
    field.m_saliency = std::move(saliency);
    field.m_text_embedding = std::move(text_embedding);
    field.m_meta = std::move(meta);
    return field;
}

int TokenField::num_heads() const noexcept {
    if (const auto* cls = std::get_if<ClsAttention>(&m_saliency)) {
        return cls->num_heads;
    }
    return 0;
}

std::span<const float> TokenField::embedding(int token) const {
    return std::span<const float>(m_embeddings)
        .subspan(static_cast<std::size_t>(token) * m_embed_dim, m_embed_dim);
}

TokenField TokenField::with_text_embedding(std::vector<float> text_embedding) const {
    check_count(text_embedding.size(), static_cast<std::size_t>(m_embed_dim), "text_embedding");
    check_finite(text_embedding, "text_embedding");
    TokenField copy = *this;
    copy.m_text_embedding = std::move(text_embedding);
    return copy;
}

namespace {

bool same_bits(std::span<const float> a, std::span<const float> b) {
    return a.size() == b.size() &&
           (a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0);
}

}  // namespace

bool bitwise_equal(const TokenField& a, const TokenField& b) {
    if (a.grid_h() != b.grid_h() || a.grid_w() != b.grid_w() || a.embed_dim() != b.embed_dim() ||
        a.num_heads() != b.num_heads() || a.meta() != b.meta()) {
        return false;
    }
    auto saliency_bits = [](const TokenField& f) -> std::span<const float> {
        if (const auto* cls = std::get_if<ClsAttention>(&f.saliency_source())) return cls->weights;
        return std::get<PrecomputedSaliency>(f.saliency_source()).values;
    };
    return same_bits(a.embeddings(), b.embeddings()) && same_bits(saliency_bits(a), saliency_bits(b)) &&
           same_bits(a.text_embedding(), b.text_embedding());
}

std::size_t Manifest::embeddings_count() const {
    return static_cast<std::size_t>(grid_h) * grid_w * embed_dim;
}

std::size_t Manifest::saliency_count() const {
    const auto n = static_cast<std::size_t>(grid_h) * grid_w;
    return num_heads == 0 ? n : n * num_heads;
}

std::size_t Manifest::text_count() const { return static_cast<std::size_t>(embed_dim); }

Manifest parse_manifest(const std::string& text, const std::string& origin) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        fail(ErrorCode::ManifestInvalid, origin + ": " + e.what());
    }
    if (!doc.is_object()) {
        fail(ErrorCode::ManifestInvalid, origin + ": top level must be an object");
    }
    reject_unknown(doc, {"version", "grid_h", "grid_w", "embed_dim", "num_heads", "dtype", "files", "meta"},
                   origin);

    Manifest m;
    m.version = require_string(doc, "version", origin);
    if (m.version != kFormatVersion) {
        fail(ErrorCode::VersionUnsupported, origin + ": version '" + m.version + "' is not supported");
    }
    m.dtype = require_string(doc, "dtype", origin);
    if (m.dtype != kDtypeTag) {
        fail(ErrorCode::ManifestInvalid, origin + ": dtype '" + m.dtype + "' is not supported");
    }
    m.grid_h = require_int(doc, "grid_h", 1, origin);
    m.grid_w = require_int(doc, "grid_w", 1, origin);
    m.embed_dim = require_int(doc, "embed_dim", 1, origin);
    m.num_heads = require_int(doc, "num_heads", 0, origin);

    if (!doc.contains("files") || !doc.at("files").is_object()) {
        fail(ErrorCode::ManifestInvalid, origin + ": field 'files' must be an object");
    }
    const auto& files = doc.at("files");
    reject_unknown(files, {"embeddings", "saliency", "text_embedding"}, origin + " files");
    m.files.embeddings = require_string(files, "embeddings", origin + " files");
    m.files.saliency = require_string(files, "saliency", origin + " files");
    m.files.text_embedding = require_string(files, "text_embedding", origin + " files");
    for (const auto* name : {&m.files.embeddings, &m.files.saliency, &m.files.text_embedding}) {
        if (name->empty() || fs::path(*name).is_absolute()) {
            fail(ErrorCode::ManifestInvalid, origin + ": blob path '" + *name + "' must be relative");
        }
    }

    if (doc.contains("meta")) {
        const auto& meta = doc.at("meta");
        if (!meta.is_object()) {
            fail(ErrorCode::ManifestInvalid, origin + ": field 'meta' must be an object");
        }
        for (const auto& [key, value] : meta.items()) {
            if (!value.is_string()) {
                fail(ErrorCode::ManifestInvalid, origin + ": meta '" + key + "' must be a string");
            }
            m.meta.emplace(key, value.get<std::string>());
        }
    }
    return m;
}

std::string manifest_to_json(const Manifest& manifest) {
    json doc;
    doc["version"] = manifest.version;
    doc["dtype"] = manifest.dtype;
    doc["grid_h"] = manifest.grid_h;
    doc["grid_w"] = manifest.grid_w;
    doc["embed_dim"] = manifest.embed_dim;
    doc["num_heads"] = manifest.num_heads;
    doc["files"] = {{"embeddings", manifest.files.embeddings},
                    {"saliency", manifest.files.saliency},
                    {"text_embedding", manifest.files.text_embedding}};
    if (!manifest.meta.empty()) {
        doc["meta"] = manifest.meta;
    }
    return doc.dump(2) + "\n";
}

std::vector<float> read_f32_blob(const fs::path& path, std::size_t expected_count) {
    std::error_code ec;
    if (!fs::is_regular_file(path, ec)) {
        fail(ErrorCode::MissingBlob, "blob not found: " + path.string());
    }
    const auto bytes = fs::file_size(path, ec);
    if (ec) {
        fail(ErrorCode::IoFailure, "cannot stat " + path.string() + ": " + ec.message());
    }
    if (bytes != expected_count * sizeof(float)) {
        fail(ErrorCode::ShapeMismatch, "blob " + path.string() + " has " + std::to_string(bytes) +
                                           " bytes, expected " +
                                           std::to_string(expected_count * sizeof(float)));
    }
    std::vector<float> values(expected_count);
    std::ifstream in(path, std::ios::binary);
    if (!in || !in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(bytes))) {
        fail(ErrorCode::IoFailure, "cannot read " + path.string());
    }
    if constexpr (std::endian::native == std::endian::big) {
        for (auto& v : values) {
            v = std::bit_cast<float>(byteswap32(std::bit_cast<std::uint32_t>(v)));
        }
    }
    check_finite(values, path.filename().string());
    return values;
}

void write_f32_blob(const fs::path& path, std::span<const float> values) {
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        fail(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
    }
    if constexpr (std::endian::native == std::endian::little) {
        out.write(reinterpret_cast<const char*>(values.data()),
                  static_cast<std::streamsize>(values.size() * sizeof(float)));
    } else {
        for (float v : values) {
            const auto le = byteswap32(std::bit_cast<std::uint32_t>(v));
            out.write(reinterpret_cast<const char*>(&le), sizeof(le));
        }
    }
    if (!out) {
        fail(ErrorCode::IoFailure, "short write to " + path.string());
    }
}

TokenField load_field(const fs::path& directory) {
    const auto manifest_path = directory / kManifestFileName;
    std::ifstream in(manifest_path);
    if (!in) {
        fail(ErrorCode::IoFailure, "cannot open " + manifest_path.string());
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    const Manifest m = parse_manifest(buffer.str(), manifest_path.string());

    auto embeddings = read_f32_blob(directory / m.files.embeddings, m.embeddings_count());
    auto saliency_values = read_f32_blob(directory / m.files.saliency, m.saliency_count());
    auto text = read_f32_blob(directory / m.files.text_embedding, m.text_count());

    SaliencySource saliency;
    if (m.num_heads == 0) {
        saliency = PrecomputedSaliency{std::move(saliency_values)};
    } else {
        saliency = ClsAttention{m.num_heads, std::move(saliency_values)};
    }
    return TokenField::create(m.grid_h, m.grid_w, m.embed_dim, std::move(embeddings), std::move(saliency),
                              std::move(text), m.meta);
}

void save_field(const TokenField& field, const fs::path& directory) {
    std::error_code ec;
    fs::create_directories(directory, ec);
    if (ec) {
        fail(ErrorCode::IoFailure, "cannot create " + directory.string() + ": " + ec.message());
    }
    Manifest m;
    m.grid_h = field.grid_h();
    m.grid_w = field.grid_w();
    m.embed_dim = field.embed_dim();
    m.num_heads = field.num_heads();
    m.files = {"embeddings.f32", "saliency.f32", "text_embedding.f32"};
    m.meta = field.meta();

    write_f32_blob(directory / m.files.embeddings, field.embeddings());
    if (const auto* cls = std::get_if<ClsAttention>(&field.saliency_source())) {
        write_f32_blob(directory / m.files.saliency, cls->weights);
    } else {
        write_f32_blob(directory / m.files.saliency, std::get<PrecomputedSaliency>(field.saliency_source()).values);
    }
    write_f32_blob(directory / m.files.text_embedding, field.text_embedding());

    std::ofstream out(directory / kManifestFileName, std::ios::trunc);
    out << manifest_to_json(m);
    if (!out) {
        fail(ErrorCode::IoFailure, "cannot write manifest in " + directory.string());
    }
}

}  // namespace gridprune
