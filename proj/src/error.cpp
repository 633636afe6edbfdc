// Copyright 2026 The GridPrune Authors
// SPDX-License-Identifier: Apache-2.0

#include "gridprune/error.hpp"

namespace gridprune {

std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::MissingBlob: return "MissingBlob";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::VersionUnsupported: return "VersionUnsupported";
    case ErrorCode::ManifestInvalid: return "ManifestInvalid";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::ZeroNormText: return "ZeroNormText";
    case ErrorCode::AlphaOutOfRange: return "AlphaOutOfRange";
    case ErrorCode::InvalidBlockSize: return "InvalidBlockSize";
    case ErrorCode::BudgetExceedsCapacity: return "BudgetExceedsCapacity";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::MixedN: return "MixedN";
    case ErrorCode::InvalidRect: return "InvalidRect";
    }
    return "Unknown";
}

bool is_io_error(ErrorCode code) {
    return code == ErrorCode::IoFailure || code == ErrorCode::MissingBlob;
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), m_code(code) {}

void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace gridprune
