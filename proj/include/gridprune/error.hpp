// Copyright 2026 The GridPrune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gridprune {

enum class ErrorCode {
    MissingBlob,
    ShapeMismatch,
    NonFiniteValue,
    VersionUnsupported,
    ManifestInvalid,
    IoFailure,
    ZeroNormText,
    AlphaOutOfRange,
    InvalidBlockSize,
    BudgetExceedsCapacity,
    InvalidConfig,
    MixedN,
    InvalidRect,
};

std::string_view to_string(ErrorCode code);

/// True for failures caused by the filesystem rather than by the data.
bool is_io_error(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message);

    ErrorCode code() const noexcept { return m_code; }

private:
    ErrorCode m_code;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace gridprune
