#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hccstage {

enum class ErrorKind {
    Parse,             // malformed CSV / JSON / header
    Schema,            // duplicate or mistyped columns
    Format,            // volume file inconsistent with its header
    NoLesion,          // empty mask or ROI
    FeatureUndefined,  // texture feature has no support (e.g. no voxel pairs)
    Estimation,        // MI estimator preconditions violated
    Selection,         // RFECV preconditions violated
    Training,          // booster preconditions violated
    Input,             // dimension / length mismatch
    Split,             // CV split could not satisfy class coverage
    Config,            // invalid run configuration
    Io,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Single exception type for the library; `kind()` carries the category so
/// callers (notably the CLI) can map failures onto exit codes.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message);

    ErrorKind kind() const noexcept { return kind_; }
    /// Message without the category prefix.
    const std::string& detail() const noexcept { return detail_; }

private:
    ErrorKind kind_;
    std::string detail_;
};

[[noreturn]] void raise(ErrorKind kind, const std::string& message);

}  // namespace hccstage
