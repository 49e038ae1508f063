#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace slacc {

/// Malformed bytes in a wire blob or on-disk file. Carries the byte offset
/// at which parsing failed.
class FormatError : public std::runtime_error {
public:
    FormatError(std::size_t offset, const std::string& what)
        : std::runtime_error("format error at byte " + std::to_string(offset) + ": " + what),
          offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

/// Invalid run configuration, detected before any work starts.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Mutable state inconsistent with the data handed to it (e.g. an entropy
/// history sized for a different channel count).
class StateError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace slacc
