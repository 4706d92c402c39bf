#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace iqsim {

// Precondition violated by a numeric argument (rate <= 0, symbol out of range, ...).
class domain_error : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Malformed on-disk data or sidecar metadata.
class format_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Scenario / configuration rejected. `path()` names the offending field,
// e.g. "devices[2].traffic.interval_s".
class validation_error : public std::runtime_error {
public:
    validation_error(std::string path, const std::string &message)
        : std::runtime_error(path + ": " + message), path_(std::move(path)) {}

    const std::string &path() const noexcept { return path_; }

private:
    std::string path_;
};

// Stream session aborted. `frame_index()` is the zero-based index of the
// frame that failed to parse or broke contiguity.
class protocol_error : public std::runtime_error {
public:
    protocol_error(std::size_t frame_index, const std::string &message)
        : std::runtime_error("frame " + std::to_string(frame_index) + ": " + message),
          frame_index_(frame_index) {}

    std::size_t frame_index() const noexcept { return frame_index_; }

private:
    std::size_t frame_index_;
};

} // namespace iqsim
