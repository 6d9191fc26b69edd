#pragma once

#include <stdexcept>
#include <string>

namespace chpss {

/// Classified failure. The kind maps one-to-one onto CLI exit codes.
enum class FaultKind {
    InvalidArgument,
    Unsupported,
    Config,
    Tail,
    NonFinite,
    Anomaly,
    Io,
};

const char* to_string(FaultKind kind);

class Fault : public std::runtime_error {
public:
    Fault(FaultKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    FaultKind kind() const noexcept { return kind_; }

private:
    FaultKind kind_;
};

} // namespace chpss
