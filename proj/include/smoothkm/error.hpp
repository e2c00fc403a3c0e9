#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace smoothkm {

enum class Errc {
    DimensionMismatch,
    EmptyCluster,
    DegenerateBisector,
    InfeasibleInit,
    InvalidSigma,
    WrongDimension,
    Unsupported,
    MissingField,
    InvalidArgument,
    Io,
    Parse,
};

constexpr std::string_view to_string(Errc code) {
    switch (code) {
        case Errc::DimensionMismatch: return "DimensionMismatch";
        case Errc::EmptyCluster: return "EmptyCluster";
        case Errc::DegenerateBisector: return "DegenerateBisector";
        case Errc::InfeasibleInit: return "InfeasibleInit";
        case Errc::InvalidSigma: return "InvalidSigma";
        case Errc::WrongDimension: return "WrongDimension";
        case Errc::Unsupported: return "Unsupported";
        case Errc::MissingField: return "MissingField";
        case Errc::InvalidArgument: return "InvalidArgument";
        case Errc::Io: return "Io";
        case Errc::Parse: return "Parse";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

}  // namespace smoothkm
