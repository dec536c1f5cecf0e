#pragma once

#include <stdexcept>
#include <string>

namespace piano {

enum class ErrorCode {
    InvalidArgument,
    InvalidBand,
    InvalidBinCount,
    NotPowerOfTwo,
    AboveNyquist,
    RecordingTooShort,
    UnknownDevice,
    InfeasiblePower,
    NoRoot,
    OutOfRange,
    Config,
    Io,
};

const char* to_string(ErrorCode code);

// Thrown by every core routine that rejects its input.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace piano
