#include "core/error.hpp"

namespace piano {

const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument: return "invalid argument";
        case ErrorCode::InvalidBand: return "invalid band";
        case ErrorCode::InvalidBinCount: return "invalid bin count";
        case ErrorCode::NotPowerOfTwo: return "window length is not a power of two";
        case ErrorCode::AboveNyquist: return "frequency outside the representable range";
        case ErrorCode::RecordingTooShort: return "recording shorter than the reference signal";
        case ErrorCode::UnknownDevice: return "unknown device";
        case ErrorCode::InfeasiblePower: return "infeasible power";
        case ErrorCode::NoRoot: return "no root in bracket";
        case ErrorCode::OutOfRange: return "value out of range";
        case ErrorCode::Config: return "configuration error";
        case ErrorCode::Io: return "I/O error";
    }
    return "unknown error";
}

}  // namespace piano
