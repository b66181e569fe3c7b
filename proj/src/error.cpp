#include "egarch/error.hpp"

namespace egarch {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::InvalidArgument: return "InvalidArgument";
        case ErrorKind::NonStationary: return "NonStationary";
        case ErrorKind::InadmissibleParams: return "InadmissibleParams";
        case ErrorKind::Overflow: return "Overflow";
        case ErrorKind::Unidentifiable: return "Unidentifiable";
        case ErrorKind::EmptyFeasibleSet: return "EmptyFeasibleSet";
        case ErrorKind::NonConvergence: return "NonConvergence";
        case ErrorKind::SingularB: return "SingularB";
        case ErrorKind::MissingLatentState: return "MissingLatentState";
        case ErrorKind::ParseError: return "ParseError";
        case ErrorKind::NonFiniteValue: return "NonFiniteValue";
        case ErrorKind::TooShort: return "TooShort";
        case ErrorKind::Io: return "Io";
    }
    return "Unknown";
}

bool Error::is_domain_error() const noexcept {
    switch (kind_) {
        case ErrorKind::InvalidArgument:
        case ErrorKind::ParseError:
        case ErrorKind::NonFiniteValue:
        case ErrorKind::TooShort:
        case ErrorKind::Io:
            return false;
        default:
            return true;
    }
}

}  // namespace egarch
