#include "hccstage/error.hpp"

namespace hccstage {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::Parse: return "parse error";
        case ErrorKind::Schema: return "schema error";
        case ErrorKind::Format: return "format error";
        case ErrorKind::NoLesion: return "no-lesion error";
        case ErrorKind::FeatureUndefined: return "feature-undefined error";
        case ErrorKind::Estimation: return "estimation error";
        case ErrorKind::Selection: return "selection error";
        case ErrorKind::Training: return "training error";
        case ErrorKind::Input: return "input error";
        case ErrorKind::Split: return "split error";
        case ErrorKind::Config: return "config error";
        case ErrorKind::Io: return "i/o error";
    }
    return "error";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind), detail_(message) {}

void raise(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace hccstage
