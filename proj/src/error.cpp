#include "microtwin/error.hpp"

namespace microtwin {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::Config: return "config";
    case ErrorKind::Validation: return "validation";
    case ErrorKind::NotFound: return "not-found";
    case ErrorKind::Conflict: return "conflict";
    case ErrorKind::NoData: return "no-data";
    case ErrorKind::Policy: return "policy";
    case ErrorKind::Transport: return "transport";
    case ErrorKind::Encoding: return "encoding";
    case ErrorKind::Lagged: return "lagged";
    }
    return "unknown";
}

std::optional<ErrorKind> parse_error_kind(std::string_view name) {
    for (auto k : {ErrorKind::Config, ErrorKind::Validation, ErrorKind::NotFound, ErrorKind::Conflict, ErrorKind::NoData,
                   ErrorKind::Policy, ErrorKind::Transport, ErrorKind::Encoding, ErrorKind::Lagged}) {
        if (to_string(k) == name) return k;
    }
    return std::nullopt;
}

}  // namespace microtwin
