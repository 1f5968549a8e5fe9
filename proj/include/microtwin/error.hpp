#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace microtwin {

enum class ErrorKind {
    Config,      // bad model/table/registry setup
    Validation,  // malformed input (ids, scenario fields)
    NotFound,
    Conflict,
    NoData,
    Policy,      // blocked by the network fabric
    Transport,   // unreachable peer, socket failure
    Encoding,
    Lagged,      // subscriber fell behind and was disconnected
};

std::string_view to_string(ErrorKind kind);
std::optional<ErrorKind> parse_error_kind(std::string_view name);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace microtwin
