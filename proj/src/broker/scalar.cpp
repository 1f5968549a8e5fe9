#include "microtwin/broker/scalar.hpp"

#include <cmath>

#include "microtwin/error.hpp"

namespace microtwin {

nlohmann::json scalar_to_json(const Scalar& v) {
    return std::visit([](const auto& x) { return nlohmann::json(x); }, v);
}

Scalar scalar_from_json(const nlohmann::json& j) {
    if (j.is_boolean()) return j.get<bool>();
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) return j.get<std::string>();
    throw Error(ErrorKind::Validation, "property values must be JSON scalars, got " + std::string(j.type_name()));
}

Scalar parse_scalar(const std::string& text) {
    auto j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded()) {
        throw Error(ErrorKind::Validation, "body is not valid JSON");
    }
    return scalar_from_json(j);
}

std::optional<double> scalar_as_number(const Scalar& v) {
    if (const auto* d = std::get_if<double>(&v)) return *d;
    if (const auto* b = std::get_if<bool>(&v)) return *b ? 1.0 : 0.0;
    return std::nullopt;
}

std::string scalar_to_string(const Scalar& v) { return scalar_to_json(v).dump(); }

}  // namespace microtwin
