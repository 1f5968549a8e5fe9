#pragma once

#include <optional>
#include <string>
#include <variant>

#include <json.hpp>

namespace microtwin {

// Property value carried by the broker and by commands: number, boolean or
// string. Nested JSON is not a Scalar.
using Scalar = std::variant<double, bool, std::string>;

nlohmann::json scalar_to_json(const Scalar& v);

// Throws Error(Validation) for arrays, objects and null.
Scalar scalar_from_json(const nlohmann::json& j);

// Parses a JSON text holding a single scalar.
Scalar parse_scalar(const std::string& text);

// Numbers as-is, booleans as 0/1, strings nullopt.
std::optional<double> scalar_as_number(const Scalar& v);

std::string scalar_to_string(const Scalar& v);

}  // namespace microtwin
