#pragma once

#include <functional>
#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace microtwin::sim {

using CallbackArg = std::variant<double, std::string>;
using Callback = std::function<double(std::span<const CallbackArg>)>;

// Name of the built-in solar surface callback: power = y * S * E.
inline constexpr const char* kSolarSurfaceCallback = "getSolarSurfaceInterpolant";

/// Named pure functions the scenario refers to by string. Entries are
/// immutable once registered.
class CallbackRegistry {
public:
    static CallbackRegistry with_builtins();

    void add(const std::string& name, Callback fn);
    bool contains(const std::string& name) const;
    const Callback& find(const std::string& name) const;
    std::vector<std::string> names() const;

private:
    std::map<std::string, Callback> entries_;
};

double eval_callback(const CallbackRegistry& registry, const std::string& name,
                     std::span<const CallbackArg> args);

// y [W/m^2] * surface [m^2] * efficiency [fraction] -> W
double solar_surface_power(double irradiance, double surface, double efficiency);

}  // namespace microtwin::sim
