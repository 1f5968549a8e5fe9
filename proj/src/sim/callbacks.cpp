#include "microtwin/sim/callbacks.hpp"

#include "microtwin/error.hpp"

namespace microtwin::sim {

namespace {

double number_arg(std::span<const CallbackArg> args, std::size_t i, const char* fn) {
    if (i >= args.size()) {
        throw Error(ErrorKind::Config, std::string(fn) + ": missing argument " + std::to_string(i));
    }
    if (const auto* v = std::get_if<double>(&args[i])) {
        return *v;
    }
    throw Error(ErrorKind::Config, std::string(fn) + ": argument " + std::to_string(i) + " is not a number");
}

}  // namespace

double solar_surface_power(double irradiance, double surface, double efficiency) {
    return irradiance * surface * efficiency;
}

CallbackRegistry CallbackRegistry::with_builtins() {
    CallbackRegistry reg;
    Callback solar = [](std::span<const CallbackArg> args) {
        return solar_surface_power(number_arg(args, 0, kSolarSurfaceCallback),
                                   number_arg(args, 1, kSolarSurfaceCallback),
                                   number_arg(args, 2, kSolarSurfaceCallback));
    };
    reg.add(kSolarSurfaceCallback, solar);
    reg.add("solar-surface", solar);
    return reg;
}

void CallbackRegistry::add(const std::string& name, Callback fn) {
    if (name.empty() || !fn) {
        throw Error(ErrorKind::Config, "callback needs a name and a function");
    }
    if (!entries_.emplace(name, std::move(fn)).second) {
        throw Error(ErrorKind::Conflict, "callback '" + name + "' is already registered");
    }
}

bool CallbackRegistry::contains(const std::string& name) const { return entries_.count(name) != 0; }

const Callback& CallbackRegistry::find(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) {
        throw Error(ErrorKind::Config, "unknown callback '" + name + "'");
    }
    return it->second;
}

std::vector<std::string> CallbackRegistry::names() const {
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const auto& [name, fn] : entries_) {
        out.push_back(name);
    }
    return out;
}

double eval_callback(const CallbackRegistry& registry, const std::string& name,
                     std::span<const CallbackArg> args) {
    return registry.find(name)(args);
}

}  // namespace microtwin::sim
