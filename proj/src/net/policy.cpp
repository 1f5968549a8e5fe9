#include "microtwin/net/policy.hpp"

#include <algorithm>

#include "microtwin/error.hpp"

namespace microtwin::net {

std::string_view to_string(Verdict v) { return v == Verdict::Allow ? "allow" : "deny"; }

Verdict parse_verdict(std::string_view text) {
    if (text == "allow") return Verdict::Allow;
    if (text == "deny") return Verdict::Deny;
    throw Error(ErrorKind::Validation, "verdict must be allow or deny, got '" + std::string(text) + "'");
}

std::vector<std::string> standard_segments() {
    return {"client", "dmz", "control", "field", "internet", "management"};
}

Policy::Policy(std::vector<std::string> segments, std::vector<FirewallRule> rules)
    : segments_(std::move(segments)), rules_(std::move(rules)) {
    std::vector<std::string> sorted = segments_;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw Error(ErrorKind::Validation, "segment names must be unique");
    }
    for (std::size_t i = 0; i < rules_.size(); ++i) {
        auto& r = rules_[i];
        for (const auto* seg : {&r.src, &r.dst}) {
            if (*seg != kAnySegment && !has_segment(*seg)) {
                throw Error(ErrorKind::Validation, "firewall rule references unknown segment '" + *seg + "'");
            }
        }
        if (r.id.empty()) {
            r.id = "rule-" + std::to_string(i);
        }
    }
    std::stable_sort(rules_.begin(), rules_.end(),
                     [](const FirewallRule& a, const FirewallRule& b) { return a.priority > b.priority; });
}

Policy Policy::campus_default() {
    using V = Verdict;
    return Policy(standard_segments(),
                  {
                      {"control", "field", V::Allow, 100, "control-to-field"},
                      {"field", "internet", V::Deny, 100, "field-no-internet"},
                      {"client", "field", V::Deny, 100, "client-no-field"},
                      {"dmz", "field", V::Deny, 100, "dmz-no-field"},
                      {"internet", "*", V::Deny, 100, "internet-inbound"},
                      {"field", "control", V::Allow, 90, "field-telemetry"},
                      {"management", "*", V::Allow, 80, "management-direct"},
                      {"client", "dmz", V::Allow, 50, "client-to-dmz"},
                      {"client", "internet", V::Allow, 50, "client-browsing"},
                      {"dmz", "internet", V::Allow, 50, "dmz-egress"},
                      {"control", "dmz", V::Allow, 50, "control-to-dmz"},
                  });
}

Policy Policy::from_json(const nlohmann::json& doc) {
    const nlohmann::json* rules = &doc;
    std::vector<std::string> segments = standard_segments();
    if (doc.is_object()) {
        if (doc.contains("segments")) {
            segments = doc.at("segments").get<std::vector<std::string>>();
        }
        rules = &doc.at("rules");
    }
    if (!rules->is_array()) {
        throw Error(ErrorKind::Validation, "policy rules must be a JSON array");
    }
    std::vector<FirewallRule> out;
    for (const auto& r : *rules) {
        try {
            out.push_back({r.at("src").get<std::string>(), r.at("dst").get<std::string>(),
                           parse_verdict(r.at("verdict").get<std::string>()), r.value("priority", 0),
                           r.value("id", std::string{})});
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorKind::Validation, std::string("bad firewall rule: ") + e.what());
        }
    }
    return Policy(std::move(segments), std::move(out));
}

Policy::Decision Policy::evaluate(std::string_view src, std::string_view dst) const {
    if (src == dst) {
        return {Verdict::Allow, "intra-segment"};
    }
    for (const auto& r : rules_) {
        if ((r.src == kAnySegment || r.src == src) && (r.dst == kAnySegment || r.dst == dst)) {
            return {r.verdict, r.id};
        }
    }
    return {Verdict::Deny, "default-deny"};
}

bool Policy::has_segment(std::string_view name) const {
    return std::find(segments_.begin(), segments_.end(), name) != segments_.end();
}

}  // namespace microtwin::net
