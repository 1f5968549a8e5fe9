#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace microtwin::net {

enum class Verdict { Allow, Deny };

std::string_view to_string(Verdict v);
Verdict parse_verdict(std::string_view text);

inline constexpr std::string_view kAnySegment = "*";

struct FirewallRule {
    std::string src;  // segment name or "*"
    std::string dst;
    Verdict verdict = Verdict::Deny;
    int priority = 0;
    std::string id;
};

/// Segment-to-segment firewall. Rules are matched by descending priority
/// (declaration order breaks ties); anything unmatched is denied. Traffic
/// that stays inside one segment never crosses a firewall.
class Policy {
public:
    struct Decision {
        Verdict verdict;
        std::string rule_id;  // "intra-segment" or "default-deny" when no rule matched
    };

    Policy(std::vector<std::string> segments, std::vector<FirewallRule> rules);

    // client / dmz / control / field / internet / management with the
    // campus firewall matrix.
    static Policy campus_default();

    // Either a bare rule array or {"segments": [...], "rules": [...]}.
    static Policy from_json(const nlohmann::json& doc);

    Decision evaluate(std::string_view src_segment, std::string_view dst_segment) const;

    bool has_segment(std::string_view name) const;
    const std::vector<std::string>& segments() const noexcept { return segments_; }
    const std::vector<FirewallRule>& rules() const noexcept { return rules_; }

private:
    std::vector<std::string> segments_;
    std::vector<FirewallRule> rules_;  // sorted by priority, stable
};

std::vector<std::string> standard_segments();

}  // namespace microtwin::net
