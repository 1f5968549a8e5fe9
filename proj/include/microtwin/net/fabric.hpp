#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <set>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "microtwin/net/policy.hpp"

namespace microtwin::net {

struct Delivery {
    bool delivered = false;
    bool via_connection = false;  // allowed only as return traffic
    std::string rule_id;
};

struct BlockedRecord {
    std::string src;
    std::string dst;
    std::string rule_id;
    std::string payload;
};

/// The virtual network every inter-module message crosses. Nodes sit in
/// exactly one segment; `deliver` is the single enforcement point.
class Fabric {
public:
    explicit Fabric(Policy policy);

    void attach(const std::string& node, const std::string& segment);
    void detach(const std::string& node);
    bool attached(const std::string& node) const;
    std::string segment_of(const std::string& node) const;

    // Policy verdict, widened by established connections in the reverse
    // direction.
    Verdict permits(const std::string& src, const std::string& dst) const;

    Delivery deliver(const std::string& src, const std::string& dst, std::string_view payload);

    std::uint64_t delivered() const noexcept { return delivered_.load(); }
    std::uint64_t blocked() const noexcept { return blocked_.load(); }
    std::map<std::string, std::uint64_t> blocked_by_rule() const;
    std::vector<BlockedRecord> recent_blocked() const;

    void on_blocked(std::function<void(const BlockedRecord&)> sink);

    const Policy& policy() const noexcept { return policy_; }

private:
    Policy::Decision decide(const std::string& src_seg, const std::string& dst_seg, const std::string& src,
                            const std::string& dst, bool& via_connection) const;

    const Policy policy_;

    mutable std::shared_mutex mutex_;
    std::map<std::string, std::string> nodes_;
    std::set<std::pair<std::string, std::string>> connections_;

    mutable std::mutex blocked_mutex_;
    std::map<std::string, std::uint64_t> blocked_by_rule_;
    std::vector<BlockedRecord> recent_blocked_;
    std::function<void(const BlockedRecord&)> sink_;

    std::atomic<std::uint64_t> delivered_{0};
    std::atomic<std::uint64_t> blocked_{0};
};

}  // namespace microtwin::net
