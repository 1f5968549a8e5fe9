#include "microtwin/net/fabric.hpp"

#include "microtwin/error.hpp"

namespace microtwin::net {

namespace {
constexpr std::size_t kRecentBlocked = 256;
}

Fabric::Fabric(Policy policy) : policy_(std::move(policy)) {}

void Fabric::attach(const std::string& node, const std::string& segment) {
    if (!policy_.has_segment(segment)) {
        throw Error(ErrorKind::NotFound, "unknown segment '" + segment + "'");
    }
    std::unique_lock lock(mutex_);
    auto [it, inserted] = nodes_.try_emplace(node, segment);
    if (!inserted && it->second != segment) {
        it->second = segment;
        // a moved node keeps no connection state from its old segment
        std::erase_if(connections_, [&](const auto& c) { return c.first == node || c.second == node; });
    }
}

void Fabric::detach(const std::string& node) {
    std::unique_lock lock(mutex_);
    nodes_.erase(node);
    std::erase_if(connections_, [&](const auto& c) { return c.first == node || c.second == node; });
}

bool Fabric::attached(const std::string& node) const {
    std::shared_lock lock(mutex_);
    return nodes_.count(node) != 0;
}

std::string Fabric::segment_of(const std::string& node) const {
    std::shared_lock lock(mutex_);
    auto it = nodes_.find(node);
    if (it == nodes_.end()) {
        throw Error(ErrorKind::NotFound, "node '" + node + "' is not attached");
    }
    return it->second;
}

Policy::Decision Fabric::decide(const std::string& src_seg, const std::string& dst_seg, const std::string& src,
                                const std::string& dst, bool& via_connection) const {
    auto decision = policy_.evaluate(src_seg, dst_seg);
    via_connection = false;
    if (decision.verdict == Verdict::Deny && connections_.count({dst, src}) != 0) {
        via_connection = true;
        return {Verdict::Allow, "established"};
    }
    return decision;
}

Verdict Fabric::permits(const std::string& src, const std::string& dst) const {
    std::shared_lock lock(mutex_);
    auto s = nodes_.find(src);
    auto d = nodes_.find(dst);
    if (s == nodes_.end() || d == nodes_.end()) {
        throw Error(ErrorKind::NotFound,
                    "node '" + (s == nodes_.end() ? src : dst) + "' is not attached to the fabric");
    }
    bool via = false;
    return decide(s->second, d->second, src, dst, via).verdict;
}

Delivery Fabric::deliver(const std::string& src, const std::string& dst, std::string_view payload) {
    Delivery out;
    {
        std::shared_lock lock(mutex_);
        auto s = nodes_.find(src);
        auto d = nodes_.find(dst);
        if (s == nodes_.end() || d == nodes_.end()) {
            throw Error(ErrorKind::NotFound,
                        "node '" + (s == nodes_.end() ? src : dst) + "' is not attached to the fabric");
        }
        auto decision = decide(s->second, d->second, src, dst, out.via_connection);
        out.delivered = decision.verdict == Verdict::Allow;
        out.rule_id = std::move(decision.rule_id);
        if (out.delivered && !out.via_connection && connections_.count({src, dst}) == 0) {
            lock.unlock();
            std::unique_lock wlock(mutex_);
            if (nodes_.count(src) && nodes_.count(dst)) {
                connections_.emplace(src, dst);
            }
        }
    }
    if (out.delivered) {
        delivered_.fetch_add(1, std::memory_order_relaxed);
        return out;
    }
    blocked_.fetch_add(1, std::memory_order_relaxed);
    BlockedRecord rec{src, dst, out.rule_id, std::string(payload.substr(0, 120))};
    std::function<void(const BlockedRecord&)> sink;
    {
        std::lock_guard lock(blocked_mutex_);
        ++blocked_by_rule_[out.rule_id];
        if (recent_blocked_.size() == kRecentBlocked) {
            recent_blocked_.erase(recent_blocked_.begin());
        }
        recent_blocked_.push_back(rec);
        sink = sink_;
    }
    if (sink) {
        sink(rec);
    }
    return out;
}

std::map<std::string, std::uint64_t> Fabric::blocked_by_rule() const {
    std::lock_guard lock(blocked_mutex_);
    return blocked_by_rule_;
}

std::vector<BlockedRecord> Fabric::recent_blocked() const {
    std::lock_guard lock(blocked_mutex_);
    return recent_blocked_;
}

void Fabric::on_blocked(std::function<void(const BlockedRecord&)> sink) {
    std::lock_guard lock(blocked_mutex_);
    sink_ = std::move(sink);
}

}  // namespace microtwin::net
