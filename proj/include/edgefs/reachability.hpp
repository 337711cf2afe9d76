#pragma once

// Device reachability detection: periodic pings, inactivity marking, and the
// visibility rule that hides files of out-of-reach owners. Reachability is
// per-observer; partitions make it inherently relative.

#include <vector>

#include "edgefs/node_state.hpp"
#include "edgefs/wire.hpp"

namespace edgefs::reachability {

struct PingSend {
    NodeId dst = 0;
    wire::PingMessage msg;
};

// True exactly at this node's ping-period boundaries.
inline bool at_period_boundary(const NodeState& node, Tick tick) {
    return node.named() && tick > node.named_tick &&
           (tick - node.named_tick) % node.config.ping_period == 0;
}

// One ping per known member per period, out-of-reach members included: they
// could reconnect at any time.
inline std::vector<PingSend> on_ping_timer(const NodeState& node) {
    std::vector<PingSend> sends;
    if (!node.named()) return sends;
    wire::PingMessage msg{node.self(), node.members.seq(), node.tree.own_seq};
    for (const auto& rec : node.members.entries()) {
        if (rec.name == node.self()) continue;
        sends.push_back(PingSend{rec.address, msg});
    }
    return sends;
}

// Period bookkeeping: a member that stayed silent for a whole period gets
// its missed count bumped; at inactivity_threshold it is flagged out of
// reach, exactly once. Its files disappear from listings by the visibility
// rule; nothing is deleted.
inline std::vector<MemberName> on_period_elapsed(NodeState& node, Tick tick) {
    std::vector<MemberName> newly_unreachable;
    if (!node.named()) return newly_unreachable;
    for (auto& rec : node.members.entries()) {
        if (rec.name == node.self()) continue;
        // Window for the period ending at `tick` is (tick - period, tick];
        // deliveries run before timers, so a ping landing on the boundary
        // tick counts for this period.
        const bool heard_this_period =
            rec.last_ping_tick + node.config.ping_period > tick && rec.last_ping_tick <= tick;
        if (heard_this_period) continue;
        ++rec.missed_pings;
        if (rec.missed_pings == node.config.inactivity_threshold && rec.reachable) {
            rec.reachable = false;
            newly_unreachable.push_back(rec.name);
        }
    }
    return newly_unreachable;
}

struct PingReaction {
    bool known_sender = false;
    bool became_reachable = false;
    bool want_member_sync = false;
    bool want_hierarchy_sync = false;
    NodeId sender_address = 0;
};

// Any ping resets the sender's missed count and restores reachability. The
// piggybacked sequence numbers drive the pull-based syncs: strictly greater
// than what we have on record means there is something to fetch. The record
// only advances when a sync reply is applied, so lost requests or replies
// are retried on the next ping.
inline PingReaction on_ping_received(NodeState& node, const wire::PingMessage& msg, Tick tick) {
    PingReaction reaction;
    if (!node.named()) return reaction;
    MemberRecord* rec = node.members.find(msg.sender_name);
    if (rec == nullptr) return reaction; // discovery goes through name/sync only
    reaction.known_sender = true;
    reaction.sender_address = rec->address;
    rec->missed_pings = 0;
    rec->last_ping_tick = tick;
    if (!rec->reachable) {
        rec->reachable = true;
        reaction.became_reachable = true;
    }
    if (msg.member_seq > rec->known_member_seq) reaction.want_member_sync = true;
    if (msg.hier_seq > rec->known_hier_seq) reaction.want_hierarchy_sync = true;
    return reaction;
}

} // namespace edgefs::reachability
