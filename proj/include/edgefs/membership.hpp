#pragma once

// The name protocol (joining) and the members half of the sync protocol
// (list propagation). Handlers are pure state transitions that return the
// messages to send; the node layer does the sending.

#include <optional>
#include <string>

#include "edgefs/node_state.hpp"
#include "edgefs/wire.hpp"

namespace edgefs::membership {

// Host side of the name protocol. Generates "<host>/<n>" with a per-host
// monotone counter: the host name is a strict prefix of every name it
// assigns, so uniqueness holds inductively. Repeated requests from the same
// (address, port) get their original name back, which keeps joining
// idempotent under retries.
inline std::optional<wire::NameReply> handle_name_request(NodeState& host,
                                                          const wire::NameRequest& req) {
    if (!host.named()) return std::nullopt; // only established members can host
    auto key = std::make_pair(req.address, req.port);
    if (auto it = host.assigned_names.find(key); it != host.assigned_names.end()) {
        return wire::NameReply{it->second, host.self()};
    }
    MemberName assigned{host.self().value + kPathSeparator +
                        std::to_string(++host.name_suffix_counter)};
    host.assigned_names[key] = assigned;
    host.members.add(MemberRecord{.name = assigned,
                                  .address = req.address,
                                  .port = req.port,
                                  .last_ping_tick = host.now});
    return wire::NameReply{assigned, host.self()};
}

// Newcomer side: adopt the assigned name and add both members. Replies
// arriving when already named are duplicate deliveries and are ignored.
inline bool handle_name_reply(NodeState& node, const wire::NameReply& rep, NodeId host_address,
                              Port host_port, Tick now) {
    if (node.named()) return false;
    if (rep.assigned_name.empty() || rep.host_name.empty()) return false;
    if (!rep.host_name.is_strict_prefix_of(rep.assigned_name)) {
        // The trust model has no byzantine members, so a malformed prefix is
        // an anomaly worth counting, not a reason to stay out of the system.
        ++node.stats.anomalies;
    }
    node.name = rep.assigned_name;
    node.named_tick = now;
    node.join_host.reset();
    node.members.add(MemberRecord{.name = rep.assigned_name,
                                  .address = node.address,
                                  .port = node.port,
                                  .last_ping_tick = now});
    node.members.add(MemberRecord{.name = rep.host_name,
                                  .address = host_address,
                                  .port = host_port,
                                  .last_ping_tick = now});
    return true;
}

// Provider side of the members sync. Read-only; unknown requesters are
// ignored the same way the mont protocol ignores them.
inline std::optional<wire::MemberSyncReply> handle_member_sync_request(
    const NodeState& provider, const wire::MemberSyncRequest& req) {
    if (!provider.named()) return std::nullopt;
    if (provider.members.find(req.requester_name) == nullptr) return std::nullopt;
    wire::MemberSyncReply reply;
    reply.provider_name = provider.self();
    reply.provider_seq = provider.members.seq();
    for (const auto& rec : provider.members.entries()) {
        reply.members.push_back(wire::MemberEntryWire{rec.name, rec.address, rec.port});
    }
    return reply;
}

// Receiver side: append unknown members; the local seq moves iff something
// was added, which is what stops member lists from propagating forever.
// Returns whether the local seq changed.
inline bool merge_member_list(NodeState& node, const wire::MemberSyncReply& rep) {
    const SeqNum before = node.members.seq();
    for (const auto& e : rep.members) {
        if (e.name.empty() || node.members.find(e.name) != nullptr) continue;
        node.members.add(MemberRecord{.name = e.name,
                                      .address = e.address,
                                      .port = e.port,
                                      .last_ping_tick = node.now});
    }
    if (MemberRecord* provider = node.members.find(rep.provider_name)) {
        provider->known_member_seq = rep.provider_seq;
    }
    ++node.stats.member_syncs_applied;
    return node.members.seq() != before;
}

} // namespace edgefs::membership
