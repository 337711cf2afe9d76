#pragma once

// Per-member state shared by all protocol handlers. Strictly single
// threaded: handlers run one at a time on the owning node, so the state is
// a consistent snapshot at every inter-event boundary.

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>

#include "edgefs/metadata.hpp"
#include "edgefs/storage.hpp"
#include "edgefs/types.hpp"
#include "edgefs/wire.hpp"

namespace edgefs {

struct ReachabilityConfig {
    Tick ping_period = 5;
    std::uint32_t inactivity_threshold = 4; // missed periods before a member
                                            // is flagged out of reach
};

// A file operation submitted locally (by a scenario or an embedding layer).
struct LocalOp {
    enum class Kind { Create, Delete, Rename, Write, Read };
    Kind kind = Kind::Create;
    std::string path;
    std::string new_name; // rename only
    Bytes content;        // write only
    std::uint64_t op_id = 0;
};

// The one outstanding reliable call a node may have. While it is pending,
// further local operations queue FIFO; protocol traffic keeps flowing.
struct PendingCall {
    enum class Phase { Freq, Mont, Data };
    CallId call = 0;
    Phase phase = Phase::Freq;
    LocalOp op;
    MemberName target_owner;
    std::string physical_name; // resolved target for the data phase
};

struct NodeStats {
    std::map<std::string, std::uint64_t> sent_by_tag;
    std::map<std::string, std::uint64_t> recv_by_tag;
    std::uint64_t member_syncs_applied = 0;
    std::uint64_t hierarchy_syncs_applied = 0;
    std::uint64_t stale_sync_replies = 0;
    std::uint64_t conflicts_created = 0;
    std::uint64_t conflicts_resolved = 0;
    std::uint64_t unknown_tag_drops = 0;
    std::uint64_t anomalies = 0;
    std::uint64_t ops_completed = 0;
    std::uint64_t ops_failed = 0;
};

struct NodeState {
    NodeId address = 0;
    Port port = 0;

    std::optional<MemberName> name; // unnamed nodes emit only NameRequest
    MemberList members;
    HierarchyTree tree;
    BlobStore store;
    ReachabilityConfig config;
    std::mt19937_64 rng{0}; // owner-selection heuristic; seeded per scenario

    Tick now = 0;
    Tick named_tick = 0;                 // periodic protocols start here
    std::uint64_t name_suffix_counter = 0; // per-host counter for assigning names
    std::map<std::pair<NodeId, Port>, MemberName> assigned_names; // join dedupe

    std::optional<NodeId> join_host; // retried until a name is adopted
    std::set<MemberName> mounts;     // owners that granted us blob access

    std::deque<LocalOp> op_queue;
    std::optional<PendingCall> pending;

    NodeStats stats;

    [[nodiscard]] bool named() const { return name.has_value(); }
    [[nodiscard]] const MemberName& self() const { return *name; }

    [[nodiscard]] Tick freq_timeout() const { return 10 * config.ping_period; }
};

// Visibility: a file can be operated on iff its owner is the local member or
// currently reachable. Folders are always visible. Hiding is derived state,
// nothing is deleted when a member goes out of reach.
inline bool owner_visible(const NodeState& node, const MemberName& owner) {
    if (node.named() && owner == node.self()) return true;
    const MemberRecord* rec = node.members.find(owner);
    return rec != nullptr && rec->reachable;
}

inline bool visible(const NodeState& node, std::string_view path) {
    auto r = lookup(node.tree, path);
    if (r.file == nullptr) return r.folder != nullptr;
    return owner_visible(node, r.file->owner);
}

// The listing a user would see: folders plus files whose owner is in reach.
inline std::vector<std::string> list_visible(const NodeState& node, const FolderNode& folder) {
    std::vector<std::string> names;
    for (const auto& child : folder.children) {
        if (const auto* sub = std::get_if<FolderNode>(&child)) {
            names.push_back(sub->name);
        } else if (const auto* file = std::get_if<FileEntry>(&child)) {
            if (owner_visible(node, file->owner)) names.push_back(display_name(*file));
        }
    }
    return names;
}

} // namespace edgefs
