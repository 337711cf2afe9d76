#pragma once

// The hierarchy half of the sync protocol: extracting the subtree of files a
// member owns, the folder-merge that reconciles a received subtree with the
// local tree, and conflict flag maintenance. The owner of a file is the
// source of truth for it; a sync never touches files owned by anyone else
// and never moves the local member's own sequence number.

#include <optional>
#include <string>
#include <vector>

#include "edgefs/node_state.hpp"
#include "edgefs/wire.hpp"

namespace edgefs::hierarchy_sync {

// Projection of a tree onto one owner: exactly the entries with a matching
// owner, each reachable by its original path, with folders holding none of
// them pruned. Child order is preserved. Flags and sync stamps are cleared,
// they are receiver-local state.
inline bool build_owned_subtree_into(const FolderNode& src, const MemberName& owner,
                                     FolderNode& out) {
    bool has_files = false;
    for (const auto& child : src.children) {
        if (const auto* file = std::get_if<FileEntry>(&child)) {
            if (file->owner == owner) {
                FileEntry copy = *file;
                copy.conflicted = false;
                copy.owner_sync_seq = SeqNum{};
                out.children.emplace_back(std::move(copy));
                has_files = true;
            }
        } else {
            const auto& sub = std::get<FolderNode>(child);
            FolderNode projected{sub.name, {}};
            if (build_owned_subtree_into(sub, owner, projected)) {
                out.children.emplace_back(std::move(projected));
                has_files = true;
            }
        }
    }
    return has_files;
}

inline FolderNode build_owned_subtree(const FolderNode& root, const MemberName& owner) {
    FolderNode out{root.name, {}};
    build_owned_subtree_into(root, owner, out);
    return out;
}

inline FolderNode build_owned_subtree(const HierarchyTree& tree, const MemberName& owner) {
    return build_owned_subtree(tree.root, owner);
}

namespace detail {

inline std::size_t next_owned_file(const std::vector<TreeNode>& children, std::size_t from,
                                   const MemberName& owner) {
    for (std::size_t i = from; i < children.size(); ++i) {
        if (const auto* file = std::get_if<FileEntry>(&children[i]); file && file->owner == owner) {
            return i;
        }
    }
    return children.size();
}

} // namespace detail

// Two-cursor merge of one folder's contents against the provider's version,
// treating the children as linked lists. Cursors start at the first
// provider-owned file in each list:
//   - equal logical names: the same file; the current entry stays where it
//     is and gets stamped with this sync's seq, both cursors advance.
//   - different names: the provider no longer has the current file, remove
//     it; only the current cursor moves.
//   - current side exhausted: everything left in the provided list is new,
//     append it.
//   - provided side exhausted: every remaining provider-owned file in the
//     current list is stale, remove it.
// Files owned by other members are never touched. Provided subfolders are
// recursed into (created here when absent); current-only folders are
// recursed with an empty provided list so files the provider dropped
// entirely disappear as well. Emptied folders stay, they are organizational
// only.
inline void sync_folder(FolderNode& current, const FolderNode& provided,
                        const MemberName& provider, SeqNum seq) {
    std::size_t cur = detail::next_owned_file(current.children, 0, provider);
    std::size_t prov = detail::next_owned_file(provided.children, 0, provider);
    while (prov < provided.children.size() || cur < current.children.size()) {
        if (prov == provided.children.size()) {
            // provided exhausted: remaining provider-owned files are stale
            current.children.erase(current.children.begin() + static_cast<std::ptrdiff_t>(cur));
            cur = detail::next_owned_file(current.children, cur, provider);
            continue;
        }
        const auto& provided_file = std::get<FileEntry>(provided.children[prov]);
        if (cur == current.children.size()) {
            // current exhausted: everything left in provided is new
            FileEntry entry = provided_file;
            entry.owner_sync_seq = seq;
            current.children.emplace_back(std::move(entry));
            cur = current.children.size();
            prov = detail::next_owned_file(provided.children, prov + 1, provider);
            continue;
        }
        auto& current_file = std::get<FileEntry>(current.children[cur]);
        if (current_file.logical_name == provided_file.logical_name) {
            current_file.physical_name = provided_file.physical_name;
            current_file.owner_sync_seq = seq;
            cur = detail::next_owned_file(current.children, cur + 1, provider);
            prov = detail::next_owned_file(provided.children, prov + 1, provider);
        } else {
            current.children.erase(current.children.begin() + static_cast<std::ptrdiff_t>(cur));
            cur = detail::next_owned_file(current.children, cur, provider);
        }
    }

    // Recurse: provided folders first (creating missing ones), then
    // current-only folders against an empty provided list.
    for (const auto& child : provided.children) {
        const auto* sub = std::get_if<FolderNode>(&child);
        if (sub == nullptr) continue;
        FolderNode* target = find_subfolder(current, sub->name);
        if (target == nullptr) {
            current.children.emplace_back(FolderNode{sub->name, {}});
            target = std::get_if<FolderNode>(&current.children.back());
        }
        sync_folder(*target, *sub, provider, seq);
    }
    static const FolderNode kEmpty{};
    for (auto& child : current.children) {
        auto* sub = std::get_if<FolderNode>(&child);
        if (sub == nullptr) continue;
        if (find_subfolder(provided, sub->name) == nullptr) {
            sync_folder(*sub, kEmpty, provider, seq);
        }
    }
}

inline int count_conflicted(const FolderNode& root) {
    int n = 0;
    for_each_file(root, [&](const FolderNode&, const FileEntry& f) {
        if (f.conflicted) ++n;
    });
    return n;
}

// Provider side: ship the owned subtree and the current seq. Unknown
// requesters are ignored.
inline std::optional<wire::HierarchySyncReply> handle_request(
    const NodeState& provider, const wire::HierarchySyncRequest& req) {
    if (!provider.named()) return std::nullopt;
    if (provider.members.find(req.requester_name) == nullptr) return std::nullopt;
    wire::HierarchySyncReply reply;
    reply.provider_name = provider.self();
    reply.provider_hier_seq = provider.tree.own_seq;
    reply.owned_tree = build_owned_subtree(provider.tree, provider.self());
    return reply;
}

// Receiver side. Replies with a seq at or below what was already synced from
// this provider are stale and skipped, which also makes duplicated replies
// harmless. Replies from different providers touch disjoint file sets, so
// they can be applied in any order. The local own_seq never moves here.
inline bool apply_hierarchy_sync(NodeState& node, const wire::HierarchySyncReply& rep) {
    if (!node.named() || rep.provider_name.empty()) return false;
    if (rep.provider_name == node.self()) return false; // own files never sync in
    SeqNum& synced = node.tree.per_owner_seq[rep.provider_name];
    if (rep.provider_hier_seq <= synced) {
        ++node.stats.stale_sync_replies;
        return false;
    }
    const int conflicted_before = count_conflicted(node.tree.root);
    sync_folder(node.tree.root, rep.owned_tree, rep.provider_name, rep.provider_hier_seq);
    synced = rep.provider_hier_seq;
    if (MemberRecord* rec = node.members.find(rep.provider_name)) {
        rec->known_hier_seq = rep.provider_hier_seq;
    }
    recompute_conflicts_deep(node.tree.root);
    const int conflicted_after = count_conflicted(node.tree.root);
    if (conflicted_after > conflicted_before) {
        node.stats.conflicts_created += std::uint64_t(conflicted_after - conflicted_before);
    } else {
        node.stats.conflicts_resolved += std::uint64_t(conflicted_before - conflicted_after);
    }
    ++node.stats.hierarchy_syncs_applied;
    return true;
}

} // namespace edgefs::hierarchy_sync
