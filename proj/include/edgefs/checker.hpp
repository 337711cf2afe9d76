#pragma once

// Consistency oracle and invariant audits. The oracle is deliberately dumb:
// the view a node should converge to is the brute-force union of the owned
// subtrees of every member it can reach, with conflict flags recomputed on
// that union. The checker compares each node's actual visible tree against
// that expectation, structurally and order-insensitively.
//
// Empty folders are organizational residue and retained locally, so they
// carry no consistency claim: comparisons prune folders that contain no
// visible file.

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "edgefs/hierarchy_sync.hpp"
#include "edgefs/node_state.hpp"

namespace edgefs::checker {

// ---------------------------------------------------------------------------
// Canonical text forms (sorted, path-prefixed lines)

namespace detail {

inline void visible_lines(const NodeState& node, const FolderNode& folder,
                          const std::string& prefix, std::vector<std::string>& out) {
    for (const auto& child : folder.children) {
        if (const auto* sub = std::get_if<FolderNode>(&child)) {
            visible_lines(node, *sub, prefix + sub->name + "/", out);
        } else if (const auto* file = std::get_if<FileEntry>(&child)) {
            if (!owner_visible(node, file->owner)) continue;
            out.push_back("F " + prefix + file->logical_name + " owner=" + file->owner.value +
                          " physical=" + file->physical_name +
                          " conflicted=" + (file->conflicted ? "1" : "0"));
        }
    }
}

inline void all_lines(const FolderNode& folder, const std::string& prefix,
                      std::vector<std::string>& out) {
    for (const auto& child : folder.children) {
        if (const auto* sub = std::get_if<FolderNode>(&child)) {
            all_lines(*sub, prefix + sub->name + "/", out);
        } else if (const auto* file = std::get_if<FileEntry>(&child)) {
            out.push_back("F " + prefix + file->logical_name + " owner=" + file->owner.value +
                          " physical=" + file->physical_name +
                          " conflicted=" + (file->conflicted ? "1" : "0"));
        }
    }
}

} // namespace detail

// The files a user at this node can see and operate on, one sorted line per
// file. Folders with nothing visible underneath are omitted.
inline std::string canonical_visible_text(const NodeState& node) {
    std::vector<std::string> lines;
    detail::visible_lines(node, node.tree.root, "/", lines);
    std::sort(lines.begin(), lines.end());
    std::string text;
    for (const auto& l : lines) {
        text += l;
        text += '\n';
    }
    return text;
}

inline std::string canonical_tree_text(const FolderNode& root) {
    std::vector<std::string> lines;
    detail::all_lines(root, "/", lines);
    std::sort(lines.begin(), lines.end());
    std::string text;
    for (const auto& l : lines) {
        text += l;
        text += '\n';
    }
    return text;
}

inline std::string canonical_member_set(const NodeState& node) {
    std::vector<std::string> names;
    for (const auto& rec : node.members.entries()) names.push_back(rec.name.value);
    std::sort(names.begin(), names.end());
    std::string text;
    for (const auto& n : names) {
        text += n;
        text += '\n';
    }
    return text;
}

// ---------------------------------------------------------------------------
// Expected view oracle

// Union of the owned subtrees of the given members, conflict flags set on
// every (folder, logical name) held by two or more of them.
inline FolderNode expected_view(const std::vector<const NodeState*>& members) {
    FolderNode expected{std::string(1, kPathSeparator), {}};

    auto merge_into = [](auto&& self, FolderNode& dst, const FolderNode& src) -> void {
        for (const auto& child : src.children) {
            if (const auto* sub = std::get_if<FolderNode>(&child)) {
                FolderNode* target = find_subfolder(dst, sub->name);
                if (target == nullptr) {
                    dst.children.emplace_back(FolderNode{sub->name, {}});
                    target = std::get_if<FolderNode>(&dst.children.back());
                }
                self(self, *target, *sub);
            } else {
                dst.children.push_back(child);
            }
        }
    };

    for (const NodeState* m : members) {
        if (m == nullptr || !m->named()) continue;
        FolderNode owned = hierarchy_sync::build_owned_subtree(m->tree, m->self());
        merge_into(merge_into, expected, owned);
    }
    recompute_conflicts_deep(expected);
    return expected;
}

// ---------------------------------------------------------------------------
// Hashes for the report

inline std::uint64_t member_set_hash(const NodeState& node) {
    return fnv1a64(canonical_member_set(node));
}

inline std::uint64_t visible_tree_hash(const NodeState& node) {
    return fnv1a64(canonical_visible_text(node));
}

// ---------------------------------------------------------------------------
// Full state dump: the semantic state of one node in canonical form, used
// for byte-compare between runs. Volatile timing counters (missed pings,
// ping timestamps) and statistics stay out.

inline std::string state_dump(const NodeState& node) {
    std::ostringstream out;
    out << "name: " << (node.named() ? node.self().value : "<unnamed>") << '\n';
    out << "own_seq: " << node.tree.own_seq.value << '\n';

    std::vector<std::string> members;
    for (const auto& rec : node.members.entries()) {
        members.push_back("member: " + rec.name.value + " addr=" + std::to_string(rec.address) +
                          " port=" + std::to_string(rec.port) +
                          " reachable=" + (rec.reachable ? "1" : "0") +
                          " known_member_seq=" + std::to_string(rec.known_member_seq.value) +
                          " known_hier_seq=" + std::to_string(rec.known_hier_seq.value));
    }
    std::sort(members.begin(), members.end());
    for (const auto& m : members) out << m << '\n';

    for (const auto& [owner, seq] : node.tree.per_owner_seq) {
        out << "per_owner_seq: " << owner.value << " = " << seq.value << '\n';
    }

    std::vector<std::string> files;
    auto walk = [&](auto&& self, const FolderNode& folder, const std::string& prefix) -> void {
        for (const auto& child : folder.children) {
            if (const auto* sub = std::get_if<FolderNode>(&child)) {
                self(self, *sub, prefix + sub->name + "/");
            } else if (const auto* file = std::get_if<FileEntry>(&child)) {
                files.push_back("file: " + prefix + file->logical_name +
                                " owner=" + file->owner.value +
                                " physical=" + file->physical_name +
                                " conflicted=" + (file->conflicted ? "1" : "0") +
                                " sync_seq=" + std::to_string(file->owner_sync_seq.value));
            }
        }
    };
    walk(walk, node.tree.root, "/");
    std::sort(files.begin(), files.end());
    for (const auto& f : files) out << f << '\n';

    for (const auto& [physical, bytes] : node.store.blobs()) {
        out << "blob: " << physical << " bytes=" << bytes.size() << " data=";
        static const char* hex = "0123456789abcdef";
        for (std::uint8_t b : bytes) {
            out << hex[b >> 4] << hex[b & 0xf];
        }
        out << '\n';
    }

    std::vector<std::string> mounts;
    for (const auto& m : node.mounts) mounts.push_back(m.value);
    std::sort(mounts.begin(), mounts.end());
    for (const auto& m : mounts) out << "mount: " << m << '\n';
    return out.str();
}

// ---------------------------------------------------------------------------
// Invariant audits (run between events in audited scenarios)

// Structural invariants of one node's state.
inline void audit_node(const NodeState& node, std::vector<std::string>& violations) {
    const std::string who = node.named() ? node.self().value : std::to_string(node.address);

    std::set<std::string> member_names;
    for (const auto& rec : node.members.entries()) {
        if (!member_names.insert(rec.name.value).second) {
            violations.push_back("node " + who + ": duplicate member " + rec.name.value);
        }
        const bool should_be_unreachable = rec.missed_pings >= node.config.inactivity_threshold;
        if (node.named() && rec.name == node.self()) continue;
        if (rec.reachable == should_be_unreachable) {
            violations.push_back("node " + who + ": reachable flag out of step for " +
                                 rec.name.value);
        }
    }

    auto walk = [&](auto&& self, const FolderNode& folder, const std::string& prefix) -> void {
        std::set<std::string> folder_names;
        std::set<std::pair<std::string, std::string>> file_keys;
        std::map<std::string, std::set<std::string>> owners_by_logical;
        for (const auto& child : folder.children) {
            if (const auto* sub = std::get_if<FolderNode>(&child)) {
                if (!folder_names.insert(sub->name).second) {
                    violations.push_back("node " + who + ": duplicate folder " + prefix +
                                         sub->name);
                }
                self(self, *sub, prefix + sub->name + "/");
            } else if (const auto* file = std::get_if<FileEntry>(&child)) {
                if (!file_keys.insert({file->logical_name, file->owner.value}).second) {
                    violations.push_back("node " + who + ": duplicate entry " + prefix +
                                         file->logical_name + " owner=" + file->owner.value);
                }
                owners_by_logical[file->logical_name].insert(file->owner.value);
            }
        }
        for (const auto& child : folder.children) {
            const auto* file = std::get_if<FileEntry>(&child);
            if (file == nullptr) continue;
            const bool expect_conflicted = owners_by_logical[file->logical_name].size() > 1;
            if (file->conflicted != expect_conflicted) {
                violations.push_back("node " + who + ": conflict flag wrong on " + prefix +
                                     file->logical_name + " owner=" + file->owner.value);
            }
        }
    };
    walk(walk, node.tree.root, "/");

    // Visibility: a file is listed iff its owner is in reach; hidden files
    // stay in the tree untouched.
    auto check_listing = [&](auto&& self, const FolderNode& folder,
                             const std::string& prefix) -> void {
        auto listed = list_visible(node, folder);
        std::set<std::string> listed_set(listed.begin(), listed.end());
        for (const auto& child : folder.children) {
            if (const auto* sub = std::get_if<FolderNode>(&child)) {
                if (!listed_set.contains(sub->name)) {
                    violations.push_back("node " + who + ": folder missing from listing " +
                                         prefix + sub->name);
                }
                self(self, *sub, prefix + sub->name + "/");
            } else if (const auto* file = std::get_if<FileEntry>(&child)) {
                const bool in_reach = owner_visible(node, file->owner);
                const bool listed_here = listed_set.contains(display_name(*file));
                if (in_reach != listed_here) {
                    violations.push_back("node " + who + ": listing/visibility mismatch on " +
                                         prefix + display_name(*file));
                }
            }
        }
    };
    check_listing(check_listing, node.tree.root, "/");
}

// Cross-node: once a node has completed a sync round with an in-reach owner
// (its recorded seq equals the owner's current seq), it must hold exactly
// that owner's subtree.
inline void audit_sync_rounds(const std::vector<const NodeState*>& nodes,
                              std::vector<std::string>& violations) {
    for (const NodeState* n : nodes) {
        if (!n->named()) continue;
        for (const NodeState* m : nodes) {
            if (m == n || !m->named()) continue;
            const MemberRecord* rec = n->members.find(m->self());
            if (rec == nullptr || !rec->reachable) continue;
            auto it = n->tree.per_owner_seq.find(m->self());
            if (it == n->tree.per_owner_seq.end() || it->second != m->tree.own_seq ||
                it->second == SeqNum{}) {
                continue; // no completed sync round to hold against
            }
            std::string have = canonical_tree_text(
                hierarchy_sync::build_owned_subtree(n->tree, m->self()));
            std::string want = canonical_tree_text(
                hierarchy_sync::build_owned_subtree(m->tree, m->self()));
            if (have != want) {
                violations.push_back("node " + n->self().value + ": synced view of " +
                                     m->self().value + " diverges from owner");
            }
        }
    }
}

} // namespace edgefs::checker
