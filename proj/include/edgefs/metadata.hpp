#pragma once

// Shared domain types for members and the logical hierarchy. Pure data, no
// protocol logic: everything here is safe to copy between nodes of the
// simulation, and all inter-node influence flows through messages.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "edgefs/types.hpp"

namespace edgefs {

// ---------------------------------------------------------------------------
// Members

struct MemberRecord {
    MemberName name;
    NodeId address = 0;
    Port port = 0;
    bool reachable = true;
    std::uint32_t missed_pings = 0;
    SeqNum known_member_seq; // last member-list seq heard from this member
    SeqNum known_hier_seq;   // last hierarchy seq heard from this member
    Tick last_ping_tick = 0; // tick of the last ping received from this member
};

// Sequence-numbered membership view. seq strictly increases exactly when an
// entry is added; entries are never removed, churn is reachability only.
class MemberList {
public:
    [[nodiscard]] const std::vector<MemberRecord>& entries() const { return entries_; }
    [[nodiscard]] std::vector<MemberRecord>& entries() { return entries_; }
    [[nodiscard]] SeqNum seq() const { return seq_; }
    [[nodiscard]] std::size_t size() const { return entries_.size(); }

    [[nodiscard]] MemberRecord* find(const MemberName& name) {
        for (auto& rec : entries_) {
            if (rec.name == name) return &rec;
        }
        return nullptr;
    }
    [[nodiscard]] const MemberRecord* find(const MemberName& name) const {
        return const_cast<MemberList*>(this)->find(name);
    }

    // Appends a record unless the name is already present. Bumps seq on add.
    bool add(MemberRecord rec) {
        if (find(rec.name) != nullptr) return false;
        entries_.push_back(std::move(rec));
        seq_ = seq_.next();
        return true;
    }

private:
    std::vector<MemberRecord> entries_;
    SeqNum seq_;
};

// ---------------------------------------------------------------------------
// Logical hierarchy

struct FileEntry {
    std::string logical_name; // name in the hierarchy, no path separators
    MemberName owner;         // the member physically storing the file
    std::string physical_name;
    bool conflicted = false;
    SeqNum owner_sync_seq; // seq of the sync that last confirmed this entry
};

struct FolderNode;
using TreeNode = std::variant<FolderNode, FileEntry>;

struct FolderNode {
    std::string name;
    std::vector<TreeNode> children; // insertion order; order is load-bearing
                                    // for the folder-merge algorithm
};

inline bool is_folder(const TreeNode& n) { return std::holds_alternative<FolderNode>(n); }
inline bool is_file(const TreeNode& n) { return std::holds_alternative<FileEntry>(n); }

// Conflicted files are displayed under a mangled unique name so that both
// sides of a conflict stay addressable. Owner names are unique, so the
// suffix is collision-free.
inline std::string display_name(const FileEntry& entry) {
    if (!entry.conflicted) return entry.logical_name;
    std::string owner = entry.owner.value;
    std::replace(owner.begin(), owner.end(), kPathSeparator, '-');
    return entry.logical_name + ".CONFLICT." + owner;
}

// The tree as one node sees it. own_seq versions only the files owned by the
// local member; folders are never owned. per_owner_seq records the last
// hierarchy seq synchronized from each remote owner.
struct HierarchyTree {
    FolderNode root{std::string(1, kPathSeparator), {}};
    SeqNum own_seq;
    std::map<MemberName, SeqNum> per_owner_seq;
};

// ---------------------------------------------------------------------------
// Paths: absolute, "/"-separated, case-sensitive, components non-empty,
// no "." or "..".

inline std::optional<std::vector<std::string>> split_path(std::string_view path) {
    if (path.empty() || path.front() != kPathSeparator) return std::nullopt;
    std::vector<std::string> components;
    if (path.size() == 1) return components; // bare "/"
    std::size_t pos = 1;
    while (pos <= path.size()) {
        std::size_t next = path.find(kPathSeparator, pos);
        if (next == std::string_view::npos) next = path.size();
        std::string_view comp = path.substr(pos, next - pos);
        if (comp.empty() || comp == "." || comp == "..") return std::nullopt;
        components.emplace_back(comp);
        pos = next + 1;
    }
    return components;
}

inline std::string join_path(const std::vector<std::string>& components, std::size_t count) {
    std::string path;
    for (std::size_t i = 0; i < count && i < components.size(); ++i) {
        path += kPathSeparator;
        path += components[i];
    }
    if (path.empty()) path = std::string(1, kPathSeparator);
    return path;
}

inline std::string join_path(const std::vector<std::string>& components) {
    return join_path(components, components.size());
}

// ---------------------------------------------------------------------------
// Lookup

struct LookupResult {
    FolderNode* folder = nullptr;
    FileEntry* file = nullptr;

    [[nodiscard]] bool found() const { return folder != nullptr || file != nullptr; }
};

// Traverses one path component inside a folder. Folders match by name and
// take precedence; files match by display name so conflicted files remain
// addressable.
inline TreeNode* find_child(FolderNode& folder, std::string_view component) {
    for (auto& child : folder.children) {
        if (auto* sub = std::get_if<FolderNode>(&child); sub && sub->name == component) {
            return &child;
        }
    }
    for (auto& child : folder.children) {
        if (auto* file = std::get_if<FileEntry>(&child); file && display_name(*file) == component) {
            return &child;
        }
    }
    return nullptr;
}

inline FolderNode* find_subfolder(FolderNode& folder, std::string_view name) {
    for (auto& child : folder.children) {
        if (auto* sub = std::get_if<FolderNode>(&child); sub && sub->name == name) return sub;
    }
    return nullptr;
}

inline const FolderNode* find_subfolder(const FolderNode& folder, std::string_view name) {
    return find_subfolder(const_cast<FolderNode&>(folder), name);
}

inline LookupResult lookup(HierarchyTree& tree, std::string_view path) {
    auto components = split_path(path);
    if (!components) return {};
    FolderNode* current = &tree.root;
    for (std::size_t i = 0; i < components->size(); ++i) {
        TreeNode* child = find_child(*current, (*components)[i]);
        if (child == nullptr) return {};
        if (auto* sub = std::get_if<FolderNode>(child)) {
            current = sub;
            continue;
        }
        if (i + 1 != components->size()) return {}; // path runs through a file
        return LookupResult{nullptr, std::get_if<FileEntry>(child)};
    }
    return LookupResult{current, nullptr};
}

struct ConstLookupResult {
    const FolderNode* folder = nullptr;
    const FileEntry* file = nullptr;

    [[nodiscard]] bool found() const { return folder != nullptr || file != nullptr; }
};

inline ConstLookupResult lookup(const HierarchyTree& tree, std::string_view path) {
    auto r = lookup(const_cast<HierarchyTree&>(tree), path);
    return ConstLookupResult{r.folder, r.file};
}

// ---------------------------------------------------------------------------
// Conflict flags

// A file is conflicted iff a sibling entry carries the same logical name
// under a different owner. Recomputing over a folder is a fixpoint.
// Returns the number of flag transitions performed.
inline int recompute_conflicts(FolderNode& folder) {
    int transitions = 0;
    for (auto& child : folder.children) {
        auto* file = std::get_if<FileEntry>(&child);
        if (file == nullptr) continue;
        bool duplicated = false;
        for (const auto& other : folder.children) {
            const auto* peer = std::get_if<FileEntry>(&other);
            if (peer == nullptr || peer == file) continue;
            if (peer->logical_name == file->logical_name && peer->owner != file->owner) {
                duplicated = true;
                break;
            }
        }
        if (file->conflicted != duplicated) {
            file->conflicted = duplicated;
            ++transitions;
        }
    }
    return transitions;
}

inline int recompute_conflicts_deep(FolderNode& folder) {
    int transitions = recompute_conflicts(folder);
    for (auto& child : folder.children) {
        if (auto* sub = std::get_if<FolderNode>(&child)) {
            transitions += recompute_conflicts_deep(*sub);
        }
    }
    return transitions;
}

// ---------------------------------------------------------------------------
// Insertion

enum class InsertStatus {
    Ok,
    Duplicate,   // same (logical_name, owner) already present
    InvalidPath, // malformed path, or a folder component collides with a file
    NameTaken,   // a folder with the entry's logical name already exists
};

// Walks folder_path creating missing intermediate folders. Fails when a path
// component is already taken by a file.
inline FolderNode* ensure_folder(HierarchyTree& tree, const std::vector<std::string>& components) {
    FolderNode* current = &tree.root;
    for (const auto& comp : components) {
        if (FolderNode* sub = find_subfolder(*current, comp)) {
            current = sub;
            continue;
        }
        for (const auto& child : current->children) {
            const auto* file = std::get_if<FileEntry>(&child);
            if (file && display_name(*file) == comp) return nullptr;
        }
        current->children.emplace_back(FolderNode{comp, {}});
        current = std::get_if<FolderNode>(&current->children.back());
    }
    return current;
}

// Appends entry to the folder at folder_path (created if absent), recomputes
// sibling conflict flags, and bumps own_seq iff the entry is locally owned.
inline InsertStatus insert_entry(HierarchyTree& tree, std::string_view folder_path,
                                 FileEntry entry, const MemberName& local_member) {
    auto components = split_path(folder_path);
    if (!components || entry.logical_name.empty() ||
        entry.logical_name.find(kPathSeparator) != std::string::npos) {
        return InsertStatus::InvalidPath;
    }
    FolderNode* folder = ensure_folder(tree, *components);
    if (folder == nullptr) return InsertStatus::InvalidPath;
    for (const auto& child : folder->children) {
        if (const auto* file = std::get_if<FileEntry>(&child)) {
            if (file->logical_name == entry.logical_name && file->owner == entry.owner) {
                return InsertStatus::Duplicate;
            }
        } else if (const auto* sub = std::get_if<FolderNode>(&child);
                   sub && sub->name == entry.logical_name) {
            return InsertStatus::NameTaken;
        }
    }
    const bool local = entry.owner == local_member;
    folder->children.emplace_back(std::move(entry));
    recompute_conflicts(*folder);
    if (local) tree.own_seq = tree.own_seq.next();
    return InsertStatus::Ok;
}

// Removes the file matching (logical_name, owner) from the folder, recomputes
// flags, and bumps own_seq iff locally owned. Returns false when absent.
inline bool remove_entry(HierarchyTree& tree, FolderNode& folder, const std::string& logical_name,
                         const MemberName& owner, const MemberName& local_member) {
    for (auto it = folder.children.begin(); it != folder.children.end(); ++it) {
        const auto* file = std::get_if<FileEntry>(&*it);
        if (file && file->logical_name == logical_name && file->owner == owner) {
            folder.children.erase(it);
            recompute_conflicts(folder);
            if (owner == local_member) tree.own_seq = tree.own_seq.next();
            return true;
        }
    }
    return false;
}

// ---------------------------------------------------------------------------
// Iteration helpers

template <typename Fn>
void for_each_file(FolderNode& folder, Fn&& fn) {
    for (auto& child : folder.children) {
        if (auto* file = std::get_if<FileEntry>(&child)) {
            fn(folder, *file);
        } else if (auto* sub = std::get_if<FolderNode>(&child)) {
            for_each_file(*sub, fn);
        }
    }
}

template <typename Fn>
void for_each_file(const FolderNode& folder, Fn&& fn) {
    for (const auto& child : folder.children) {
        if (const auto* file = std::get_if<FileEntry>(&child)) {
            fn(folder, *file);
        } else if (const auto* sub = std::get_if<FolderNode>(&child)) {
            for_each_file(*sub, fn);
        }
    }
}

} // namespace edgefs
