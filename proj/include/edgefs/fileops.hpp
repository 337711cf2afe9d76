#pragma once

// The freq protocol: create/delete/rename with a blocking request-response
// toward the file's owner, plus logical-to-physical resolution for open.
// Every metadata mutation executes locally at the owner with no further
// communication, which is what keeps interrupted runs consistent: a request
// either fully applied or never arrived.
//
// Requests carry paths whose leaf is the logical file name; the requester
// resolves display names (possibly conflict-mangled) to the owner and the
// logical name before sending.

#include <optional>
#include <string>
#include <vector>

#include "edgefs/node_state.hpp"
#include "edgefs/storage.hpp"
#include "edgefs/wire.hpp"

namespace edgefs::fileops {

// Outcome codes for locally submitted operations. The freq subset matches
// wire::FileStatus; write/read add the data-path codes.
inline constexpr std::string_view kOk = "ok";
inline constexpr std::string_view kNameConflict = "name-conflict";
inline constexpr std::string_view kInvalidPath = "invalid-path";
inline constexpr std::string_view kNotOwner = "not-owner";
inline constexpr std::string_view kNoMemory = "no-memory";
inline constexpr std::string_view kTimeout = "timeout";
inline constexpr std::string_view kNotFound = "not-found";
inline constexpr std::string_view kOwnerUnreachable = "owner-unreachable";
inline constexpr std::string_view kUnnamed = "unnamed";
inline constexpr std::string_view kQuotaExceeded = "quota-exceeded";
inline constexpr std::string_view kNotGranted = "not-granted";

// ---------------------------------------------------------------------------
// Owner side

namespace detail {

inline FolderNode* find_existing_folder(HierarchyTree& tree,
                                        const std::vector<std::string>& components,
                                        std::size_t count) {
    FolderNode* current = &tree.root;
    for (std::size_t i = 0; i < count; ++i) {
        current = find_subfolder(*current, components[i]);
        if (current == nullptr) return nullptr;
    }
    return current;
}

inline FileEntry* find_own_file(FolderNode& folder, const NodeState& node,
                                const std::string& logical) {
    for (auto& child : folder.children) {
        auto* file = std::get_if<FileEntry>(&child);
        if (file && file->owner == node.self() && file->logical_name == logical) return file;
    }
    return nullptr;
}

// A name is blocked when a folder carries it or a file in reach displays
// under it. Files of out-of-reach owners do not block: their owners cannot
// be asked, which is exactly how conflicts are allowed to arise.
inline bool name_blocked(const NodeState& node, const FolderNode& folder,
                         const std::string& name) {
    for (const auto& child : folder.children) {
        if (const auto* sub = std::get_if<FolderNode>(&child)) {
            if (sub->name == name) return true;
        } else if (const auto* file = std::get_if<FileEntry>(&child)) {
            if (file->owner == node.self() && file->logical_name == name) return true;
            if (owner_visible(node, file->owner) &&
                (file->logical_name == name || display_name(*file) == name)) {
                return true;
            }
        }
    }
    return false;
}

inline std::string next_physical_name(const HierarchyTree& tree, const std::string& logical) {
    return std::to_string(tree.own_seq.next().value) + "_" + logical;
}

} // namespace detail

// Executes one file request at the owner. Replayed requests are naturally
// idempotent: creating a file that exists, deleting one already gone and
// renaming to the current name all succeed without a second state change.
inline wire::FileResponse handle_file_request(NodeState& node, const wire::FileRequest& req) {
    using wire::FileStatus;
    if (!node.named()) return {FileStatus::InvalidPath};
    auto components = split_path(req.path);
    if (!components || components->empty()) return {FileStatus::InvalidPath};
    const std::string leaf = components->back();

    switch (req.op) {
        case wire::FileOp::Add: {
            FolderNode* parent =
                detail::find_existing_folder(node.tree, *components, components->size() - 1);
            if (parent != nullptr) {
                if (detail::find_own_file(*parent, node, leaf) != nullptr) {
                    return {FileStatus::Ok}; // replay
                }
                if (detail::name_blocked(node, *parent, leaf)) {
                    return {FileStatus::NameConflict};
                }
            }
            const std::string physical = detail::next_physical_name(node.tree, leaf);
            if (node.store.create(physical) == BlobStore::Status::NoMemory) {
                return {FileStatus::NoMemory};
            }
            FileEntry entry{leaf, node.self(), physical, false, SeqNum{}};
            InsertStatus ins = insert_entry(node.tree, join_path(*components, components->size() - 1),
                                            std::move(entry), node.self());
            if (ins != InsertStatus::Ok) {
                node.store.remove(physical);
                return {ins == InsertStatus::InvalidPath ? FileStatus::InvalidPath
                                                         : FileStatus::NameConflict};
            }
            return {FileStatus::Ok};
        }

        case wire::FileOp::Delete: {
            FolderNode* parent =
                detail::find_existing_folder(node.tree, *components, components->size() - 1);
            if (parent == nullptr) return {FileStatus::Ok}; // nothing there: already gone
            FileEntry* entry = detail::find_own_file(*parent, node, leaf);
            if (entry == nullptr) {
                for (const auto& child : parent->children) {
                    const auto* file = std::get_if<FileEntry>(&child);
                    if (file && file->logical_name == leaf && file->owner != node.self()) {
                        return {FileStatus::NotOwner};
                    }
                }
                return {FileStatus::Ok}; // replay of a completed delete
            }
            node.store.remove(entry->physical_name);
            remove_entry(node.tree, *parent, leaf, node.self(), node.self());
            return {FileStatus::Ok};
        }

        case wire::FileOp::Rename: {
            if (req.new_name.empty() || req.new_name == "." || req.new_name == ".." ||
                req.new_name.find(kPathSeparator) != std::string::npos) {
                return {FileStatus::InvalidPath};
            }
            FolderNode* parent =
                detail::find_existing_folder(node.tree, *components, components->size() - 1);
            if (parent == nullptr) return {FileStatus::InvalidPath};
            FileEntry* source = detail::find_own_file(*parent, node, leaf);
            if (source != nullptr && source->logical_name == req.new_name) {
                return {FileStatus::Ok}; // rename to the current name
            }
            FileEntry* already = detail::find_own_file(*parent, node, req.new_name);
            if (source == nullptr) {
                // Replay after the rename applied, or a rename of nothing.
                return {already != nullptr ? FileStatus::Ok : FileStatus::InvalidPath};
            }
            if (already != nullptr || detail::name_blocked(node, *parent, req.new_name)) {
                return {FileStatus::NameConflict};
            }
            source->logical_name = req.new_name;
            node.tree.own_seq = node.tree.own_seq.next();
            recompute_conflicts(*parent);
            return {FileStatus::Ok};
        }
    }
    return {FileStatus::InvalidPath};
}

// ---------------------------------------------------------------------------
// Requester side

// resolve_open: translate a display path into the owning member and the
// physical name; reads and writes then bypass the logical layer entirely.
struct ResolveResult {
    std::string_view code = kOk;
    MemberName owner;
    std::string physical_name;
};

inline ResolveResult resolve_open(const NodeState& node, const std::string& path) {
    auto r = lookup(node.tree, path);
    if (r.file == nullptr) return {kNotFound, {}, {}};
    if (!owner_visible(node, r.file->owner)) return {kOwnerUnreachable, {}, {}};
    return {kOk, r.file->owner, r.file->physical_name};
}

// What starting a local operation produced: either a final outcome, or a
// reliable call to issue toward the owner.
struct StartResult {
    bool done = true;
    std::string_view outcome = kOk;
    NodeId dst = 0;
    Bytes payload;
    PendingCall::Phase phase = PendingCall::Phase::Freq;
    MemberName owner;
    std::string physical_name;

    static StartResult finished(std::string_view code) { return StartResult{true, code}; }
};

inline std::string_view status_code(wire::FileStatus s) { return wire::to_string(s); }
inline std::string_view status_code(wire::DataStatus s) { return wire::to_string(s); }

namespace detail {

// Uniform pick over the members currently in reach, the local member
// included. Sending to an out-of-reach member would only ever time out.
inline const MemberRecord* pick_owner(NodeState& node) {
    std::vector<const MemberRecord*> candidates;
    for (const auto& rec : node.members.entries()) {
        if (rec.reachable) candidates.push_back(&rec);
    }
    if (candidates.empty()) return nullptr;
    return candidates[node.rng() % candidates.size()];
}

// Rebuilds the request path with the logical leaf: folder components stay,
// the display leaf is replaced by the entry's logical name.
inline std::string request_path(const std::vector<std::string>& components,
                                const std::string& logical_leaf) {
    std::string path;
    for (std::size_t i = 0; i + 1 < components.size(); ++i) {
        path += kPathSeparator;
        path += components[i];
    }
    path += kPathSeparator;
    path += logical_leaf;
    return path;
}

} // namespace detail

// create: check the display name locally first; a visible sibling with the
// same name cancels the call before any message is sent. Otherwise the
// member-selection heuristic picks an owner and the add request goes out
// (or executes in place when the heuristic picked us).
inline StartResult start_create(NodeState& node, const LocalOp& op) {
    if (!node.named()) return StartResult::finished(kUnnamed);
    auto components = split_path(op.path);
    if (!components || components->empty()) return StartResult::finished(kInvalidPath);
    const std::string& leaf = components->back();
    if (leaf == "." || leaf == "..") return StartResult::finished(kInvalidPath);

    FolderNode* parent =
        detail::find_existing_folder(node.tree, *components, components->size() - 1);
    if (parent != nullptr) {
        for (const auto& child : parent->children) {
            if (const auto* sub = std::get_if<FolderNode>(&child)) {
                if (sub->name == leaf) return StartResult::finished(kNameConflict);
            } else if (const auto* file = std::get_if<FileEntry>(&child)) {
                if (owner_visible(node, file->owner) && display_name(*file) == leaf) {
                    return StartResult::finished(kNameConflict);
                }
            }
        }
    }

    const MemberRecord* owner = detail::pick_owner(node);
    if (owner == nullptr) return StartResult::finished(kOwnerUnreachable);
    wire::FileRequest req{wire::FileOp::Add, op.path, "", node.self()};
    if (owner->name == node.self()) {
        return StartResult::finished(status_code(handle_file_request(node, req).status));
    }
    StartResult r;
    r.done = false;
    r.dst = owner->address;
    r.payload = wire::encode(req);
    r.phase = PendingCall::Phase::Freq;
    r.owner = owner->name;
    return r;
}

// delete/rename: the file already has an owner, so that owner is sent the
// call; self-routing short-circuits the network.
inline StartResult start_delete_or_rename(NodeState& node, const LocalOp& op) {
    if (!node.named()) return StartResult::finished(kUnnamed);
    auto components = split_path(op.path);
    if (!components || components->empty()) return StartResult::finished(kInvalidPath);
    auto r = lookup(node.tree, op.path);
    if (r.file == nullptr) return StartResult::finished(kNotFound);
    if (!owner_visible(node, r.file->owner)) return StartResult::finished(kNotFound);

    wire::FileRequest req;
    req.op = op.kind == LocalOp::Kind::Delete ? wire::FileOp::Delete : wire::FileOp::Rename;
    req.path = detail::request_path(*components, r.file->logical_name);
    req.new_name = op.new_name;
    req.requester = node.self();

    if (r.file->owner == node.self()) {
        return StartResult::finished(status_code(handle_file_request(node, req).status));
    }
    const MemberRecord* rec = node.members.find(r.file->owner);
    if (rec == nullptr || !rec->reachable) return StartResult::finished(kNotFound);
    StartResult out;
    out.done = false;
    out.dst = rec->address;
    out.payload = wire::encode(req);
    out.phase = PendingCall::Phase::Freq;
    out.owner = rec->name;
    return out;
}

// write/read: resolve to (owner, physical name); local blobs are touched
// directly, remote ones go over the data channel, after a one-time mont
// grant handshake with that owner.
inline StartResult start_write_or_read(NodeState& node, const LocalOp& op) {
    if (!node.named()) return StartResult::finished(kUnnamed);
    ResolveResult resolved = resolve_open(node, op.path);
    if (resolved.code != kOk) return StartResult::finished(resolved.code);

    if (resolved.owner == node.self()) {
        if (op.kind == LocalOp::Kind::Write) {
            auto status = node.store.write(resolved.physical_name, op.content);
            switch (status) {
                case BlobStore::Status::Ok: return StartResult::finished(kOk);
                case BlobStore::Status::QuotaExceeded:
                    return StartResult::finished(kQuotaExceeded);
                default: return StartResult::finished(kNotFound);
            }
        }
        auto [status, content] = node.store.read(resolved.physical_name);
        return StartResult::finished(status == BlobStore::Status::Ok ? kOk : kNotFound);
    }

    const MemberRecord* rec = node.members.find(resolved.owner);
    if (rec == nullptr || !rec->reachable) return StartResult::finished(kOwnerUnreachable);

    StartResult out;
    out.done = false;
    out.dst = rec->address;
    out.owner = resolved.owner;
    out.physical_name = resolved.physical_name;
    if (!node.mounts.contains(resolved.owner)) {
        out.phase = PendingCall::Phase::Mont;
        out.payload = wire::encode(wire::MontRequest{node.self()});
        return out;
    }
    out.phase = PendingCall::Phase::Data;
    wire::DataRequest data;
    data.op = op.kind == LocalOp::Kind::Write ? wire::DataOp::Write : wire::DataOp::Read;
    data.requester = node.self();
    data.physical_name = resolved.physical_name;
    data.content = op.content;
    out.payload = wire::encode(data);
    return out;
}

inline StartResult start_op(NodeState& node, const LocalOp& op) {
    switch (op.kind) {
        case LocalOp::Kind::Create: return start_create(node, op);
        case LocalOp::Kind::Delete:
        case LocalOp::Kind::Rename: return start_delete_or_rename(node, op);
        case LocalOp::Kind::Write:
        case LocalOp::Kind::Read: return start_write_or_read(node, op);
    }
    return StartResult::finished(kInvalidPath);
}

} // namespace edgefs::fileops
