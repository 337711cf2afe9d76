#pragma once

// Protocol messages and their byte encoding.
//
// Every message starts with its protocol tag as 4 raw bytes at offset 0, so
// it can be routed without further decoding. After the tag, fields are
// length-prefixed: integers are 8-byte big-endian, strings are an 8-byte
// big-endian length followed by UTF-8 bytes. The per-message layouts are
// documented in docs/wire-format.md.

#include <cstring>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "edgefs/metadata.hpp"
#include "edgefs/types.hpp"

namespace edgefs::wire {

// The five protocols of the metadata layer plus the data path.
inline constexpr std::string_view kTagName = "name";
inline constexpr std::string_view kTagPing = "ping";
inline constexpr std::string_view kTagSync = "sync";
inline constexpr std::string_view kTagMont = "mont";
inline constexpr std::string_view kTagFreq = "freq";
inline constexpr std::string_view kTagData = "data";
inline constexpr std::size_t kTagSize = 4;

// ---------------------------------------------------------------------------
// Primitive encoding

class ByteWriter {
public:
    void put_tag(std::string_view tag) {
        buf_.insert(buf_.end(), tag.begin(), tag.end());
    }
    void put_u64(std::uint64_t v) {
        for (int shift = 56; shift >= 0; shift -= 8) {
            buf_.push_back(static_cast<std::uint8_t>((v >> shift) & 0xff));
        }
    }
    void put_string(std::string_view s) {
        put_u64(s.size());
        buf_.insert(buf_.end(), s.begin(), s.end());
    }
    void put_bytes(const Bytes& b) {
        put_u64(b.size());
        buf_.insert(buf_.end(), b.begin(), b.end());
    }

    [[nodiscard]] Bytes take() { return std::move(buf_); }

private:
    Bytes buf_;
};

// Bounds-checked reader. Any out-of-range read poisons the reader; callers
// test ok() once after decoding and discard the message on failure.
class ByteReader {
public:
    explicit ByteReader(const Bytes& data) : data_(data) {}

    std::string read_tag() {
        if (!require(kTagSize)) return {};
        std::string tag(reinterpret_cast<const char*>(data_.data() + pos_), kTagSize);
        pos_ += kTagSize;
        return tag;
    }
    std::uint64_t read_u64() {
        if (!require(8)) return 0;
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v = (v << 8) | data_[pos_++];
        return v;
    }
    std::string read_string() {
        std::uint64_t len = read_u64();
        if (!require(len)) return {};
        std::string s(reinterpret_cast<const char*>(data_.data() + pos_), len);
        pos_ += len;
        return s;
    }
    Bytes read_bytes() {
        std::uint64_t len = read_u64();
        if (!require(len)) return {};
        Bytes b(data_.begin() + static_cast<std::ptrdiff_t>(pos_),
                data_.begin() + static_cast<std::ptrdiff_t>(pos_ + len));
        pos_ += len;
        return b;
    }

    [[nodiscard]] bool ok() const { return ok_; }
    [[nodiscard]] bool at_end() const { return ok_ && pos_ == data_.size(); }

private:
    bool require(std::uint64_t n) {
        if (!ok_ || data_.size() - pos_ < n) {
            ok_ = false;
            return false;
        }
        return true;
    }

    const Bytes& data_;
    std::size_t pos_ = 0;
    bool ok_ = true;
};

// ---------------------------------------------------------------------------
// name protocol

enum class NameKind : std::uint64_t { Request = 0, Reply = 1 };

struct NameRequest {
    std::string placeholder_name; // may be empty
    NodeId address = 0;
    Port port = 0;
};

struct NameReply {
    MemberName assigned_name;
    MemberName host_name; // strict prefix of assigned_name
};

inline Bytes encode(const NameRequest& m) {
    ByteWriter w;
    w.put_tag(kTagName);
    w.put_u64(static_cast<std::uint64_t>(NameKind::Request));
    w.put_string(m.placeholder_name);
    w.put_u64(m.address);
    w.put_u64(m.port);
    return w.take();
}

inline Bytes encode(const NameReply& m) {
    ByteWriter w;
    w.put_tag(kTagName);
    w.put_u64(static_cast<std::uint64_t>(NameKind::Reply));
    w.put_string(m.assigned_name.value);
    w.put_string(m.host_name.value);
    return w.take();
}

// ---------------------------------------------------------------------------
// ping protocol

struct PingMessage {
    MemberName sender_name;
    SeqNum member_seq; // sender's member-list seq at send time
    SeqNum hier_seq;   // sender's own hierarchy seq at send time
};

inline Bytes encode(const PingMessage& m) {
    ByteWriter w;
    w.put_tag(kTagPing);
    w.put_string(m.sender_name.value);
    w.put_u64(m.member_seq.value);
    w.put_u64(m.hier_seq.value);
    return w.take();
}

// ---------------------------------------------------------------------------
// sync protocol (members and hierarchy share the tag; a discriminator
// distinguishes the four payloads)

enum class SyncKind : std::uint64_t {
    MemberRequest = 0,
    MemberReply = 1,
    HierarchyRequest = 2,
    HierarchyReply = 3,
};

struct MemberSyncRequest {
    MemberName requester_name;
};

struct MemberEntryWire {
    MemberName name;
    NodeId address = 0;
    Port port = 0;
};

struct MemberSyncReply {
    MemberName provider_name;
    SeqNum provider_seq;
    std::vector<MemberEntryWire> members; // includes the provider itself
};

struct HierarchySyncRequest {
    MemberName requester_name;
};

struct HierarchySyncReply {
    MemberName provider_name;
    SeqNum provider_hier_seq;
    FolderNode owned_tree; // only provider-owned files and their paths
};

inline Bytes encode(const MemberSyncRequest& m) {
    ByteWriter w;
    w.put_tag(kTagSync);
    w.put_u64(static_cast<std::uint64_t>(SyncKind::MemberRequest));
    w.put_string(m.requester_name.value);
    return w.take();
}

inline Bytes encode(const MemberSyncReply& m) {
    ByteWriter w;
    w.put_tag(kTagSync);
    w.put_u64(static_cast<std::uint64_t>(SyncKind::MemberReply));
    w.put_string(m.provider_name.value);
    w.put_u64(m.provider_seq.value);
    w.put_u64(m.members.size());
    for (const auto& e : m.members) {
        w.put_string(e.name.value);
        w.put_u64(e.address);
        w.put_u64(e.port);
    }
    return w.take();
}

inline Bytes encode(const HierarchySyncRequest& m) {
    ByteWriter w;
    w.put_tag(kTagSync);
    w.put_u64(static_cast<std::uint64_t>(SyncKind::HierarchyRequest));
    w.put_string(m.requester_name.value);
    return w.take();
}

inline void encode_folder(ByteWriter& w, const FolderNode& folder) {
    w.put_string(folder.name);
    w.put_u64(folder.children.size());
    for (const auto& child : folder.children) {
        if (const auto* sub = std::get_if<FolderNode>(&child)) {
            w.put_u64(0);
            encode_folder(w, *sub);
        } else {
            const auto& file = std::get<FileEntry>(child);
            w.put_u64(1);
            w.put_string(file.logical_name);
            w.put_string(file.physical_name);
        }
    }
}

inline Bytes encode(const HierarchySyncReply& m) {
    ByteWriter w;
    w.put_tag(kTagSync);
    w.put_u64(static_cast<std::uint64_t>(SyncKind::HierarchyReply));
    w.put_string(m.provider_name.value);
    w.put_u64(m.provider_hier_seq.value);
    encode_folder(w, m.owned_tree);
    return w.take();
}

// Conflict flags and sync seqs are receiver-local: entries arrive clean and
// get stamped by the merge.
inline bool decode_folder(ByteReader& r, FolderNode& out, const MemberName& owner) {
    out.name = r.read_string();
    std::uint64_t count = r.read_u64();
    for (std::uint64_t i = 0; i < count && r.ok(); ++i) {
        std::uint64_t kind = r.read_u64();
        if (kind == 0) {
            FolderNode sub;
            if (!decode_folder(r, sub, owner)) return false;
            out.children.emplace_back(std::move(sub));
        } else if (kind == 1) {
            FileEntry file;
            file.logical_name = r.read_string();
            file.physical_name = r.read_string();
            file.owner = owner;
            out.children.emplace_back(std::move(file));
        } else {
            return false;
        }
    }
    return r.ok();
}

// ---------------------------------------------------------------------------
// mont protocol

enum class MontKind : std::uint64_t { Request = 0, Reply = 1 };

struct MontRequest {
    MemberName requester_name;
};

struct MontReply {
    bool granted = false;
};

inline Bytes encode(const MontRequest& m) {
    ByteWriter w;
    w.put_tag(kTagMont);
    w.put_u64(static_cast<std::uint64_t>(MontKind::Request));
    w.put_string(m.requester_name.value);
    return w.take();
}

inline Bytes encode(const MontReply& m) {
    ByteWriter w;
    w.put_tag(kTagMont);
    w.put_u64(static_cast<std::uint64_t>(MontKind::Reply));
    w.put_u64(m.granted ? 1 : 0);
    return w.take();
}

// ---------------------------------------------------------------------------
// freq protocol

enum class FileOp : std::uint64_t { Add = 0, Delete = 1, Rename = 2 };

enum class FileStatus : std::uint64_t {
    Ok = 0,
    NameConflict = 1,
    InvalidPath = 2,
    NotOwner = 3,
    NoMemory = 4,
    Timeout = 5,
};

inline std::string_view to_string(FileStatus s) {
    switch (s) {
        case FileStatus::Ok: return "ok";
        case FileStatus::NameConflict: return "name-conflict";
        case FileStatus::InvalidPath: return "invalid-path";
        case FileStatus::NotOwner: return "not-owner";
        case FileStatus::NoMemory: return "no-memory";
        case FileStatus::Timeout: return "timeout";
    }
    return "unknown";
}

struct FileRequest {
    FileOp op = FileOp::Add;
    std::string path;     // folder components plus the logical leaf name
    std::string new_name; // rename only
    MemberName requester;
};

struct FileResponse {
    FileStatus status = FileStatus::Ok;
};

inline Bytes encode(const FileRequest& m) {
    ByteWriter w;
    w.put_tag(kTagFreq);
    w.put_u64(static_cast<std::uint64_t>(m.op));
    w.put_string(m.path);
    w.put_string(m.new_name);
    w.put_string(m.requester.value);
    return w.take();
}

inline Bytes encode(const FileResponse& m) {
    ByteWriter w;
    w.put_tag(kTagFreq);
    w.put_u64(static_cast<std::uint64_t>(m.status));
    return w.take();
}

// ---------------------------------------------------------------------------
// data protocol (remote blob access; the data path never touches metadata)

enum class DataOp : std::uint64_t { Read = 0, Write = 1 };

enum class DataStatus : std::uint64_t {
    Ok = 0,
    NotGranted = 1,
    NotFound = 2,
    QuotaExceeded = 3,
};

inline std::string_view to_string(DataStatus s) {
    switch (s) {
        case DataStatus::Ok: return "ok";
        case DataStatus::NotGranted: return "not-granted";
        case DataStatus::NotFound: return "not-found";
        case DataStatus::QuotaExceeded: return "quota-exceeded";
    }
    return "unknown";
}

struct DataRequest {
    DataOp op = DataOp::Read;
    MemberName requester;
    std::string physical_name;
    Bytes content; // write only
};

struct DataResponse {
    DataStatus status = DataStatus::Ok;
    Bytes content; // read only
};

inline Bytes encode(const DataRequest& m) {
    ByteWriter w;
    w.put_tag(kTagData);
    w.put_u64(static_cast<std::uint64_t>(m.op));
    w.put_string(m.requester.value);
    w.put_string(m.physical_name);
    w.put_bytes(m.content);
    return w.take();
}

inline Bytes encode(const DataResponse& m) {
    ByteWriter w;
    w.put_tag(kTagData);
    w.put_u64(static_cast<std::uint64_t>(m.status));
    w.put_bytes(m.content);
    return w.take();
}

// ---------------------------------------------------------------------------
// Decoding

inline std::string peek_tag(const Bytes& payload) {
    if (payload.size() < kTagSize) return {};
    return std::string(reinterpret_cast<const char*>(payload.data()), kTagSize);
}

// The fault injector needs to tell sync replies from sync requests without
// a full decode.
inline bool is_sync_reply(const Bytes& payload) {
    if (peek_tag(payload) != kTagSync) return false;
    ByteReader r(payload);
    r.read_tag();
    auto kind = static_cast<SyncKind>(r.read_u64());
    return r.ok() && (kind == SyncKind::MemberReply || kind == SyncKind::HierarchyReply);
}

template <typename T>
std::optional<T> decode(const Bytes& payload);

template <>
inline std::optional<NameRequest> decode(const Bytes& payload) {
    ByteReader r(payload);
    if (r.read_tag() != kTagName) return std::nullopt;
    if (static_cast<NameKind>(r.read_u64()) != NameKind::Request) return std::nullopt;
    NameRequest m;
    m.placeholder_name = r.read_string();
    m.address = static_cast<NodeId>(r.read_u64());
    m.port = static_cast<Port>(r.read_u64());
    if (!r.at_end()) return std::nullopt;
    return m;
}

template <>
inline std::optional<NameReply> decode(const Bytes& payload) {
    ByteReader r(payload);
    if (r.read_tag() != kTagName) return std::nullopt;
    if (static_cast<NameKind>(r.read_u64()) != NameKind::Reply) return std::nullopt;
    NameReply m;
    m.assigned_name.value = r.read_string();
    m.host_name.value = r.read_string();
    if (!r.at_end()) return std::nullopt;
    return m;
}

inline std::optional<NameKind> peek_name_kind(const Bytes& payload) {
    ByteReader r(payload);
    if (r.read_tag() != kTagName) return std::nullopt;
    auto kind = static_cast<NameKind>(r.read_u64());
    if (!r.ok()) return std::nullopt;
    return kind;
}

template <>
inline std::optional<PingMessage> decode(const Bytes& payload) {
    ByteReader r(payload);
    if (r.read_tag() != kTagPing) return std::nullopt;
    PingMessage m;
    m.sender_name.value = r.read_string();
    m.member_seq.value = r.read_u64();
    m.hier_seq.value = r.read_u64();
    if (!r.at_end()) return std::nullopt;
    return m;
}

inline std::optional<SyncKind> peek_sync_kind(const Bytes& payload) {
    ByteReader r(payload);
    if (r.read_tag() != kTagSync) return std::nullopt;
    auto kind = static_cast<SyncKind>(r.read_u64());
    if (!r.ok() || kind > SyncKind::HierarchyReply) return std::nullopt;
    return kind;
}

template <>
inline std::optional<MemberSyncRequest> decode(const Bytes& payload) {
    ByteReader r(payload);
    if (r.read_tag() != kTagSync) return std::nullopt;
    if (static_cast<SyncKind>(r.read_u64()) != SyncKind::MemberRequest) return std::nullopt;
    MemberSyncRequest m;
    m.requester_name.value = r.read_string();
    if (!r.at_end()) return std::nullopt;
    return m;
}

template <>
inline std::optional<MemberSyncReply> decode(const Bytes& payload) {
    ByteReader r(payload);
    if (r.read_tag() != kTagSync) return std::nullopt;
    if (static_cast<SyncKind>(r.read_u64()) != SyncKind::MemberReply) return std::nullopt;
    MemberSyncReply m;
    m.provider_name.value = r.read_string();
    m.provider_seq.value = r.read_u64();
    std::uint64_t count = r.read_u64();
    for (std::uint64_t i = 0; i < count && r.ok(); ++i) {
        MemberEntryWire e;
        e.name.value = r.read_string();
        e.address = static_cast<NodeId>(r.read_u64());
        e.port = static_cast<Port>(r.read_u64());
        m.members.push_back(std::move(e));
    }
    if (!r.at_end()) return std::nullopt;
    return m;
}

template <>
inline std::optional<HierarchySyncRequest> decode(const Bytes& payload) {
    ByteReader r(payload);
    if (r.read_tag() != kTagSync) return std::nullopt;
    if (static_cast<SyncKind>(r.read_u64()) != SyncKind::HierarchyRequest) return std::nullopt;
    HierarchySyncRequest m;
    m.requester_name.value = r.read_string();
    if (!r.at_end()) return std::nullopt;
    return m;
}

template <>
inline std::optional<HierarchySyncReply> decode(const Bytes& payload) {
    ByteReader r(payload);
    if (r.read_tag() != kTagSync) return std::nullopt;
    if (static_cast<SyncKind>(r.read_u64()) != SyncKind::HierarchyReply) return std::nullopt;
    HierarchySyncReply m;
    m.provider_name.value = r.read_string();
    m.provider_hier_seq.value = r.read_u64();
    if (!decode_folder(r, m.owned_tree, m.provider_name)) return std::nullopt;
    if (!r.at_end()) return std::nullopt;
    return m;
}

template <>
inline std::optional<MontRequest> decode(const Bytes& payload) {
    ByteReader r(payload);
    if (r.read_tag() != kTagMont) return std::nullopt;
    if (static_cast<MontKind>(r.read_u64()) != MontKind::Request) return std::nullopt;
    MontRequest m;
    m.requester_name.value = r.read_string();
    if (!r.at_end()) return std::nullopt;
    return m;
}

template <>
inline std::optional<MontReply> decode(const Bytes& payload) {
    ByteReader r(payload);
    if (r.read_tag() != kTagMont) return std::nullopt;
    if (static_cast<MontKind>(r.read_u64()) != MontKind::Reply) return std::nullopt;
    MontReply m;
    m.granted = r.read_u64() == 1;
    if (!r.at_end()) return std::nullopt;
    return m;
}

template <>
inline std::optional<FileRequest> decode(const Bytes& payload) {
    ByteReader r(payload);
    if (r.read_tag() != kTagFreq) return std::nullopt;
    FileRequest m;
    auto op = r.read_u64();
    if (op > static_cast<std::uint64_t>(FileOp::Rename)) return std::nullopt;
    m.op = static_cast<FileOp>(op);
    m.path = r.read_string();
    m.new_name = r.read_string();
    m.requester.value = r.read_string();
    if (!r.at_end()) return std::nullopt;
    return m;
}

template <>
inline std::optional<FileResponse> decode(const Bytes& payload) {
    ByteReader r(payload);
    if (r.read_tag() != kTagFreq) return std::nullopt;
    FileResponse m;
    auto status = r.read_u64();
    if (status > static_cast<std::uint64_t>(FileStatus::Timeout)) return std::nullopt;
    m.status = static_cast<FileStatus>(status);
    if (!r.at_end()) return std::nullopt;
    return m;
}

template <>
inline std::optional<DataRequest> decode(const Bytes& payload) {
    ByteReader r(payload);
    if (r.read_tag() != kTagData) return std::nullopt;
    DataRequest m;
    auto op = r.read_u64();
    if (op > static_cast<std::uint64_t>(DataOp::Write)) return std::nullopt;
    m.op = static_cast<DataOp>(op);
    m.requester.value = r.read_string();
    m.physical_name = r.read_string();
    m.content = r.read_bytes();
    if (!r.at_end()) return std::nullopt;
    return m;
}

template <>
inline std::optional<DataResponse> decode(const Bytes& payload) {
    ByteReader r(payload);
    if (r.read_tag() != kTagData) return std::nullopt;
    DataResponse m;
    auto status = r.read_u64();
    if (status > static_cast<std::uint64_t>(DataStatus::QuotaExceeded)) return std::nullopt;
    m.status = static_cast<DataStatus>(status);
    m.content = r.read_bytes();
    if (!r.at_end()) return std::nullopt;
    return m;
}

} // namespace edgefs::wire
