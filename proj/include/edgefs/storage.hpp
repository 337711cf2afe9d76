#pragma once

// In-memory per-owner blob store standing in for the remote-access file
// management layer, plus the access-grant bookkeeping behind the mont
// handshake. Blob operations never touch metadata; writes replace content
// wholesale, so the last write to a blob is the one that remains.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>

#include "edgefs/metadata.hpp"
#include "edgefs/types.hpp"
#include "edgefs/wire.hpp"

namespace edgefs {

class BlobStore {
public:
    enum class Status {
        Ok,
        NotGranted,
        NotFound,
        QuotaExceeded,
        NoMemory,
    };

    void set_quota(std::uint64_t bytes) { quota_ = bytes; }
    [[nodiscard]] std::uint64_t total_bytes() const { return total_; }
    [[nodiscard]] std::size_t blob_count() const { return blobs_.size(); }
    [[nodiscard]] bool exists(const std::string& physical) const { return blobs_.contains(physical); }
    [[nodiscard]] const std::map<std::string, Bytes>& blobs() const { return blobs_; }

    // Creating an empty blob needs headroom: a store at or over quota takes
    // no new files.
    Status create(const std::string& physical) {
        if (blobs_.contains(physical)) return Status::Ok; // idempotent
        if (quota_ && total_ >= *quota_) return Status::NoMemory;
        blobs_[physical] = {};
        return Status::Ok;
    }

    // Idempotent: removing an absent blob is a no-op.
    void remove(const std::string& physical) {
        auto it = blobs_.find(physical);
        if (it == blobs_.end()) return;
        total_ -= it->second.size();
        blobs_.erase(it);
    }

    Status write(const std::string& physical, Bytes content) {
        auto it = blobs_.find(physical);
        if (it == blobs_.end()) return Status::NotFound;
        std::uint64_t next_total = total_ - it->second.size() + content.size();
        if (quota_ && next_total > *quota_) return Status::QuotaExceeded;
        total_ = next_total;
        it->second = std::move(content);
        return Status::Ok;
    }

    [[nodiscard]] std::pair<Status, Bytes> read(const std::string& physical) const {
        auto it = blobs_.find(physical);
        if (it == blobs_.end()) return {Status::NotFound, {}};
        return {Status::Ok, it->second};
    }

    // Access grants: monotone for the lifetime of the run.
    void grant(const MemberName& member) { granted_.insert(member); }
    [[nodiscard]] bool is_granted(const MemberName& member) const {
        return granted_.contains(member);
    }

    Status remote_write(const MemberName& requester, const std::string& physical, Bytes content) {
        if (!granted_.contains(requester)) return Status::NotGranted;
        return write(physical, std::move(content));
    }

    [[nodiscard]] std::pair<Status, Bytes> remote_read(const MemberName& requester,
                                                       const std::string& physical) const {
        if (!granted_.contains(requester)) return {Status::NotGranted, {}};
        return read(physical);
    }

private:
    std::map<std::string, Bytes> blobs_;
    std::optional<std::uint64_t> quota_;
    std::set<MemberName> granted_;
    std::uint64_t total_ = 0;
};

namespace storage {

// Grant requests from members we do not know are ignored outright: no reply
// is sent, the requester runs into its timeout.
inline std::optional<wire::MontReply> handle_mont_request(BlobStore& store,
                                                          const MemberList& members,
                                                          const wire::MontRequest& req) {
    if (members.find(req.requester_name) == nullptr) return std::nullopt;
    store.grant(req.requester_name);
    return wire::MontReply{true};
}

inline wire::DataStatus to_data_status(BlobStore::Status s) {
    switch (s) {
        case BlobStore::Status::Ok: return wire::DataStatus::Ok;
        case BlobStore::Status::NotGranted: return wire::DataStatus::NotGranted;
        case BlobStore::Status::NotFound: return wire::DataStatus::NotFound;
        case BlobStore::Status::QuotaExceeded:
        case BlobStore::Status::NoMemory: return wire::DataStatus::QuotaExceeded;
    }
    return wire::DataStatus::NotFound;
}

inline wire::DataResponse handle_data_request(BlobStore& store, const wire::DataRequest& req) {
    wire::DataResponse resp;
    if (req.op == wire::DataOp::Write) {
        resp.status = to_data_status(store.remote_write(req.requester, req.physical_name, req.content));
    } else {
        auto [status, content] = store.remote_read(req.requester, req.physical_name);
        resp.status = to_data_status(status);
        resp.content = std::move(content);
    }
    return resp;
}

} // namespace storage

} // namespace edgefs
