#pragma once

// The per-member state machine: one event interface over all protocol
// handlers. Exactly one handler runs per event, so observable state between
// events is always a consistent snapshot; discarding a node's inbox at any
// instant leaves its invariants intact.

#include <functional>
#include <optional>
#include <string>
#include <string_view>

#include "edgefs/fileops.hpp"
#include "edgefs/hierarchy_sync.hpp"
#include "edgefs/membership.hpp"
#include "edgefs/node_state.hpp"
#include "edgefs/reachability.hpp"
#include "edgefs/simnet.hpp"
#include "edgefs/storage.hpp"
#include "edgefs/wire.hpp"

namespace edgefs {

class Node {
public:
    Node(SimNet& net, NodeId address, Port port, ReachabilityConfig cfg, std::uint64_t rng_seed)
        : net_(net) {
        st_.address = address;
        st_.port = port;
        st_.config = cfg;
        st_.rng.seed(splitmix64(rng_seed ^ splitmix64(address)));
        net_.register_node(address, [this](const NetEvent& ev) { handle(ev); });
    }

    Node(const Node&) = delete;
    Node& operator=(const Node&) = delete;

    [[nodiscard]] NodeState& state() { return st_; }
    [[nodiscard]] const NodeState& state() const { return st_; }

    // Completion of a locally submitted operation (after any blocking call).
    std::function<void(const LocalOp&, std::string_view, const Bytes&)> on_op_complete;
    // Node-level trace notes: (direction, tag, summary).
    std::function<void(std::string_view, std::string_view, const std::string&)> on_trace;

    // The first member of a scenario names itself; everyone else joins.
    void bootstrap(const std::string& name, Tick tick) {
        st_.now = tick;
        st_.name = MemberName{name};
        st_.named_tick = tick;
        st_.members.add(MemberRecord{.name = st_.self(),
                                     .address = st_.address,
                                     .port = st_.port,
                                     .last_ping_tick = tick});
        note("name", "bootstrap=" + name);
    }

    // Sends the name request now and re-sends it every ping period until a
    // reply makes it through; joining is idempotent at the host.
    void begin_join(NodeId host_address, Port host_port, Tick tick) {
        if (st_.named()) return;
        st_.now = tick;
        st_.join_host = host_address;
        join_host_port_ = host_port;
        join_started_ = tick;
        send_name_request();
    }

    void submit(LocalOp op) {
        op.op_id = ++op_counter_;
        st_.op_queue.push_back(std::move(op));
        pump();
    }

    void handle(const NetEvent& ev) {
        st_.now = net_.now();
        if (const auto* tick = std::get_if<TimerTick>(&ev)) {
            on_tick(tick->tick);
        } else if (const auto* dg = std::get_if<DatagramEvent>(&ev)) {
            on_datagram(dg->env);
        } else if (const auto* call = std::get_if<CallArrival>(&ev)) {
            on_call_arrival(call->call_id, call->env);
        } else if (const auto* result = std::get_if<CallResult>(&ev)) {
            on_call_result(*result);
        }
    }

private:
    // -----------------------------------------------------------------------
    // Timers

    void on_tick(Tick tick) {
        if (!st_.named()) {
            if (st_.join_host && tick > join_started_ &&
                (tick - join_started_) % st_.config.ping_period == 0) {
                send_name_request();
            }
            return;
        }
        if (reachability::at_period_boundary(st_, tick)) {
            for (const auto& send : reachability::on_ping_timer(st_)) {
                send_datagram(send.dst, wire::encode(send.msg));
            }
            for (const auto& name : reachability::on_period_elapsed(st_, tick)) {
                note("reach", "unreachable member=" + name.value);
            }
        }
    }

    // -----------------------------------------------------------------------
    // Datagrams

    void on_datagram(const Envelope& env) {
        const std::string tag = wire::peek_tag(env.payload);
        ++st_.stats.recv_by_tag[tag];
        if (tag == wire::kTagName) {
            on_name(env);
        } else if (tag == wire::kTagPing) {
            on_ping(env);
        } else if (tag == wire::kTagSync) {
            on_sync(env);
        } else {
            ++st_.stats.unknown_tag_drops;
        }
    }

    void on_name(const Envelope& env) {
        auto kind = wire::peek_name_kind(env.payload);
        if (!kind) {
            ++st_.stats.unknown_tag_drops;
            return;
        }
        if (*kind == wire::NameKind::Request) {
            auto req = wire::decode<wire::NameRequest>(env.payload);
            if (!req) return;
            if (auto reply = membership::handle_name_request(st_, *req)) {
                note("name", "assigned=" + reply->assigned_name.value);
                send_datagram(req->address, wire::encode(*reply));
            }
            return;
        }
        auto rep = wire::decode<wire::NameReply>(env.payload);
        if (!rep) return;
        Port host_port = st_.join_host && *st_.join_host == env.src ? join_host_port_ : 0;
        if (membership::handle_name_reply(st_, *rep, env.src, host_port, st_.now)) {
            note("name", "adopted=" + rep->assigned_name.value + " host=" + rep->host_name.value);
        }
    }

    void on_ping(const Envelope& env) {
        auto msg = wire::decode<wire::PingMessage>(env.payload);
        if (!msg) return;
        auto reaction = reachability::on_ping_received(st_, *msg, st_.now);
        if (!reaction.known_sender) return;
        if (reaction.became_reachable) {
            note("reach", "reachable member=" + msg->sender_name.value);
        }
        if (reaction.want_member_sync) {
            send_datagram(reaction.sender_address,
                          wire::encode(wire::MemberSyncRequest{st_.self()}));
        }
        if (reaction.want_hierarchy_sync) {
            send_datagram(reaction.sender_address,
                          wire::encode(wire::HierarchySyncRequest{st_.self()}));
        }
    }

    void on_sync(const Envelope& env) {
        auto kind = wire::peek_sync_kind(env.payload);
        if (!kind) {
            ++st_.stats.unknown_tag_drops;
            return;
        }
        switch (*kind) {
            case wire::SyncKind::MemberRequest: {
                auto req = wire::decode<wire::MemberSyncRequest>(env.payload);
                if (!req) return;
                if (auto reply = membership::handle_member_sync_request(st_, *req)) {
                    send_datagram(env.src, wire::encode(*reply));
                }
                return;
            }
            case wire::SyncKind::MemberReply: {
                auto rep = wire::decode<wire::MemberSyncReply>(env.payload);
                if (!rep || !st_.named()) return;
                if (membership::merge_member_list(st_, *rep)) {
                    note("sync", "members merged from=" + rep->provider_name.value +
                                     " seq=" + std::to_string(st_.members.seq().value));
                }
                return;
            }
            case wire::SyncKind::HierarchyRequest: {
                auto req = wire::decode<wire::HierarchySyncRequest>(env.payload);
                if (!req) return;
                if (auto reply = hierarchy_sync::handle_request(st_, *req)) {
                    send_datagram(env.src, wire::encode(*reply));
                }
                return;
            }
            case wire::SyncKind::HierarchyReply: {
                auto rep = wire::decode<wire::HierarchySyncReply>(env.payload);
                if (!rep) return;
                if (hierarchy_sync::apply_hierarchy_sync(st_, *rep)) {
                    note("sync", "hierarchy applied from=" + rep->provider_name.value +
                                     " seq=" + std::to_string(rep->provider_hier_seq.value));
                }
                return;
            }
        }
    }

    // -----------------------------------------------------------------------
    // Reliable channel (freq, mont, data)

    void on_call_arrival(CallId id, const Envelope& env) {
        const std::string tag = wire::peek_tag(env.payload);
        ++st_.stats.recv_by_tag[tag];
        if (tag == wire::kTagFreq) {
            auto req = wire::decode<wire::FileRequest>(env.payload);
            if (!req) return;
            wire::FileResponse resp = fileops::handle_file_request(st_, *req);
            reply(id, wire::encode(resp));
        } else if (tag == wire::kTagMont) {
            auto req = wire::decode<wire::MontRequest>(env.payload);
            if (!req) return;
            if (auto rep = storage::handle_mont_request(st_.store, st_.members, *req)) {
                reply(id, wire::encode(*rep));
            }
            // unknown requester: silence, the caller times out
        } else if (tag == wire::kTagData) {
            auto req = wire::decode<wire::DataRequest>(env.payload);
            if (!req) return;
            reply(id, wire::encode(storage::handle_data_request(st_.store, *req)));
        } else {
            ++st_.stats.unknown_tag_drops;
        }
    }

    void on_call_result(const CallResult& result) {
        if (!st_.pending || st_.pending->call != result.call_id) return;
        PendingCall pending = std::move(*st_.pending);
        st_.pending.reset();

        if (result.timed_out) {
            finish(pending.op, fileops::kTimeout, {});
            pump();
            return;
        }
        ++st_.stats.recv_by_tag[result.env.protocol_tag];

        switch (pending.phase) {
            case PendingCall::Phase::Freq: {
                auto resp = wire::decode<wire::FileResponse>(result.env.payload);
                finish(pending.op,
                       resp ? fileops::status_code(resp->status) : fileops::kInvalidPath, {});
                break;
            }
            case PendingCall::Phase::Mont: {
                auto resp = wire::decode<wire::MontReply>(result.env.payload);
                if (!resp || !resp->granted) {
                    finish(pending.op, fileops::kNotGranted, {});
                    break;
                }
                st_.mounts.insert(pending.target_owner);
                note("mont", "granted by=" + pending.target_owner.value);
                wire::DataRequest data;
                data.op = pending.op.kind == LocalOp::Kind::Write ? wire::DataOp::Write
                                                                  : wire::DataOp::Read;
                data.requester = st_.self();
                data.physical_name = pending.physical_name;
                data.content = pending.op.content;
                issue_call(PendingCall::Phase::Data, pending.op, pending.target_owner,
                           pending.physical_name, result.env.src, wire::encode(data));
                return; // still blocked on the data phase
            }
            case PendingCall::Phase::Data: {
                auto resp = wire::decode<wire::DataResponse>(result.env.payload);
                if (!resp) {
                    finish(pending.op, fileops::kNotFound, {});
                    break;
                }
                finish(pending.op, fileops::status_code(resp->status), resp->content);
                break;
            }
        }
        pump();
    }

    // -----------------------------------------------------------------------
    // Local operation queue: FIFO, one blocking call outstanding at a time.

    void pump() {
        while (!st_.pending && !st_.op_queue.empty()) {
            LocalOp op = std::move(st_.op_queue.front());
            st_.op_queue.pop_front();
            fileops::StartResult r = fileops::start_op(st_, op);
            if (r.done) {
                finish(op, r.outcome, {});
                continue;
            }
            issue_call(r.phase, op, r.owner, r.physical_name, r.dst, r.payload);
        }
    }

    void issue_call(PendingCall::Phase phase, const LocalOp& op, const MemberName& owner,
                    const std::string& physical, NodeId dst, const Bytes& payload) {
        ++st_.stats.sent_by_tag[wire::peek_tag(payload)];
        CallId id = net_.reliable_request(st_.address, dst, payload, st_.freq_timeout());
        st_.pending = PendingCall{id, phase, op, owner, physical};
    }

    void finish(const LocalOp& op, std::string_view outcome, const Bytes& content) {
        if (outcome == fileops::kOk) {
            ++st_.stats.ops_completed;
        } else {
            ++st_.stats.ops_failed;
        }
        note("oper", describe(op) + " -> " + std::string(outcome));
        if (on_op_complete) on_op_complete(op, outcome, content);
    }

    static std::string describe(const LocalOp& op) {
        switch (op.kind) {
            case LocalOp::Kind::Create: return "create " + op.path;
            case LocalOp::Kind::Delete: return "delete " + op.path;
            case LocalOp::Kind::Rename: return "rename " + op.path + " " + op.new_name;
            case LocalOp::Kind::Write: return "write " + op.path;
            case LocalOp::Kind::Read: return "read " + op.path;
        }
        return "op";
    }

    // -----------------------------------------------------------------------
    // Sending

    void send_name_request() {
        if (!st_.join_host) return;
        wire::NameRequest req{"", st_.address, st_.port};
        ++st_.stats.sent_by_tag[std::string(wire::kTagName)];
        net_.send_datagram(st_.address, *st_.join_host, wire::encode(req));
    }

    void send_datagram(NodeId dst, const Bytes& payload) {
        ++st_.stats.sent_by_tag[wire::peek_tag(payload)];
        net_.send_datagram(st_.address, dst, payload);
    }

    void reply(CallId id, const Bytes& payload) {
        ++st_.stats.sent_by_tag[wire::peek_tag(payload)];
        net_.reliable_reply(id, payload);
    }

    void note(std::string_view tag, const std::string& summary) {
        if (on_trace) on_trace("note", tag, summary);
    }

    SimNet& net_;
    NodeState st_;
    Port join_host_port_ = 0;
    Tick join_started_ = 0;
    std::uint64_t op_counter_ = 0;
};

} // namespace edgefs
