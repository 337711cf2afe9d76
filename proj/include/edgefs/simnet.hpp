#pragma once

// Deterministic discrete-event network: logical tick clock, per-message
// delays, fair loss, partitions, and a reliable request/response channel for
// the blocking protocols. The entire simulation output is a pure function of
// (scenario, seed); there is no wall time and no global clock visible to
// nodes.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "edgefs/types.hpp"
#include "edgefs/wire.hpp"

namespace edgefs {

struct NetConfig {
    Tick delay_min = 1; // delays are at least one tick
    Tick delay_max = 3;
    double loss_probability = 0.0; // datagram protocols only
    std::uint64_t seed = 1;
    std::uint32_t consecutive_loss_cap = 10; // fair loss, mechanically
    // Fault injection for idempotence checks: duplicated copies skip the
    // loss draw so a run differs from its baseline only by the duplicates.
    bool duplicate_freq_requests = false;
    bool duplicate_sync_replies = false;
};

struct Envelope {
    NodeId src = 0;
    NodeId dst = 0;
    std::string protocol_tag; // 4 characters, mirrors payload offset 0
    Bytes payload;
    Tick deliver_at = 0;
};

// Disjoint groups of nodes; messages never cross groups. Nodes not listed in
// any group form one implicit group of their own. Empty = fully connected.
class PartitionState {
public:
    void set(std::vector<std::vector<NodeId>> groups) { groups_ = std::move(groups); }
    void heal() { groups_.clear(); }
    [[nodiscard]] bool partitioned() const { return !groups_.empty(); }
    [[nodiscard]] const std::vector<std::vector<NodeId>>& groups() const { return groups_; }

    [[nodiscard]] std::size_t group_of(NodeId n) const {
        for (std::size_t i = 0; i < groups_.size(); ++i) {
            for (NodeId m : groups_[i]) {
                if (m == n) return i;
            }
        }
        return groups_.size(); // implicit group of unlisted nodes
    }

    [[nodiscard]] bool connected(NodeId a, NodeId b) const {
        if (groups_.empty() || a == b) return true;
        return group_of(a) == group_of(b);
    }

private:
    std::vector<std::vector<NodeId>> groups_;
};

// Events delivered to a node, one at a time.
struct TimerTick {
    Tick tick = 0;
};
struct DatagramEvent {
    Envelope env;
};
struct CallArrival { // reliable request at the callee
    std::uint64_t call_id = 0;
    Envelope env;
};
struct CallResult { // response or timeout at the caller
    std::uint64_t call_id = 0;
    bool timed_out = false;
    Envelope env; // payload empty when timed_out
};

using NetEvent = std::variant<TimerTick, DatagramEvent, CallArrival, CallResult>;

// Trace sink: tick, node, direction, tag, summary.
using TraceFn =
    std::function<void(Tick, NodeId, std::string_view, std::string_view, const std::string&)>;

class SimNet {
public:
    explicit SimNet(NetConfig cfg)
        : cfg_(cfg), loss_rng_(splitmix64(cfg.seed ^ 0x6c6f7373ull)) {
        if (cfg_.delay_min < 1) cfg_.delay_min = 1;
        if (cfg_.delay_max < cfg_.delay_min) cfg_.delay_max = cfg_.delay_min;
    }

    using Handler = std::function<void(const NetEvent&)>;

    void register_node(NodeId id, Handler handler) { nodes_[id] = std::move(handler); }

    [[nodiscard]] Tick now() const { return now_; }
    [[nodiscard]] const NetConfig& config() const { return cfg_; }
    [[nodiscard]] PartitionState& partition() { return partition_; }
    [[nodiscard]] const PartitionState& partition() const { return partition_; }

    void set_loss_probability(double p) { cfg_.loss_probability = p; }
    void duplicate_next_from(NodeId n) { dup_next_.insert(n); }

    TraceFn trace;

    // -----------------------------------------------------------------------
    // Datagram path: ping/sync/name. Fair loss; drops across partitions.

    void send_datagram(NodeId src, NodeId dst, const Bytes& payload) {
        const std::string tag = wire::peek_tag(payload);
        emit(src, "send", tag, "to=" + node_label(dst));
        bool duplicate = take_dup_flag(src) ||
                         (cfg_.duplicate_sync_replies && wire::is_sync_reply(payload));
        if (!partition_.connected(src, dst)) {
            emit(dst, "drop", tag, "partition from=" + node_label(src));
            return;
        }
        if (!survives_loss(src, dst, tag)) {
            emit(dst, "drop", tag, "loss from=" + node_label(src));
            if (!duplicate) return;
        } else {
            schedule(now_ + delay_for(src, dst), Delivery{DatagramItem{make_env(src, dst, tag, payload)}});
        }
        if (duplicate) {
            schedule(now_ + delay_for(src, dst) + 1,
                     Delivery{DatagramItem{make_env(src, dst, tag, payload)}});
        }
    }

    // -----------------------------------------------------------------------
    // Reliable channel: freq/mont/data. No loss; in-order per directed pair;
    // fails by timeout when a partition separates the endpoints.

    CallId reliable_request(NodeId src, NodeId dst, const Bytes& payload, Tick timeout) {
        const std::string tag = wire::peek_tag(payload);
        CallId id = next_call_id_++;
        calls_[id] = Call{src, dst, tag, true};
        emit(src, "send", tag, "call=" + std::to_string(id) + " to=" + node_label(dst));
        bool duplicate = take_dup_flag(src) ||
                         (cfg_.duplicate_freq_requests && tag == wire::kTagFreq);
        if (partition_.connected(src, dst)) {
            Tick at = fifo_clamp(src, dst, now_ + delay_for(src, dst));
            schedule(at, Delivery{CallArrivalItem{id, make_env(src, dst, tag, payload)}});
            if (duplicate) {
                Tick dup_at = fifo_clamp(src, dst, at + 1);
                schedule(dup_at, Delivery{CallArrivalItem{id, make_env(src, dst, tag, payload)}});
            }
        } else {
            emit(dst, "drop", tag, "partition call=" + std::to_string(id));
        }
        schedule(now_ + timeout, Delivery{CallTimeoutItem{id}});
        return id;
    }

    // Called by the callee while handling a CallArrival. Silence (never
    // calling this) leaves the caller to its timeout.
    void reliable_reply(CallId id, const Bytes& payload) {
        auto it = calls_.find(id);
        if (it == calls_.end()) return;
        const Call& call = it->second;
        const std::string tag = wire::peek_tag(payload);
        emit(call.dst, "send", tag, "reply call=" + std::to_string(id) + " to=" + node_label(call.src));
        if (!partition_.connected(call.dst, call.src)) {
            emit(call.src, "drop", tag, "partition call=" + std::to_string(id));
            return;
        }
        Tick at = fifo_clamp(call.dst, call.src, now_ + delay_for(call.dst, call.src));
        schedule(at, Delivery{CallResponseItem{id, make_env(call.dst, call.src, tag, payload)}});
    }

    // -----------------------------------------------------------------------
    // Clock

    // One tick: deliver everything due, then fire node timers in id order.
    void step_tick() {
        ++now_;
        if (auto it = queue_.find(now_); it != queue_.end()) {
            std::vector<Delivery> due = std::move(it->second);
            queue_.erase(it);
            for (auto& d : due) dispatch(d);
        }
        for (auto& [id, handler] : nodes_) {
            handler(TimerTick{now_});
        }
    }

    void run_until(Tick tick) {
        while (now_ < tick) step_tick();
    }

    [[nodiscard]] std::uint64_t delivered_count() const { return delivered_; }

    // Names nodes in trace output; defaults to the numeric id.
    std::function<std::string(NodeId)> node_label = [](NodeId n) { return std::to_string(n); };

private:
    struct DatagramItem {
        Envelope env;
    };
    struct CallArrivalItem {
        CallId id;
        Envelope env;
    };
    struct CallResponseItem {
        CallId id;
        Envelope env;
    };
    struct CallTimeoutItem {
        CallId id;
    };
    using Delivery = std::variant<DatagramItem, CallArrivalItem, CallResponseItem, CallTimeoutItem>;

    struct Call {
        NodeId src = 0;
        NodeId dst = 0;
        std::string tag;
        bool pending = false;
    };

    Envelope make_env(NodeId src, NodeId dst, const std::string& tag, const Bytes& payload) {
        return Envelope{src, dst, tag, payload, 0};
    }

    void schedule(Tick at, Delivery d) { queue_[at].push_back(std::move(d)); }

    Tick delay_for(NodeId src, NodeId dst, Tick at_tick = 0) {
        if (at_tick == 0) at_tick = now_;
        std::uint64_t h = splitmix64(cfg_.seed ^ splitmix64((std::uint64_t(src) << 32) ^ dst) ^
                                     splitmix64(at_tick));
        return cfg_.delay_min + h % (cfg_.delay_max - cfg_.delay_min + 1);
    }

    // Reliable deliveries per directed pair never reorder.
    Tick fifo_clamp(NodeId src, NodeId dst, Tick candidate) {
        Tick& last = last_reliable_[{src, dst}];
        if (candidate < last) candidate = last;
        last = candidate;
        return candidate;
    }

    bool take_dup_flag(NodeId src) {
        auto it = dup_next_.find(src);
        if (it == dup_next_.end()) return false;
        dup_next_.erase(it);
        return true;
    }

    // Fair loss: at most consecutive_loss_cap losses in a row per
    // (src, dst, tag); the next send is then delivered. Partition drops do
    // not touch the streak, a partitioned link is not lossy but severed.
    bool survives_loss(NodeId src, NodeId dst, const std::string& tag) {
        if (cfg_.loss_probability <= 0.0) return true;
        auto key = std::make_tuple(src, dst, tag);
        std::uint32_t& streak = loss_streak_[key];
        double draw = double(loss_rng_() >> 11) * 0x1.0p-53;
        if (draw < cfg_.loss_probability && streak < cfg_.consecutive_loss_cap) {
            ++streak;
            return false;
        }
        streak = 0;
        return true;
    }

    void dispatch(Delivery& d) {
        if (auto* dg = std::get_if<DatagramItem>(&d)) {
            if (!partition_.connected(dg->env.src, dg->env.dst)) {
                emit(dg->env.dst, "drop", dg->env.protocol_tag,
                     "partition from=" + node_label(dg->env.src));
                return;
            }
            deliver(dg->env.dst, dg->env, DatagramEvent{std::move(dg->env)});
        } else if (auto* ca = std::get_if<CallArrivalItem>(&d)) {
            if (!partition_.connected(ca->env.src, ca->env.dst)) {
                emit(ca->env.dst, "drop", ca->env.protocol_tag,
                     "partition call=" + std::to_string(ca->id));
                return;
            }
            deliver(ca->env.dst, ca->env, CallArrival{ca->id, std::move(ca->env)});
        } else if (auto* cr = std::get_if<CallResponseItem>(&d)) {
            auto it = calls_.find(cr->id);
            if (it == calls_.end() || !it->second.pending) return; // late response
            if (!partition_.connected(cr->env.src, cr->env.dst)) {
                emit(cr->env.dst, "drop", cr->env.protocol_tag,
                     "partition call=" + std::to_string(cr->id));
                return;
            }
            it->second.pending = false;
            deliver(cr->env.dst, cr->env, CallResult{cr->id, false, std::move(cr->env)});
        } else if (auto* ct = std::get_if<CallTimeoutItem>(&d)) {
            auto it = calls_.find(ct->id);
            if (it == calls_.end() || !it->second.pending) return;
            it->second.pending = false;
            emit(it->second.src, "recv", it->second.tag,
                 "timeout call=" + std::to_string(ct->id));
            if (auto node = nodes_.find(it->second.src); node != nodes_.end()) {
                node->second(CallResult{ct->id, true, Envelope{}});
            }
        }
    }

    template <typename Event>
    void deliver(NodeId dst, const Envelope& env, Event&& ev) {
        emit(dst, "recv", env.protocol_tag, "from=" + node_label(env.src));
        ++delivered_;
        if (auto it = nodes_.find(dst); it != nodes_.end()) {
            it->second(NetEvent{std::forward<Event>(ev)});
        }
    }

    void emit(NodeId node, std::string_view dir, std::string_view tag, const std::string& summary) {
        if (trace) trace(now_, node, dir, tag.empty() ? "????" : tag, summary);
    }

    NetConfig cfg_;
    Tick now_ = 0;
    std::map<NodeId, Handler> nodes_;
    std::map<Tick, std::vector<Delivery>> queue_;
    PartitionState partition_;
    std::mt19937_64 loss_rng_;
    std::map<std::tuple<NodeId, NodeId, std::string>, std::uint32_t> loss_streak_;
    std::map<std::pair<NodeId, NodeId>, Tick> last_reliable_;
    std::map<CallId, Call> calls_;
    std::set<NodeId> dup_next_;
    CallId next_call_id_ = 1;
    std::uint64_t delivered_ = 0;
};

} // namespace edgefs
