#include <catch2/catch_amalgamated.hpp>

#include <string>
#include <vector>

#include "edgefs/simnet.hpp"
#include "edgefs/wire.hpp"

using namespace edgefs;

namespace {

Bytes ping_payload(const std::string& sender) {
    return wire::encode(wire::PingMessage{MemberName{sender}, SeqNum{1}, SeqNum{1}});
}

struct Recorder {
    std::vector<std::string> events;

    SimNet::Handler handler(SimNet& net, const std::string& label) {
        return [this, &net, label](const NetEvent& ev) {
            if (const auto* dg = std::get_if<DatagramEvent>(&ev)) {
                events.push_back(std::to_string(net.now()) + " " + label + " dg from=" +
                                 std::to_string(dg->env.src));
            } else if (const auto* call = std::get_if<CallArrival>(&ev)) {
                events.push_back(std::to_string(net.now()) + " " + label + " call " +
                                 std::to_string(call->call_id));
                net.reliable_reply(call->call_id, wire::encode(wire::FileResponse{}));
            } else if (const auto* res = std::get_if<CallResult>(&ev)) {
                events.push_back(std::to_string(net.now()) + " " + label + " result " +
                                 std::to_string(res->call_id) +
                                 (res->timed_out ? " timeout" : " ok"));
            }
        };
    }
};

} // namespace

TEST_CASE("lossless datagrams are delivered exactly once within the delay window", "[simnet]") {
    NetConfig cfg;
    cfg.loss_probability = 0.0;
    cfg.delay_min = 1;
    cfg.delay_max = 3;
    SimNet net(cfg);
    Recorder rec;
    net.register_node(2, rec.handler(net, "b"));

    for (int i = 0; i < 10; ++i) net.send_datagram(1, 2, ping_payload("A"));
    net.run_until(5);
    CHECK(rec.events.size() == 10);
    CHECK(net.delivered_count() == 10);
}

TEST_CASE("no delivery across partitions, ever", "[simnet]") {
    SimNet net(NetConfig{});
    Recorder rec;
    net.register_node(2, rec.handler(net, "b"));
    net.partition().set({{1}, {2}});

    net.send_datagram(1, 2, ping_payload("A"));
    net.run_until(10);
    CHECK(rec.events.empty());

    // a partition raised mid-flight also kills the message
    net.partition().heal();
    net.send_datagram(1, 2, ping_payload("A"));
    net.partition().set({{1}, {2}});
    net.run_until(20);
    CHECK(rec.events.empty());
}

TEST_CASE("implicit group: unlisted nodes are separated from listed ones", "[simnet]") {
    SimNet net(NetConfig{});
    CHECK(net.partition().connected(1, 7));
    net.partition().set({{1, 2}});
    CHECK(net.partition().connected(1, 2));
    CHECK_FALSE(net.partition().connected(1, 7));
    CHECK(net.partition().connected(7, 9)); // both unlisted
}

TEST_CASE("consecutive losses are capped per (src, dst, tag)", "[simnet]") {
    NetConfig cfg;
    cfg.loss_probability = 0.9999; // every draw loses; only the cap delivers
    cfg.consecutive_loss_cap = 3;
    cfg.delay_min = cfg.delay_max = 1;
    SimNet net(cfg);
    Recorder rec;
    net.register_node(2, rec.handler(net, "b"));

    for (int i = 0; i < 16; ++i) {
        net.send_datagram(1, 2, ping_payload("A"));
        net.step_tick();
    }
    net.run_until(20);
    // pattern: 3 lost, 4th delivered, repeating
    CHECK(rec.events.size() == 4);
}

TEST_CASE("identical seeds give identical delivery schedules", "[simnet]") {
    auto run = [](std::uint64_t seed) {
        NetConfig cfg;
        cfg.loss_probability = 0.4;
        cfg.seed = seed;
        SimNet net(cfg);
        Recorder rec;
        net.register_node(2, rec.handler(net, "b"));
        for (int i = 0; i < 30; ++i) {
            net.send_datagram(1, 2, ping_payload("A"));
            net.step_tick();
        }
        net.run_until(40);
        return rec.events;
    };
    CHECK(run(11) == run(11));
    CHECK(run(11) != run(12)); // different seed shifts something
}

TEST_CASE("reliable calls complete in order and survive loss settings", "[simnet]") {
    NetConfig cfg;
    cfg.loss_probability = 0.9; // loss applies to datagrams only
    cfg.delay_min = 1;
    cfg.delay_max = 4;
    SimNet net(cfg);
    Recorder caller, callee;
    net.register_node(1, caller.handler(net, "a"));
    net.register_node(2, callee.handler(net, "b"));

    CallId c1 = net.reliable_request(1, 2, wire::encode(wire::FileRequest{}), 50);
    CallId c2 = net.reliable_request(1, 2, wire::encode(wire::FileRequest{}), 50);
    net.run_until(30);

    REQUIRE(callee.events.size() == 2);
    CHECK(callee.events[0].ends_with("call " + std::to_string(c1)));
    CHECK(callee.events[1].ends_with("call " + std::to_string(c2)));
    REQUIRE(caller.events.size() == 2);
    CHECK(caller.events[0].ends_with(std::to_string(c1) + " ok"));
    CHECK(caller.events[1].ends_with(std::to_string(c2) + " ok"));
}

TEST_CASE("a partition turns reliable calls into timeouts", "[simnet]") {
    SimNet net(NetConfig{});
    Recorder caller, callee;
    net.register_node(1, caller.handler(net, "a"));
    net.register_node(2, callee.handler(net, "b"));

    net.partition().set({{1}, {2}});
    net.reliable_request(1, 2, wire::encode(wire::FileRequest{}), 20);
    net.run_until(30);

    CHECK(callee.events.empty());
    REQUIRE(caller.events.size() == 1);
    CHECK(caller.events[0] == "20 a result 1 timeout");
}

TEST_CASE("a partition striking before the response leaves the caller to time out", "[simnet]") {
    NetConfig cfg;
    cfg.delay_min = cfg.delay_max = 5;
    SimNet net(cfg);
    Recorder caller, callee;
    net.register_node(1, caller.handler(net, "a"));
    net.register_node(2, callee.handler(net, "b"));

    net.reliable_request(1, 2, wire::encode(wire::FileRequest{}), 40);
    net.run_until(6); // request arrived, response in flight
    REQUIRE(callee.events.size() == 1);
    net.partition().set({{1}, {2}});
    net.run_until(50);
    REQUIRE(caller.events.size() == 1);
    CHECK(caller.events[0].ends_with("timeout"));
}

TEST_CASE("duplicate-next fault delivers the next datagram twice", "[simnet]") {
    SimNet net(NetConfig{});
    Recorder rec;
    net.register_node(2, rec.handler(net, "b"));

    net.duplicate_next_from(1);
    net.send_datagram(1, 2, ping_payload("A"));
    net.send_datagram(1, 2, ping_payload("A"));
    net.run_until(10);
    CHECK(rec.events.size() == 3); // first duplicated, second not
}

TEST_CASE("late responses after a timeout are dropped", "[simnet]") {
    NetConfig cfg;
    cfg.delay_min = cfg.delay_max = 8;
    SimNet net(cfg);
    Recorder caller, callee;
    net.register_node(1, caller.handler(net, "a"));
    net.register_node(2, callee.handler(net, "b"));

    net.reliable_request(1, 2, wire::encode(wire::FileRequest{}), 10);
    net.run_until(40);
    // arrival at 8, response would land at 16, timeout at 10
    REQUIRE(callee.events.size() == 1);
    REQUIRE(caller.events.size() == 1);
    CHECK(caller.events[0] == "10 a result 1 timeout");
}
