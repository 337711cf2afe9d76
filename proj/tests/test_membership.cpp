#include <catch2/catch_amalgamated.hpp>

#include <algorithm>

#include "edgefs/checker.hpp"
#include "edgefs/membership.hpp"

using namespace edgefs;

namespace {

NodeState make_named(const std::string& name, NodeId address) {
    NodeState st;
    st.address = address;
    st.port = Port(7000 + address);
    st.name = MemberName{name};
    st.members.add(MemberRecord{.name = MemberName{name}, .address = address, .port = st.port});
    return st;
}

} // namespace

TEST_CASE("hosts assign suffixed names and append the newcomer", "[membership]") {
    NodeState host = make_named("A", 1);
    auto reply = membership::handle_name_request(host, wire::NameRequest{"", 2, 7002});
    REQUIRE(reply.has_value());
    CHECK(reply->assigned_name == MemberName{"A/1"});
    CHECK(reply->host_name == MemberName{"A"});
    CHECK(reply->host_name.is_strict_prefix_of(reply->assigned_name));
    CHECK(host.members.seq() == SeqNum{2});
    REQUIRE(host.members.find(MemberName{"A/1"}) != nullptr);
    CHECK(host.members.find(MemberName{"A/1"})->address == 2);
}

TEST_CASE("a named member can host in turn", "[membership]") {
    NodeState host = make_named("A/1", 2);
    auto reply = membership::handle_name_request(host, wire::NameRequest{"", 3, 7003});
    REQUIRE(reply.has_value());
    CHECK(reply->assigned_name == MemberName{"A/1/1"});
}

TEST_CASE("concurrent newcomers never collide; retries get the same name", "[membership]") {
    NodeState host = make_named("A", 1);
    auto r1 = membership::handle_name_request(host, wire::NameRequest{"", 2, 7002});
    auto r2 = membership::handle_name_request(host, wire::NameRequest{"", 3, 7003});
    REQUIRE(r1.has_value());
    REQUIRE(r2.has_value());
    CHECK(r1->assigned_name == MemberName{"A/1"});
    CHECK(r2->assigned_name == MemberName{"A/2"});
    CHECK(r1->assigned_name != r2->assigned_name);

    // a lost reply leads to a retry; the host must not mint a second identity
    auto retry = membership::handle_name_request(host, wire::NameRequest{"", 2, 7002});
    REQUIRE(retry.has_value());
    CHECK(retry->assigned_name == MemberName{"A/1"});
    CHECK(host.members.seq() == SeqNum{3});
}

TEST_CASE("an unnamed host cannot serve name requests", "[membership]") {
    NodeState st;
    st.address = 5;
    CHECK_FALSE(membership::handle_name_request(st, wire::NameRequest{"", 2, 7002}).has_value());
}

TEST_CASE("the newcomer adopts its name and both members know each other", "[membership]") {
    NodeState node;
    node.address = 2;
    node.port = 7002;
    REQUIRE(membership::handle_name_reply(node, wire::NameReply{MemberName{"A/1"}, MemberName{"A"}},
                                          1, 7001, 10));
    REQUIRE(node.named());
    CHECK(node.self() == MemberName{"A/1"});
    CHECK(node.named_tick == 10);
    CHECK(node.members.size() == 2);
    CHECK(node.members.find(MemberName{"A"}) != nullptr);
    CHECK(node.members.find(MemberName{"A/1"}) != nullptr);

    // duplicate delivery: ignored, state unchanged
    CHECK_FALSE(membership::handle_name_reply(
        node, wire::NameReply{MemberName{"A/2"}, MemberName{"A"}}, 1, 7001, 12));
    CHECK(node.self() == MemberName{"A/1"});
    CHECK(node.members.size() == 2);
}

TEST_CASE("a reply without the prefix property is accepted but counted", "[membership]") {
    NodeState node;
    node.address = 2;
    REQUIRE(membership::handle_name_reply(node, wire::NameReply{MemberName{"B/9"}, MemberName{"A"}},
                                          1, 7001, 10));
    CHECK(node.self() == MemberName{"B/9"});
    CHECK(node.stats.anomalies == 1);
}

TEST_CASE("member sync replies report the full list and ignore strangers", "[membership]") {
    NodeState provider = make_named("A", 1);
    membership::handle_name_request(provider, wire::NameRequest{"", 2, 7002});
    membership::handle_name_request(provider, wire::NameRequest{"", 3, 7003});
    REQUIRE(provider.members.seq() == SeqNum{3});

    auto reply =
        membership::handle_member_sync_request(provider, wire::MemberSyncRequest{MemberName{"A/1"}});
    REQUIRE(reply.has_value());
    CHECK(reply->provider_name == MemberName{"A"});
    CHECK(reply->provider_seq == SeqNum{3});
    CHECK(reply->members.size() == 3);
    const bool has_self = std::any_of(reply->members.begin(), reply->members.end(),
                                      [](const auto& e) { return e.name == MemberName{"A"}; });
    CHECK(has_self);

    CHECK_FALSE(membership::handle_member_sync_request(provider,
                                                       wire::MemberSyncRequest{MemberName{"X"}})
                    .has_value());

    // pure read: repeated requests give identical replies
    auto again =
        membership::handle_member_sync_request(provider, wire::MemberSyncRequest{MemberName{"A/1"}});
    REQUIRE(again.has_value());
    CHECK(again->provider_seq == reply->provider_seq);
    CHECK(again->members.size() == reply->members.size());
}

TEST_CASE("merging a larger list adds the unknown members once", "[membership]") {
    NodeState node = make_named("A/1", 2);
    node.members.add(MemberRecord{.name = MemberName{"A"}, .address = 1, .port = 7001});
    REQUIRE(node.members.seq() == SeqNum{2});

    wire::MemberSyncReply reply;
    reply.provider_name = MemberName{"A"};
    reply.provider_seq = SeqNum{3};
    reply.members = {{MemberName{"A"}, 1, 7001},
                     {MemberName{"A/1"}, 2, 7002},
                     {MemberName{"A/2"}, 3, 7003}};

    CHECK(membership::merge_member_list(node, reply));
    CHECK(node.members.seq() == SeqNum{3});
    REQUIRE(node.members.find(MemberName{"A/2"}) != nullptr);
    CHECK(node.members.find(MemberName{"A/2"})->address == 3);
    CHECK(node.members.find(MemberName{"A"})->known_member_seq == SeqNum{3});

    // subset reply: nothing added, seq untouched, returns false
    CHECK_FALSE(membership::merge_member_list(node, reply));
    CHECK(node.members.seq() == SeqNum{3});
}

TEST_CASE("merges are order-insensitive on the final member set", "[membership]") {
    wire::MemberSyncReply r1{MemberName{"A"}, SeqNum{4}, {{MemberName{"A"}, 1, 1},
                                                          {MemberName{"A/2"}, 3, 3},
                                                          {MemberName{"A/3"}, 4, 4}}};
    wire::MemberSyncReply r2{MemberName{"A/2"}, SeqNum{2}, {{MemberName{"A/2"}, 3, 3},
                                                            {MemberName{"A/4"}, 5, 5}}};

    NodeState ab = make_named("A/1", 2);
    membership::merge_member_list(ab, r1);
    membership::merge_member_list(ab, r2);

    NodeState ba = make_named("A/1", 2);
    membership::merge_member_list(ba, r2);
    membership::merge_member_list(ba, r1);

    CHECK(checker::canonical_member_set(ab) == checker::canonical_member_set(ba));
    CHECK(ab.members.seq() == ba.members.seq());
}
