#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "edgefs/wire.hpp"

using namespace edgefs;

TEST_CASE("every payload carries its 4-byte tag at offset 0", "[wire]") {
    CHECK(wire::peek_tag(wire::encode(wire::PingMessage{MemberName{"A"}, SeqNum{1}, SeqNum{2}})) ==
          "ping");
    CHECK(wire::peek_tag(wire::encode(wire::NameRequest{"", 3, 7})) == "name");
    CHECK(wire::peek_tag(wire::encode(wire::MemberSyncRequest{MemberName{"A"}})) == "sync");
    CHECK(wire::peek_tag(wire::encode(wire::MontRequest{MemberName{"A"}})) == "mont");
    CHECK(wire::peek_tag(wire::encode(wire::FileRequest{})) == "freq");
    CHECK(wire::peek_tag(wire::encode(wire::DataRequest{})) == "data");
}

TEST_CASE("integers are 8-byte big-endian after the tag", "[wire]") {
    Bytes payload = wire::encode(wire::FileResponse{wire::FileStatus::NotOwner});
    REQUIRE(payload.size() == 12);
    CHECK(payload[0] == 'f');
    CHECK(payload[3] == 'q');
    for (int i = 4; i < 11; ++i) CHECK(payload[i] == 0);
    CHECK(payload[11] == 3);
}

TEST_CASE("random message round trips", "[wire]") {
    std::mt19937_64 rng(7);
    auto rand_name = [&] {
        std::string s = "A";
        int depth = int(rng() % 3);
        for (int i = 0; i < depth; ++i) s += "/" + std::to_string(rng() % 9 + 1);
        return MemberName{s};
    };

    for (int round = 0; round < 100; ++round) {
        wire::MemberSyncReply reply;
        reply.provider_name = rand_name();
        reply.provider_seq = SeqNum{rng() % 1000};
        int members = int(rng() % 6);
        for (int i = 0; i < members; ++i) {
            reply.members.push_back(
                wire::MemberEntryWire{rand_name(), NodeId(rng() % 100), Port(rng() % 9000)});
        }
        auto decoded = wire::decode<wire::MemberSyncReply>(wire::encode(reply));
        REQUIRE(decoded.has_value());
        CHECK(decoded->provider_name == reply.provider_name);
        CHECK(decoded->provider_seq == reply.provider_seq);
        REQUIRE(decoded->members.size() == reply.members.size());
        for (std::size_t i = 0; i < reply.members.size(); ++i) {
            CHECK(decoded->members[i].name == reply.members[i].name);
            CHECK(decoded->members[i].address == reply.members[i].address);
            CHECK(decoded->members[i].port == reply.members[i].port);
        }
    }
}

TEST_CASE("hierarchy reply trees round trip with owner stamped", "[wire]") {
    FolderNode root{"/", {}};
    root.children.emplace_back(FileEntry{"a.txt", MemberName{"ignored"}, "1_a.txt", true, SeqNum{9}});
    FolderNode sub{"d", {}};
    sub.children.emplace_back(FileEntry{"b.txt", MemberName{"ignored"}, "2_b.txt", false, SeqNum{}});
    root.children.emplace_back(std::move(sub));

    wire::HierarchySyncReply reply{MemberName{"A/1"}, SeqNum{4}, root};
    auto decoded = wire::decode<wire::HierarchySyncReply>(wire::encode(reply));
    REQUIRE(decoded.has_value());
    CHECK(decoded->provider_hier_seq == SeqNum{4});
    REQUIRE(decoded->owned_tree.children.size() == 2);
    const auto& a = std::get<FileEntry>(decoded->owned_tree.children[0]);
    CHECK(a.logical_name == "a.txt");
    CHECK(a.physical_name == "1_a.txt");
    CHECK(a.owner == MemberName{"A/1"}); // owner comes from the reply header
    CHECK_FALSE(a.conflicted);           // flags are receiver-local
    const auto& d = std::get<FolderNode>(decoded->owned_tree.children[1]);
    REQUIRE(d.children.size() == 1);
    CHECK(std::get<FileEntry>(d.children[0]).owner == MemberName{"A/1"});
}

TEST_CASE("truncated and oversized payloads are rejected", "[wire]") {
    Bytes good = wire::encode(wire::PingMessage{MemberName{"A/1"}, SeqNum{3}, SeqNum{4}});
    for (std::size_t cut = 0; cut < good.size(); ++cut) {
        Bytes bad(good.begin(), good.begin() + std::ptrdiff_t(cut));
        CHECK_FALSE(wire::decode<wire::PingMessage>(bad).has_value());
    }
    Bytes extra = good;
    extra.push_back(0);
    CHECK_FALSE(wire::decode<wire::PingMessage>(extra).has_value());
    CHECK_FALSE(wire::decode<wire::PingMessage>(wire::encode(wire::MontReply{true})).has_value());
}

TEST_CASE("sync replies are distinguishable for the fault injector", "[wire]") {
    CHECK(wire::is_sync_reply(wire::encode(wire::MemberSyncReply{MemberName{"A"}, SeqNum{1}, {}})));
    CHECK(wire::is_sync_reply(
        wire::encode(wire::HierarchySyncReply{MemberName{"A"}, SeqNum{1}, FolderNode{"/", {}}})));
    CHECK_FALSE(wire::is_sync_reply(wire::encode(wire::MemberSyncRequest{MemberName{"A"}})));
    CHECK_FALSE(wire::is_sync_reply(wire::encode(wire::HierarchySyncRequest{MemberName{"A"}})));
    CHECK_FALSE(wire::is_sync_reply(wire::encode(wire::PingMessage{MemberName{"A"}, {}, {}})));
}
