#include <catch2/catch_amalgamated.hpp>

#include "edgefs/reachability.hpp"

using namespace edgefs;

namespace {

// Two known peers plus self; ping period 5, threshold 4.
NodeState make_node() {
    NodeState st;
    st.address = 1;
    st.name = MemberName{"A"};
    st.named_tick = 0;
    st.members.add(MemberRecord{.name = MemberName{"A"}, .address = 1});
    st.members.add(MemberRecord{.name = MemberName{"A/1"}, .address = 2});
    st.members.add(MemberRecord{.name = MemberName{"A/2"}, .address = 3});
    return st;
}

wire::PingMessage ping_from(const std::string& name, std::uint64_t mseq = 0,
                            std::uint64_t hseq = 0) {
    return wire::PingMessage{MemberName{name}, SeqNum{mseq}, SeqNum{hseq}};
}

} // namespace

TEST_CASE("pings go to every known member, reachable or not", "[reachability]") {
    NodeState st = make_node();
    st.members.find(MemberName{"A/2"})->reachable = false;
    st.members.find(MemberName{"A/2"})->missed_pings = 4;

    auto sends = reachability::on_ping_timer(st);
    REQUIRE(sends.size() == 2); // self excluded, unreachable included
    CHECK(sends[0].dst == 2);
    CHECK(sends[1].dst == 3);
    CHECK(sends[0].msg.sender_name == MemberName{"A"});
    CHECK(sends[0].msg.member_seq == st.members.seq());
    CHECK(sends[0].msg.hier_seq == st.tree.own_seq);
}

TEST_CASE("a node with only itself sends no pings", "[reachability]") {
    NodeState st;
    st.name = MemberName{"A"};
    st.members.add(MemberRecord{.name = MemberName{"A"}, .address = 1});
    CHECK(reachability::on_ping_timer(st).empty());
}

TEST_CASE("silence is flagged exactly at the fourth period", "[reachability]") {
    NodeState st = make_node();
    // both peers ping at the tick-5 boundary
    reachability::on_ping_received(st, ping_from("A/1"), 5);
    reachability::on_ping_received(st, ping_from("A/2"), 5);
    reachability::on_period_elapsed(st, 5);

    // A/1 keeps pinging every period; A/2 goes silent after tick 5
    std::vector<Tick> flagged_at;
    for (Tick boundary = 10; boundary <= 45; boundary += 5) {
        reachability::on_ping_received(st, ping_from("A/1"), boundary);
        for (const auto& name : reachability::on_period_elapsed(st, boundary)) {
            CHECK(name == MemberName{"A/2"});
            flagged_at.push_back(boundary);
        }
    }
    REQUIRE(flagged_at.size() == 1);
    // the four silent periods end at 10, 15, 20, 25: flagged at 25, not before
    CHECK(flagged_at[0] == 25);
    CHECK_FALSE(st.members.find(MemberName{"A/2"})->reachable);
    CHECK(st.members.find(MemberName{"A/1"})->reachable);
}

TEST_CASE("three silent periods then a ping never flags", "[reachability]") {
    NodeState st = make_node();
    reachability::on_ping_received(st, ping_from("A/2"), 5);
    reachability::on_period_elapsed(st, 5);

    reachability::on_period_elapsed(st, 10);
    reachability::on_period_elapsed(st, 15);
    reachability::on_period_elapsed(st, 20);
    CHECK(st.members.find(MemberName{"A/2"})->missed_pings == 3);
    CHECK(st.members.find(MemberName{"A/2"})->reachable);

    reachability::on_ping_received(st, ping_from("A/2"), 22);
    CHECK(st.members.find(MemberName{"A/2"})->missed_pings == 0);

    auto flagged = reachability::on_period_elapsed(st, 25);
    CHECK(flagged.empty());
    CHECK(st.members.find(MemberName{"A/2"})->reachable);
}

TEST_CASE("a ping landing on the boundary tick counts for that period", "[reachability]") {
    NodeState st = make_node();
    reachability::on_ping_received(st, ping_from("A/2"), 5);
    reachability::on_period_elapsed(st, 5); // delivery precedes the timer
    CHECK(st.members.find(MemberName{"A/2"})->missed_pings == 0);
}

TEST_CASE("two members going silent are flagged in the same period", "[reachability]") {
    NodeState st = make_node();
    reachability::on_ping_received(st, ping_from("A/1"), 2);
    reachability::on_ping_received(st, ping_from("A/2"), 2);
    std::vector<MemberName> flagged;
    for (Tick boundary = 5; boundary <= 25; boundary += 5) {
        auto f = reachability::on_period_elapsed(st, boundary);
        flagged.insert(flagged.end(), f.begin(), f.end());
        if (!f.empty()) CHECK(boundary == 25);
    }
    CHECK(flagged.size() == 2);
}

TEST_CASE("unknown senders are dropped", "[reachability]") {
    NodeState st = make_node();
    auto reaction = reachability::on_ping_received(st, ping_from("X"), 5);
    CHECK_FALSE(reaction.known_sender);
    CHECK(st.members.size() == 3); // no discovery through pings
}

TEST_CASE("greater piggybacked seqs trigger sync requests", "[reachability]") {
    NodeState st = make_node();
    auto none = reachability::on_ping_received(st, ping_from("A/1", 0, 0), 5);
    CHECK_FALSE(none.want_member_sync);
    CHECK_FALSE(none.want_hierarchy_sync);

    auto both = reachability::on_ping_received(st, ping_from("A/1", 7, 2), 10);
    CHECK(both.want_member_sync);
    CHECK(both.want_hierarchy_sync);
    CHECK(both.sender_address == 2);

    // the recorded seqs only move when a sync reply is applied, so the
    // trigger stays armed for retries
    auto again = reachability::on_ping_received(st, ping_from("A/1", 7, 2), 15);
    CHECK(again.want_member_sync);
    CHECK(again.want_hierarchy_sync);
}

TEST_CASE("a returning ping restores reachability and visibility", "[reachability]") {
    NodeState st = make_node();
    REQUIRE(insert_entry(st.tree, "/", FileEntry{"f", MemberName{"A/2"}, "1_f", false, {}},
                         st.self()) == InsertStatus::Ok);

    reachability::on_ping_received(st, ping_from("A/2"), 2);
    for (Tick boundary = 5; boundary <= 25; boundary += 5) {
        reachability::on_period_elapsed(st, boundary);
    }
    REQUIRE_FALSE(st.members.find(MemberName{"A/2"})->reachable);
    CHECK_FALSE(visible(st, "/f"));
    CHECK(list_visible(st, st.tree.root).empty());
    CHECK(lookup(st.tree, "/f").file != nullptr); // hidden, not deleted

    auto reaction = reachability::on_ping_received(st, ping_from("A/2"), 28);
    CHECK(reaction.became_reachable);
    CHECK(visible(st, "/f"));
    CHECK(list_visible(st, st.tree.root) == std::vector<std::string>{"f"});
}

TEST_CASE("files of the local member are always visible", "[reachability]") {
    NodeState st = make_node();
    REQUIRE(insert_entry(st.tree, "/", FileEntry{"mine", MemberName{"A"}, "1_mine", false, {}},
                         st.self()) == InsertStatus::Ok);
    CHECK(visible(st, "/mine"));
    CHECK(visible(st, "/")); // folders are always visible
    CHECK_FALSE(visible(st, "/nope"));
}
