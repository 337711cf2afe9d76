#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <set>

#include "edgefs/metadata.hpp"

using namespace edgefs;

namespace {

const MemberName kLocal{"A"};
const MemberName kRemote1{"A/1"};
const MemberName kRemote2{"A/2"};

FileEntry file(const std::string& logical, const MemberName& owner,
               const std::string& physical = "") {
    return FileEntry{logical, owner, physical.empty() ? "1_" + logical : physical, false, SeqNum{}};
}

} // namespace

TEST_CASE("path splitting accepts absolute paths only", "[metadata]") {
    CHECK(split_path("/") == std::vector<std::string>{});
    CHECK(split_path("/a/b") == std::vector<std::string>{"a", "b"});
    CHECK_FALSE(split_path("").has_value());
    CHECK_FALSE(split_path("a/b").has_value());
    CHECK_FALSE(split_path("//a").has_value());
    CHECK_FALSE(split_path("/a//b").has_value());
    CHECK_FALSE(split_path("/a/").has_value());
    CHECK_FALSE(split_path("/./a").has_value());
    CHECK_FALSE(split_path("/a/..").has_value());
}

TEST_CASE("lookup on the empty tree resolves the root", "[metadata]") {
    HierarchyTree tree;
    auto r = lookup(tree, "/");
    REQUIRE(r.found());
    CHECK(r.folder == &tree.root);
    CHECK(r.file == nullptr);
}

TEST_CASE("lookup traverses folders to a file entry", "[metadata]") {
    HierarchyTree tree;
    REQUIRE(insert_entry(tree, "/docs", file("a.txt", kRemote1), kLocal) == InsertStatus::Ok);

    auto r = lookup(tree, "/docs/a.txt");
    REQUIRE(r.file != nullptr);
    CHECK(r.file->owner == kRemote1);
    CHECK(r.file->logical_name == "a.txt");

    CHECK_FALSE(lookup(tree, "/docs/missing").found());
    CHECK_FALSE(lookup(tree, "/nope/a.txt").found());
    CHECK(lookup(tree, "/docs").folder != nullptr);
}

TEST_CASE("lookup matches conflicted files by display name", "[metadata]") {
    HierarchyTree tree;
    REQUIRE(insert_entry(tree, "/", file("a.txt", kRemote1), kLocal) == InsertStatus::Ok);
    REQUIRE(insert_entry(tree, "/", file("a.txt", kRemote2), kLocal) == InsertStatus::Ok);

    CHECK_FALSE(lookup(tree, "/a.txt").found()); // both mangled now
    auto r1 = lookup(tree, "/a.txt.CONFLICT.A-1");
    REQUIRE(r1.file != nullptr);
    CHECK(r1.file->owner == kRemote1);
    auto r2 = lookup(tree, "/a.txt.CONFLICT.A-2");
    REQUIRE(r2.file != nullptr);
    CHECK(r2.file->owner == kRemote2);
}

TEST_CASE("insert of a locally owned file bumps own_seq", "[metadata]") {
    HierarchyTree tree;
    REQUIRE(insert_entry(tree, "/", file("a.txt", kLocal), kLocal) == InsertStatus::Ok);
    CHECK(tree.own_seq == SeqNum{1});

    // remote insertions never move the local seq
    REQUIRE(insert_entry(tree, "/", file("b.txt", kRemote1), kLocal) == InsertStatus::Ok);
    CHECK(tree.own_seq == SeqNum{1});
}

TEST_CASE("equally named files from different owners both stay, flagged", "[metadata]") {
    HierarchyTree tree;
    REQUIRE(insert_entry(tree, "/", file("a.txt", kRemote1), kLocal) == InsertStatus::Ok);
    REQUIRE(insert_entry(tree, "/", file("a.txt", kRemote2), kLocal) == InsertStatus::Ok);

    REQUIRE(tree.root.children.size() == 2);
    for (const auto& child : tree.root.children) {
        CHECK(std::get<FileEntry>(child).conflicted);
    }
}

TEST_CASE("duplicate (name, owner) insertion is rejected", "[metadata]") {
    HierarchyTree tree;
    REQUIRE(insert_entry(tree, "/", file("a.txt", kRemote1), kLocal) == InsertStatus::Ok);
    CHECK(insert_entry(tree, "/", file("a.txt", kRemote1), kLocal) == InsertStatus::Duplicate);
    CHECK(tree.root.children.size() == 1);
}

TEST_CASE("a file name colliding with a folder is rejected", "[metadata]") {
    HierarchyTree tree;
    REQUIRE(insert_entry(tree, "/docs", file("a.txt", kLocal), kLocal) == InsertStatus::Ok);
    CHECK(insert_entry(tree, "/", file("docs", kLocal), kLocal) == InsertStatus::NameTaken);
    // and a folder path component colliding with a file is rejected too
    REQUIRE(insert_entry(tree, "/", file("x", kLocal), kLocal) == InsertStatus::Ok);
    CHECK(insert_entry(tree, "/x", file("y", kLocal), kLocal) == InsertStatus::InvalidPath);
}

TEST_CASE("intermediate folders are created on demand", "[metadata]") {
    HierarchyTree tree;
    REQUIRE(insert_entry(tree, "/d/e/f", file("x", kLocal), kLocal) == InsertStatus::Ok);
    CHECK(lookup(tree, "/d/e/f/x").file != nullptr);
    CHECK(lookup(tree, "/d/e").folder != nullptr);
}

TEST_CASE("remove_entry bumps own_seq only for local files", "[metadata]") {
    HierarchyTree tree;
    REQUIRE(insert_entry(tree, "/", file("a", kLocal), kLocal) == InsertStatus::Ok);
    REQUIRE(insert_entry(tree, "/", file("b", kRemote1), kLocal) == InsertStatus::Ok);
    REQUIRE(tree.own_seq == SeqNum{1});

    CHECK(remove_entry(tree, tree.root, "b", kRemote1, kLocal));
    CHECK(tree.own_seq == SeqNum{1});
    CHECK(remove_entry(tree, tree.root, "a", kLocal, kLocal));
    CHECK(tree.own_seq == SeqNum{2});
    CHECK_FALSE(remove_entry(tree, tree.root, "a", kLocal, kLocal));
}

// Property: conflict flags are exactly the pairwise-duplicate relation, and
// recomputing them is a fixpoint.
TEST_CASE("conflict flags match the duplicate relation on random folders", "[metadata]") {
    std::mt19937_64 rng(42);
    const std::vector<MemberName> owners{kLocal, kRemote1, kRemote2, MemberName{"A/3"}};
    const std::vector<std::string> names{"a", "b", "c", "d", "e"};

    for (int round = 0; round < 200; ++round) {
        FolderNode folder{"/", {}};
        std::set<std::pair<std::string, std::string>> used;
        const int count = int(rng() % 10);
        for (int i = 0; i < count; ++i) {
            const auto& name = names[rng() % names.size()];
            const auto& owner = owners[rng() % owners.size()];
            if (!used.insert({name, owner.value}).second) continue;
            FileEntry f = file(name, owner);
            f.conflicted = rng() % 2 == 0; // scrambled flags on purpose
            folder.children.emplace_back(std::move(f));
        }

        recompute_conflicts(folder);

        // oracle: count owners per logical name
        std::map<std::string, std::set<std::string>> owners_of;
        for (const auto& child : folder.children) {
            const auto& f = std::get<FileEntry>(child);
            owners_of[f.logical_name].insert(f.owner.value);
        }
        for (const auto& child : folder.children) {
            const auto& f = std::get<FileEntry>(child);
            CHECK(f.conflicted == (owners_of[f.logical_name].size() > 1));
        }

        CHECK(recompute_conflicts(folder) == 0); // fixpoint
    }
}

TEST_CASE("member list seq moves exactly on addition", "[metadata]") {
    MemberList list;
    CHECK(list.seq() == SeqNum{0});
    CHECK(list.add(MemberRecord{.name = kLocal}));
    CHECK(list.seq() == SeqNum{1});
    CHECK_FALSE(list.add(MemberRecord{.name = kLocal}));
    CHECK(list.seq() == SeqNum{1});
    CHECK(list.add(MemberRecord{.name = kRemote1}));
    CHECK(list.seq() == SeqNum{2});
    REQUIRE(list.find(kRemote1) != nullptr);
    CHECK(list.find(MemberName{"nope"}) == nullptr);
}

TEST_CASE("hierarchical names are strict prefixes along separators", "[metadata]") {
    CHECK(MemberName{"A"}.is_strict_prefix_of(MemberName{"A/1"}));
    CHECK(MemberName{"A/1"}.is_strict_prefix_of(MemberName{"A/1/4"}));
    CHECK_FALSE(MemberName{"A"}.is_strict_prefix_of(MemberName{"A"}));
    CHECK_FALSE(MemberName{"A/1"}.is_strict_prefix_of(MemberName{"A/12"}));
    CHECK_FALSE(MemberName{"B"}.is_strict_prefix_of(MemberName{"A/1"}));
}
