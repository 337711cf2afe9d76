#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace edgefs {

using NodeId = std::uint32_t;
using Port = std::uint16_t;
using Tick = std::uint64_t;
using Bytes = std::vector<std::uint8_t>;
using CallId = std::uint64_t;   // reliable-channel call identity

constexpr char kPathSeparator = '/';

// Version counter attached to a member list or a hierarchy. Monotonically
// non-decreasing over the lifetime of the structure it versions.
struct SeqNum {
    std::uint64_t value = 0;

    [[nodiscard]] SeqNum next() const { return SeqNum{value + 1}; }
    auto operator<=>(const SeqNum&) const = default;
};

// Member identity. Names are hierarchical: a member named by host H carries
// H's own name as a strict prefix ("A" names "A/1", "A/1" names "A/1/1"),
// so per-host suffix uniqueness gives system-wide uniqueness inductively.
struct MemberName {
    std::string value;

    [[nodiscard]] bool empty() const { return value.empty(); }

    // Strict prefix along name-component boundaries.
    [[nodiscard]] bool is_strict_prefix_of(const MemberName& other) const {
        return value.size() < other.value.size() &&
               other.value.compare(0, value.size(), value) == 0 &&
               other.value[value.size()] == kPathSeparator;
    }

    auto operator<=>(const MemberName&) const = default;
};

inline std::uint64_t fnv1a64(std::string_view data, std::uint64_t h = 0xcbf29ce484222325ull) {
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

} // namespace edgefs

template <>
struct std::hash<edgefs::MemberName> {
    std::size_t operator()(const edgefs::MemberName& n) const noexcept {
        return std::hash<std::string>{}(n.value);
    }
};
