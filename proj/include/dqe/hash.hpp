#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace dqe {

// FNV-1a, 64-bit. Stable across platforms and runs; used for content
// addressing (embedding cache, verdict cache, run manifest).
inline std::uint64_t fnv1a64(std::string_view bytes,
                             std::uint64_t seed = 0xcbf29ce484222325ULL) {
    std::uint64_t h = seed;
    for (unsigned char c : bytes) {
        h ^= static_cast<std::uint64_t>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hash_hex(std::uint64_t h);

// Hash of a whole file's bytes; throws std::runtime_error if unreadable.
std::uint64_t hash_file(const std::string& path);

// Labeled sub-seed so one configured seed fans out to independent stages.
inline std::uint64_t sub_seed(std::uint64_t seed, std::string_view tag) {
    return seed ^ fnv1a64(tag);
}

}  // namespace dqe
