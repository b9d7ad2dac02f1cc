#pragma once
#include <cstdint>
#include <initializer_list>
#include <random>

namespace sba {

// Substream derivation: every (replication, stage, stream/design) tuple maps to
// an independent, reproducible generator. Seeds are derived by chaining a
// 64-bit finalizer over the id tuple, so substreams never depend on the total
// number of stages configured for the run.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> ids) {
    std::uint64_t h = mix64(master);
    for (std::uint64_t id : ids) h = mix64(h ^ id);
    return h;
}

inline std::mt19937_64 make_stream(std::uint64_t master, std::initializer_list<std::uint64_t> ids) {
    return std::mt19937_64(derive_seed(master, ids));
}

// Tags to keep substream id spaces disjoint.
namespace rng_tag {
constexpr std::uint64_t kInputInit = 0x1001;
constexpr std::uint64_t kSimInit = 0x1002;
constexpr std::uint64_t kInputStage = 0x2001;
constexpr std::uint64_t kSimStage = 0x2002;
constexpr std::uint64_t kOracle = 0x3001;
}  // namespace rng_tag

}  // namespace sba
