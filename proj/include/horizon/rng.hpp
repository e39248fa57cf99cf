#pragma once

#include <cstdint>
#include <string_view>

namespace horizon {

// Deterministic random numbers with a frozen algorithm so that any
// reimplementation of this project produces bit-identical streams.
// The full recipe (seeding, uniform mapping, normal transform) is written
// out in README.md; do not change any of it without bumping the formats.

// splitmix64 finalizer (Vigna / Steele et al.).
uint64_t mix64(uint64_t x);

// One step of the splitmix64 sequence: advances state, returns mixed output.
uint64_t splitmix64_next(uint64_t& state);

// Stream seed for stream `index` of a base seed. Frozen:
//   derive_seed(s, i) = mix64(mix64(s) ^ mix64(i + 0x9E3779B97F4A7C15))
uint64_t derive_seed(uint64_t seed, uint64_t index);

// FNV-1a 64-bit over raw bytes; used to hash prompt strings into seeds.
uint64_t fnv1a64(std::string_view bytes);

// xoshiro256** seeded via splitmix64, with Box-Muller normals.
class Rng {
public:
    explicit Rng(uint64_t seed);

    uint64_t next_u64();

    // Uniform double in [0, 1): top 53 bits of next_u64().
    double uniform();

    // Standard normal via Box-Muller on (u1, u2], pairs cached.
    double normal();

    float normal_f() { return static_cast<float>(normal()); }

private:
    uint64_t s_[4];
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace horizon
