// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace mixadc {

/// Seedable, splittable random stream. Forking with a label (or index) yields
/// an independent substream, so e.g. threshold draws and noise draws do not
/// perturb each other when one of them changes.
class SeedStream {
  public:
    explicit SeedStream(std::uint64_t seed) : state_(mix(seed ^ 0x9e3779b97f4a7c15ull)) {}

    SeedStream fork(std::string_view label) const {
        std::uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a
        for (char c : label) {
            h ^= static_cast<std::uint8_t>(c);
            h *= 0x100000001b3ull;
        }
        return SeedStream(mix(state_ ^ h));
    }

    SeedStream fork(std::uint64_t index) const {
        return SeedStream(mix(state_ + 0x9e3779b97f4a7c15ull * (index + 1)));
    }

    std::uint64_t raw() const { return state_; }

    std::mt19937_64 engine() const { return std::mt19937_64(state_); }

  private:
    static std::uint64_t mix(std::uint64_t z) {  // splitmix64 finalizer
        z += 0x9e3779b97f4a7c15ull;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    std::uint64_t state_;
};

}  // namespace mixadc
