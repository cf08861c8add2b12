#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace spanqa {

// 64-bit FNV-1a. Stable across platforms; used for ids, corpus hashes and
// named seed streams.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL) noexcept;

std::string hex64(std::uint64_t value);

using Rng = std::mt19937_64;

// Every stage draws from its own stream, derived from the top-level seed and a
// stage name, so adding a consumer never perturbs another stage's draws.
Rng named_stream(std::uint64_t seed, std::string_view name);

// Uniform integer in [0, n). Rejection sampling on raw engine output, so the
// result does not depend on the standard library's distribution code.
std::uint64_t uniform_index(Rng& rng, std::uint64_t n);

template <typename T>
void seeded_shuffle(std::vector<T>& items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::size_t j = uniform_index(rng, i);
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace spanqa
