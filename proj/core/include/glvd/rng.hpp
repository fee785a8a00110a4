#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace glvd {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; a bijective 64-bit mixer.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Derives an independent stream seed from a master seed and a path of
/// indices, e.g. derive_seed(master, {realization, stage}). Pure function.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) noexcept;

inline Rng make_rng(std::uint64_t seed) { return Rng{splitmix64(seed)}; }

}  // namespace glvd
