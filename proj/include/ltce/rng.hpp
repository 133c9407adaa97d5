#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace ltce {

using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);

// Folds a path of indices into a master seed. Distinct paths give distinct
// streams (up to 64-bit collisions).
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path);

// Stable 64-bit tag for a string, used to key per-method seed streams.
std::uint64_t seed_tag(const char* name);

// Standard normal truncated to [lo, hi] by rejection.
double truncated_normal(Rng& rng, double lo, double hi);

}  // namespace ltce
