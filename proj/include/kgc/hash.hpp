#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace kgc {

/// Lowercase hex SHA-256 of the bytes of `data`.
std::string sha256_hex(std::string_view data);

std::uint64_t fnv1a64(std::string_view data, std::uint64_t basis = 0xcbf29ce484222325ULL);

std::uint64_t splitmix64(std::uint64_t x);

/// Per-module seed derivation: every consumer of randomness derives its own
/// stream from the global seed and a stable label, so module tests and CLI
/// runs see the same draws.
///
///     derive_seed(seed, label) = splitmix64(seed ^ fnv1a64(label))
std::uint64_t derive_seed(std::uint64_t seed, std::string_view label);

/// Further split a derived seed by integer coordinates (item index, stream index).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b);

}  // namespace kgc
