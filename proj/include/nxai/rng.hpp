#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace nxai {

using Rng = std::mt19937_64;

/// Seed of the named sub-stream `stream` under a base seed. Components draw
/// from their own stream ("train", "dropout", "smoothgrad", "masks", ...) so
/// each can be rerun in isolation.
std::uint64_t derive_seed(std::uint64_t base, std::string_view stream) noexcept;

inline Rng make_rng(std::uint64_t base, std::string_view stream) { return Rng(derive_seed(base, stream)); }

} // namespace nxai
