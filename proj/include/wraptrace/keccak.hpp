#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>

namespace wraptrace {

// Keccak-256 (original Keccak padding, not SHA3-256). This is the hash used
// for Ethereum event signatures and everywhere this project needs a digest.
std::array<std::uint8_t, 32> keccak256(std::span<const std::uint8_t> data);
std::array<std::uint8_t, 32> keccak256(std::string_view text);

}  // namespace wraptrace
