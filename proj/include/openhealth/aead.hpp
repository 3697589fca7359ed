#pragma once

// AES-128-GCM: 128-bit key, 96-bit nonce, 128-bit tag.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace openhealth {

inline constexpr std::size_t kKeyBytes = 16;
inline constexpr std::size_t kNonceBytes = 12;
inline constexpr std::size_t kTagBytes = 16;

using Key = std::array<std::uint8_t, kKeyBytes>;
using Nonce = std::array<std::uint8_t, kNonceBytes>;

// Parses 32 hex digits; throws std::invalid_argument otherwise.
Key key_from_hex(std::string_view hex);
std::string to_hex(std::span<const std::uint8_t> bytes);

// Returns ciphertext followed by the tag.
std::vector<std::uint8_t> aead_seal(const Key& key, const Nonce& nonce, std::span<const std::uint8_t> aad,
                                    std::span<const std::uint8_t> plaintext);

// `sealed` is ciphertext followed by the tag; nullopt when authentication
// fails.
std::optional<std::vector<std::uint8_t>> aead_open(const Key& key, const Nonce& nonce,
                                                   std::span<const std::uint8_t> aad,
                                                   std::span<const std::uint8_t> sealed);

} // namespace openhealth
