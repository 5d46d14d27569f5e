#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace relay {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

inline Bytes to_bytes(std::string_view s) {
    return Bytes(s.begin(), s.end());
}

std::string to_hex(ByteView data);
Bytes from_hex(std::string_view hex);  // throws std::invalid_argument on bad input

// Big-endian fixed-width integer encoding, used by every canonical serialization.
void append_be64(Bytes& out, std::uint64_t v);
std::uint64_t read_be64(ByteView in);  // reads exactly 8 bytes

// Length-prefixed field framing: be64(len) || payload.
void append_field(Bytes& out, ByteView field);

}  // namespace relay
