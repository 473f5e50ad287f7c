#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace lcsim {

// FNV-1a, 64- and 32-bit variants.
std::uint64_t fnv1a64(std::string_view bytes) noexcept;
std::uint32_t fnv1a32(std::string_view bytes) noexcept;

std::uint64_t splitmix64(std::uint64_t x) noexcept;

void append_le16(std::string& out, std::uint16_t v);
void append_le32(std::string& out, std::uint32_t v);
void append_le64(std::string& out, std::uint64_t v);

} // namespace lcsim
