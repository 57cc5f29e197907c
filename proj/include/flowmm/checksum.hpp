#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

namespace flowmm {

/// CRC-32 (zlib polynomial) of a byte range.
std::uint32_t crc32_of(std::span<const std::byte> bytes);
std::uint32_t crc32_of(std::string_view bytes);

/// CRC-32 of a whole file; throws FormatError if unreadable.
std::uint32_t file_crc32(const std::filesystem::path& path);

/// 64-bit FNV-1a, used for config and norm-stats fingerprints.
std::uint64_t fnv1a64(std::string_view bytes);

std::string hex64(std::uint64_t v);
std::string hex32(std::uint32_t v);

}  // namespace flowmm
