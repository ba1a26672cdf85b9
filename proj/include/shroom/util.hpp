#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace shroom {

std::string sha256_hex(std::string_view data);

// First eight bytes of the SHA-256 digest, big-endian.
std::uint64_t fingerprint64(std::string_view data);

// Maps a 64-bit value onto [0, 1) using its top 53 bits.
double unit_interval(std::uint64_t bits);

std::string to_lower_ascii(std::string_view text);

std::string read_file(const std::filesystem::path& path);

// Writes via a sibling temporary file and rename, creating parent directories.
void write_file(const std::filesystem::path& path, std::string_view content);

// UTC, second resolution, e.g. "2024-03-01T12:00:00Z".
std::string utc_timestamp();

}  // namespace shroom
