#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <string_view>

namespace nlt {

// ASCII-only lowercase. Tool names and verdict tokens in the corpus are
// ASCII; multibyte UTF-8 (em dashes etc.) passes through untouched.
std::string to_lower(std::string_view s);

// Strips leading/trailing ASCII whitespace (space, tab, \r, \n, \f, \v).
std::string_view trim(std::string_view s);

bool iequals(std::string_view a, std::string_view b);

// FNV-1a 64-bit. Used for catalog checksums and plan hashes — a stable
// content fingerprint, not a cryptographic digest.
std::uint64_t fnv1a64(std::string_view data);

// 16-char lowercase hex rendering of a 64-bit hash.
std::string hex64(std::uint64_t v);

// "2025-01-02T03:04:05Z" style UTC timestamp.
std::string iso8601_utc(std::chrono::system_clock::time_point tp);
std::string iso8601_utc_now();

}  // namespace nlt
