#pragma once

// Small text utilities shared across parsing, scoring and backends.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace tiser {

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);

// Splits on runs of whitespace; the token count doubles as the project-wide
// token estimator (the paper names no tokenizer).
std::vector<std::string> whitespace_tokens(std::string_view s);
long count_tokens(std::string_view s);

// Lowercases and replaces ASCII punctuation with spaces; bytes >= 0x80 pass
// through untouched so UTF-8 content survives.
std::string strip_punct_lower(std::string_view s);

// Collapses internal whitespace runs to single spaces and trims.
std::string collapse_ws(std::string_view s);

// Case/punctuation-insensitive containment in either direction.
bool fuzzy_contains(std::string_view a, std::string_view b);

// All standalone 4-digit runs, in order of appearance.
std::vector<int> scan_years(std::string_view s);

bool starts_with_ci(std::string_view s, std::string_view prefix);
bool contains_ci(std::string_view haystack, std::string_view needle);

uint64_t fnv1a64(std::string_view s);
uint64_t splitmix64(uint64_t x);

// Deterministic hash of (seed, key, stream) mapped to [0, 1).
double hash_unit(uint64_t seed, std::string_view key, uint64_t stream = 0);

// Hex-encoded SHA-256, used to key record/replay fixtures.
std::string sha256_hex(std::string_view data);

std::string iso8601_utc_now();

}  // namespace tiser
