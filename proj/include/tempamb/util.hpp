#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace tempamb {

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);

/// Whitespace-delimited tokens; punctuation stays attached to its word.
std::size_t count_words(std::string_view s);

/// First whitespace-delimited token with surrounding punctuation stripped,
/// lowercased. Empty when the input holds no token.
std::string normalized_first_token(std::string_view s);

/// trim, lowercase, collapse internal whitespace runs to one space, strip
/// terminal punctuation. Used to string-compare free-form answers.
std::string normalize_answer(std::string_view s);

std::vector<std::string> split(std::string_view s, char sep);

// FNV-1a, 64-bit. Stable across platforms and runs.
std::uint64_t fnv1a64(std::string_view s);
std::string hex64(std::uint64_t v);

// splitmix64; used to derive independent sub-seeds from a master seed.
std::uint64_t mix64(std::uint64_t x);

/// Uniform draw in [0, n) from a 64-bit generator state via rejection
/// sampling, so sequences do not depend on the standard library's
/// distribution implementation.
class PortableRng {
public:
  explicit PortableRng(std::uint64_t seed);
  std::uint64_t next();
  std::uint64_t below(std::uint64_t n);

private:
  std::uint64_t state_[4];
};

std::string iso8601_now();

}  // namespace tempamb
