#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hypadv::text {

// Whitespace tokenization; the unit for every length and ROUGE computation.
std::vector<std::string> split_whitespace(std::string_view s);
std::size_t count_tokens(std::string_view s);

std::string to_lower(std::string_view s);
std::string collapse_whitespace(std::string_view s);
std::string trim(std::string_view s);

// Collapses whitespace and drops leading markdown list markers ("-", "*", "+",
// "1.", "2)") from every line. Used for verbatim-extraction checks.
std::string normalize_for_verbatim(std::string_view s);

// Keeps the first `max_sentences` sentences (terminators . ! ? followed by
// whitespace or end of text).
std::string first_sentences(std::string_view s, std::size_t max_sentences);
std::size_t count_sentences(std::string_view s);

// Replaces every `{{key}}` with its value. Unknown placeholders are left as-is.
std::string render(std::string_view tmpl, const std::map<std::string, std::string>& vars);

std::string join(std::span<const std::string> parts, std::string_view sep);

// FNV-1a, 64 bit. Stable across platforms; used for seeds and feature hashing.
std::uint64_t fnv1a64(std::string_view data, std::uint64_t basis = 0xcbf29ce484222325ULL);
std::uint64_t mix64(std::uint64_t a, std::uint64_t b);

std::string sha256_hex(std::string_view data);
std::string sha256_file_hex(const std::string& path);

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(std::string_view encoded);

}  // namespace hypadv::text
