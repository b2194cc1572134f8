#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace xmrc {

// Digests are lowercase hex SHA-256.
std::string sha256_hex(std::string_view data);
std::string file_sha256(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temp file and renames it into place, so readers only
/// ever observe complete files.
void write_file_atomic(const std::filesystem::path& path, std::string_view data);

std::string_view trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

/// Fixed-point formatting independent of the global locale.
std::string format_fixed(double value, int decimals);

namespace utf8 {

/// Decodes the code point starting at byte `pos`; advances `pos`.
/// Invalid sequences decode as U+FFFD and consume one byte.
char32_t next(std::string_view s, std::size_t& pos);
void append(std::string& out, char32_t cp);
std::size_t length(std::string_view s);
/// Byte offset of the `index`-th code point; `index == length(s)` maps to
/// `s.size()`. Throws ValidationError when out of range.
std::size_t byte_offset(std::string_view s, std::size_t index);
std::size_t codepoint_index(std::string_view s, std::size_t byte_offset);

}  // namespace utf8

/// Runs fn(i) for i in [0, n) on up to `workers` threads. Exceptions from
/// workers are rethrown (the first one wins) after all threads join.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn);

}  // namespace xmrc
