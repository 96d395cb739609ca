#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "tortrust/attributes.hpp"

namespace tortrust {

/// Throws IoError.
std::string read_file(const std::filesystem::path& p);
/// Writes to a temporary sibling and renames it over `p`.
void write_file_atomic(const std::filesystem::path& p, std::string_view contents);

/// Throws ParseError with the line and column of malformed JSON.
Json parse_json(std::string_view text);
Json load_json(const std::filesystem::path& p);

/// 1-based line and column of a byte offset.
std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t offset);

/// Canonical JSON text used for every file the library writes.
std::string dump_json(const Json& j);

}  // namespace tortrust
