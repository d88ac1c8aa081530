#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

namespace refine_loop::util {

std::string trim(std::string_view text);

/// Strips leading and trailing lines that are empty or whitespace-only.
/// Interior content is untouched, so the operation is idempotent.
std::string strip_outer_blank_lines(std::string_view text);

std::string to_lower(std::string_view text);

bool read_file(const std::filesystem::path& path, std::string& out);
std::string read_file_or_throw(const std::filesystem::path& path, const std::string& label);

/// write-temp-then-rename so readers never observe a half-written file.
void atomic_write_file(const std::filesystem::path& path, std::string_view content);

void append_line(const std::filesystem::path& path, std::string_view line);

std::optional<std::string> read_env(const std::string& name);

/// Current UTC time, ISO-8601 with second precision.
std::string utc_timestamp();

std::string random_run_id();

}  // namespace refine_loop::util
