#pragma once

#include <string>
#include <string_view>

namespace percolab::io {

/// Shortest text that round-trips the double ("%.17g" fallback).
std::string format_double(double value);

/// Writes `content` to a sibling temp file, then renames it over `path`.
/// Never leaves a partial file at `path`.
void write_atomic(const std::string& path, std::string_view content);

std::string read_file(const std::string& path);

}  // namespace percolab::io
