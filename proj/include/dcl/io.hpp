#ifndef DCL_IO_HPP
#define DCL_IO_HPP

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dcl::io {

/// Writes `content` to a sibling temp file and renames it over `path`, so a
/// reader never observes a truncated file. Creates parent directories.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

std::vector<std::string> split_whitespace(std::string_view s);
std::string join(std::span<const std::string> tokens, std::string_view sep = " ");

}  // namespace dcl::io

#endif  // DCL_IO_HPP
