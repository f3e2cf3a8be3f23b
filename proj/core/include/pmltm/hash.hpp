#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace pmltm {

/// Lowercase hex SHA-256 digests.
std::string sha256Hex(std::string_view bytes);
std::string sha256File(const std::filesystem::path& path);

}  // namespace pmltm
