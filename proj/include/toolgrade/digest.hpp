#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace toolgrade {

/// SHA-256 of `data`, as a lowercase hex string (64 chars).
std::string sha256_hex(std::string_view data);

/// SHA-256 of a file's bytes. Throws DataError if the file cannot be read.
std::string sha256_file(const std::string& path);

}  // namespace toolgrade
