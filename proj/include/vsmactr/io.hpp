#pragma once

#include <string>
#include <string_view>

namespace vsmactr::io {

/// Whole-file read / write. Throw Error{io_failure}.
std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);
bool exists(const std::string& path);

/// Lower-case hex SHA-256.
std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::string& path);

} // namespace vsmactr::io
