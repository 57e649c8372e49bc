#pragma once

#include <string>

namespace aip {

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::string& path);

}  // namespace aip
