#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace wes {

std::vector<uint8_t> read_file(const std::string& path);
void write_file(const std::string& path, std::span<const uint8_t> bytes);
void write_file(const std::string& path, const std::string& text);

}  // namespace wes
