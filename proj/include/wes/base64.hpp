#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace wes {

std::string base64_encode(std::span<const uint8_t> data);

// Strict RFC 4648: rejects characters outside the alphabet, bad padding and
// truncated input with ErrorCode::BadBase64.
std::vector<uint8_t> base64_decode(std::string_view text);

}  // namespace wes
