#include "wes/base64.hpp"

#include <array>

#include "wes/error.hpp"

namespace wes {

namespace {

constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::array<int8_t, 256> build_reverse_table() {
  std::array<int8_t, 256> table;
  table.fill(-1);
  for (int i = 0; i < 64; ++i) table[static_cast<uint8_t>(kAlphabet[i])] = static_cast<int8_t>(i);
  return table;
}

const std::array<int8_t, 256> kReverse = build_reverse_table();

}  // namespace

std::string base64_encode(std::span<const uint8_t> data) {
  std::string out;
  out.reserve(((data.size() + 2) / 3) * 4);
  size_t i = 0;
  for (; i + 3 <= data.size(); i += 3) {
    uint32_t n = (data[i] << 16) | (data[i + 1] << 8) | data[i + 2];
    out.push_back(kAlphabet[(n >> 18) & 63]);
    out.push_back(kAlphabet[(n >> 12) & 63]);
    out.push_back(kAlphabet[(n >> 6) & 63]);
    out.push_back(kAlphabet[n & 63]);
  }
  size_t rest = data.size() - i;
  if (rest == 1) {
    uint32_t n = data[i] << 16;
    out.push_back(kAlphabet[(n >> 18) & 63]);
    out.push_back(kAlphabet[(n >> 12) & 63]);
    out.push_back('=');
    out.push_back('=');
  } else if (rest == 2) {
    uint32_t n = (data[i] << 16) | (data[i + 1] << 8);
    out.push_back(kAlphabet[(n >> 18) & 63]);
    out.push_back(kAlphabet[(n >> 12) & 63]);
    out.push_back(kAlphabet[(n >> 6) & 63]);
    out.push_back('=');
  }
  return out;
}

std::vector<uint8_t> base64_decode(std::string_view text) {
  if (text.size() % 4 != 0) {
    throw Error(ErrorCode::BadBase64, "base64 length not a multiple of 4");
  }
  std::vector<uint8_t> out;
  out.reserve(text.size() / 4 * 3);
  for (size_t i = 0; i < text.size(); i += 4) {
    int vals[4];
    int pad = 0;
    for (int j = 0; j < 4; ++j) {
      char c = text[i + j];
      if (c == '=') {
        // '=' is only legal in the last two positions of the final quartet
        if (i + 4 != text.size() || j < 2) {
          throw Error(ErrorCode::BadBase64, "unexpected '=' padding");
        }
        vals[j] = 0;
        ++pad;
      } else {
        if (pad > 0) throw Error(ErrorCode::BadBase64, "data after '=' padding");
        int8_t v = kReverse[static_cast<uint8_t>(c)];
        if (v < 0) {
          throw Error(ErrorCode::BadBase64,
                      "illegal base64 character at offset " + std::to_string(i + j));
        }
        vals[j] = v;
      }
    }
    uint32_t n = (vals[0] << 18) | (vals[1] << 12) | (vals[2] << 6) | vals[3];
    out.push_back(static_cast<uint8_t>((n >> 16) & 0xFF));
    if (pad < 2) out.push_back(static_cast<uint8_t>((n >> 8) & 0xFF));
    if (pad < 1) out.push_back(static_cast<uint8_t>(n & 0xFF));
  }
  return out;
}

}  // namespace wes
