#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <atomic>
#include <cstdlib>
#include <cstring>

#include "wes/base64.hpp"
#include "wes/codec.hpp"
#include "wes/config.hpp"
#include "wes/error.hpp"
#include "wes/fixtures.hpp"
#include "wes/parallel.hpp"
#include "wes/pcg.hpp"

using namespace wes;

TEST_CASE("base64 round-trips arbitrary bytes") {
  Pcg32 rng(42);
  for (int trial = 0; trial < 50; ++trial) {
    size_t length = rng.next_below(200);
    std::vector<uint8_t> data(length);
    for (auto& b : data) b = static_cast<uint8_t>(rng.next() & 0xFF);
    CHECK(base64_decode(base64_encode(data)) == data);
  }
}

TEST_CASE("base64 rejects illegal input") {
  CHECK_THROWS_AS(base64_decode("AAA!"), Error);
  CHECK_THROWS_AS(base64_decode("AAA"), Error);          // not a multiple of 4
  CHECK_THROWS_AS(base64_decode("A=AA"), Error);         // data after padding
  CHECK_THROWS_AS(base64_decode("====") , Error);        // padding in first positions
  try {
    base64_decode("AA$A");
    FAIL("expected BadBase64");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BadBase64);
  }
}

TEST_CASE("base64 known vectors") {
  auto bytes = [](const char* s) {
    return std::vector<uint8_t>(s, s + std::strlen(s));
  };
  CHECK(base64_encode(bytes("")) == "");
  CHECK(base64_encode(bytes("f")) == "Zg==");
  CHECK(base64_encode(bytes("fo")) == "Zm8=");
  CHECK(base64_encode(bytes("foo")) == "Zm9v");
  CHECK(base64_decode("Zm9vYmFy") == bytes("foobar"));
}

TEST_CASE("pcg is deterministic and bound draws stay in range") {
  Pcg32 a(123), b(123);
  for (int i = 0; i < 1000; ++i) CHECK(a.next() == b.next());
  Pcg32 c(7);
  for (int i = 0; i < 1000; ++i) {
    CHECK(c.next_below(6) < 6);
    double d = c.next_double();
    CHECK(d >= 0.0);
    CHECK(d < 1.0);
  }
}

TEST_CASE("png encoding is lossless") {
  Image img = synth_gradient(96, 80);
  auto png = encode_png(img);
  CHECK(sniff_image_format(png) == ImageFormat::Png);
  Image back = decode_png(png);
  CHECK(back.rows == img.rows);
  CHECK(back.cols == img.cols);
  CHECK(back.pixels == img.pixels);
}

TEST_CASE("jpeg encode/decode stays within tolerance 2 on smooth content") {
  Image img = synth_smooth(224, 224);
  auto jpeg = encode_jpeg(img, 95);
  CHECK(sniff_image_format(jpeg) == ImageFormat::Jpeg);
  Image back = decode_jpeg(jpeg);
  REQUIRE(back.rows == img.rows);
  REQUIRE(back.cols == img.cols);
  int max_err = 0;
  for (size_t i = 0; i < img.pixels.size(); ++i) {
    max_err = std::max(max_err, std::abs(int(img.pixels[i]) - int(back.pixels[i])));
  }
  CHECK(max_err <= 2);
}

TEST_CASE("decode_image dispatches on magic bytes") {
  Image img = synth_uniform(16, 16, 200);
  CHECK(decode_image(encode_png(img)).pixels == img.pixels);
  CHECK(decode_image(encode_jpeg(img, 95)).rows == 16);
  std::vector<uint8_t> junk = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  CHECK_THROWS_AS(decode_image(junk), Error);
}

TEST_CASE("parallel_for covers every index exactly once") {
  std::vector<std::atomic<int>> hits(1000);
  parallel_for(hits.size(), 8, [&](size_t i) { hits[i].fetch_add(1); });
  for (auto& h : hits) CHECK(h.load() == 1);
}

TEST_CASE("parallel_for propagates exceptions") {
  CHECK_THROWS_AS(parallel_for(100, 4,
                               [](size_t i) {
                                 if (i == 57) throw Error(ErrorCode::BadData, "boom");
                               }),
                  Error);
}

TEST_CASE("config resolution precedence: flags > env > file > defaults") {
  std::string path = "/tmp/wes_test_config.txt";
  {
    FILE* f = fopen(path.c_str(), "w");
    fputs("# comment\nport = 9000\nencoder.dim = 128\n", f);
    fclose(f);
  }
  unsetenv("WES_PORT");
  unsetenv("WES_ENCODER_DIM");
  unsetenv("WES_WORKERS");

  ServiceConfig config = resolve_service_config(path, {});
  CHECK(config.port == 9000);
  CHECK(config.encoder.dim == 128);
  CHECK(config.max_patches_per_request == 5000);  // default

  setenv("WES_PORT", "9100", 1);
  config = resolve_service_config(path, {});
  CHECK(config.port == 9100);

  config = resolve_service_config(path, {{"port", "9200"}});
  CHECK(config.port == 9200);
  unsetenv("WES_PORT");
}

TEST_CASE("config rejects unknown keys and bad values") {
  std::string path = "/tmp/wes_test_config_bad.txt";
  {
    FILE* f = fopen(path.c_str(), "w");
    fputs("no_such_key = 1\n", f);
    fclose(f);
  }
  CHECK_THROWS_AS(resolve_service_config(path, {}), Error);
  CHECK_THROWS_AS(resolve_service_config(std::nullopt, {{"port", "not-a-number"}}), Error);
  CHECK_THROWS_AS(resolve_service_config(std::nullopt, {{"bogus", "1"}}), Error);
}

TEST_CASE("env var names derive from config keys") {
  CHECK(env_var_for_key("port") == "WES_PORT");
  CHECK(env_var_for_key("encoder.dim") == "WES_ENCODER_DIM");
  CHECK(env_var_for_key("fetch.timeout_ms") == "WES_FETCH_TIMEOUT_MS");
}
