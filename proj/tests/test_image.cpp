// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "support.hpp"
#include "trajkit/errors.hpp"
#include "trajkit/hash.hpp"
#include "trajkit/image.hpp"
#include "trajkit/screenshots.hpp"

using namespace trajkit;

TEST_CASE("sha256 and base64 known vectors") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(base64_encode("") == "");
  CHECK(base64_encode("f") == "Zg==");
  CHECK(base64_encode("fo") == "Zm8=");
  CHECK(base64_encode("foobar") == "Zm9vYmFy");
}

TEST_CASE("stable hash is FNV-1a 64") {
  CHECK(stable_hash("") == 0xcbf29ce484222325ULL);
  CHECK(stable_hash("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(combine_seed(1, 2) != combine_seed(2, 1));
}

TEST_CASE("png round trip") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    Image img(trajkit::testing::uniform_int(rng, 1, 40), trajkit::testing::uniform_int(rng, 1, 40));
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng());
    CHECK(decode_png(encode_png(img)) == img);
  }
}

TEST_CASE("png decode errors") {
  CHECK_THROWS_AS(decode_png(""), ImageDecodeError);
  CHECK_THROWS_AS(decode_png("definitely not a png"), ImageDecodeError);
  auto bytes = encode_png(Image(8, 8, {1, 2, 3}));
  bytes.resize(bytes.size() / 2);
  CHECK_THROWS_AS(decode_png(bytes), ImageDecodeError);
}

TEST_CASE("raster primitives clip") {
  Image img(20, 10);
  fill_disc(img, 0, 0, 3, {255, 0, 0});
  CHECK(img.at(0, 0) == Rgb{255, 0, 0});
  CHECK(img.at(2, 2) == Rgb{255, 0, 0});
  CHECK(img.at(5, 5) == Rgb{});
  draw_line(img, -5, 5, 30, 5, 1, {0, 255, 0});
  CHECK(img.at(10, 5) == Rgb{0, 255, 0});
  CHECK(img.at(19, 5) == Rgb{0, 255, 0});
  draw_arrow(img, 2, 8, 15, 8, 1, {0, 0, 255});
  CHECK(img.at(15, 8) == Rgb{0, 0, 255});
}

TEST_CASE("payload") {
  const auto p = make_payload(Image(4, 3), "ref-1");
  CHECK(p.width == 4);
  CHECK(p.height == 3);
  CHECK(p.ref == "ref-1");
  CHECK(p.data_uri().rfind("data:image/png;base64,", 0) == 0);

  auto provider = provider_from_loader(blank_screenshot_loader());
  const auto got = provider(Observation{"x.png", {64, 32}, std::nullopt});
  REQUIRE(got.has_value());
  CHECK(got->width == 64);
  CHECK(got->ref == "x.png");
}

TEST_CASE("store loader reads fixture screenshots") {
  auto loader = store_screenshot_loader(ImageStore(trajkit::testing::fixture("corpus")));
  const auto img = loader(Observation{"screens/step0.png", {1280, 720}, std::nullopt});
  CHECK(img.width == 1280);
  CHECK(img.height == 720);
  CHECK_THROWS(loader(Observation{"screens/none.png", {1280, 720}, std::nullopt}));
}
