#include <catch2/catch_amalgamated.hpp>

#include <fstream>

#include "lensless/image.hpp"
#include "support/testutil.hpp"

using namespace lensless;

TEST_CASE("GrayImage is row-major with bounds-checked helpers") {
  GrayImage img(3, 2);
  REQUIRE(img.data.size() == 6);
  img.at(2, 1) = 0.5f;
  REQUIRE(img.data[5] == 0.5f);
  validate_image(img);

  img.data[0] = 1.5f;
  REQUIRE_THROWS_AS(validate_image(img), Error);
  img.data[0] = 0.0f;
  img.data.pop_back();
  REQUIRE_THROWS_AS(validate_image(img), Error);
}

TEST_CASE("resize_nearest replicates pixels") {
  GrayImage img(2, 2);
  img.at(0, 0) = 0.1f;
  img.at(1, 0) = 0.2f;
  img.at(0, 1) = 0.3f;
  img.at(1, 1) = 0.4f;

  GrayImage same = resize_nearest(img, 2, 2);
  REQUIRE(same.data == img.data);

  GrayImage big = resize_nearest(img, 4, 4);
  REQUIRE(big.at(0, 0) == 0.1f);
  REQUIRE(big.at(1, 1) == 0.1f);
  REQUIRE(big.at(3, 0) == 0.2f);
  REQUIRE(big.at(0, 3) == 0.3f);
  REQUIRE(big.at(3, 3) == 0.4f);
}

TEST_CASE("embed_centered places the scaled source mid-scene") {
  GrayImage src(2, 2);
  src.data = {0.1f, 0.2f, 0.3f, 0.4f};

  GrayImage full = embed_centered(src, 2, 2, 1.0);
  REQUIRE(full.data == src.data);

  GrayImage padded = embed_centered(src, 4, 4, 0.5);
  REQUIRE(padded.at(0, 0) == 0.0f);
  REQUIRE(padded.at(1, 1) == 0.1f);
  REQUIRE(padded.at(2, 1) == 0.2f);
  REQUIRE(padded.at(1, 2) == 0.3f);
  REQUIRE(padded.at(2, 2) == 0.4f);
  REQUIRE(padded.at(3, 3) == 0.0f);

  REQUIRE_THROWS_AS(embed_centered(src, 4, 4, 0.0), Error);
  REQUIRE_THROWS_AS(embed_centered(src, 4, 4, 1.5), Error);
}

TEST_CASE("PGM round trip preserves 8-bit data") {
  testutil::TempDir tmp("pgm");
  GrayImage img(5, 4);
  Rng rng(2);
  for (float& v : img.data) v = float(rng.below(256)) / 255.0f;

  auto path = tmp.path() / "frame.pgm";
  write_pgm(img, path);
  GrayImage back = read_pgm(path);
  REQUIRE(back.width == img.width);
  REQUIRE(back.height == img.height);
  REQUIRE(back.data == img.data);
}

TEST_CASE("PGM reader handles comments and rejects malformed files") {
  testutil::TempDir tmp("pgm_bad");

  auto write_file = [&](const std::string& name, const std::string& content) {
    std::ofstream out(tmp.path() / name, std::ios::binary);
    out << content;
    return tmp.path() / name;
  };

  auto commented = write_file("c.pgm", "P5\n# a comment\n2 1\n# another\n255\n\x10\x20");
  GrayImage img = read_pgm(commented);
  REQUIRE(img.width == 2);
  REQUIRE(img.height == 1);
  REQUIRE(img.data[0] == float(0x10) / 255.0f);

  auto bad_magic = write_file("m.pgm", "P6\n2 1\n255\n\x10\x20");
  REQUIRE_THROWS_AS(read_pgm(bad_magic), Error);
  try {
    read_pgm(bad_magic);
  } catch (const Error& e) {
    REQUIRE(e.kind() == ErrorKind::Format);
  }

  auto short_payload = write_file("s.pgm", "P5\n4 4\n255\n\x10");
  try {
    read_pgm(short_payload);
    FAIL("expected truncation error");
  } catch (const Error& e) {
    REQUIRE(e.kind() == ErrorKind::Truncation);
  }

  REQUIRE_THROWS_AS(read_pgm(tmp.path() / "missing.pgm"), Error);
}
