#include <gtest/gtest.h>

#include "expect_errc.hpp"
#include "voxagent/digest.hpp"
#include "voxagent/png.hpp"
#include "voxagent/rng.hpp"

using namespace voxagent;
using nlohmann::json;

TEST(Digest, Sha256KnownVectors) {
  EXPECT_EQ(sha256_hex(std::string_view("")), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex(std::string_view("abc")), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Digest, CanonicalFormSortsKeysAndDropsWhitespace) {
  const json a = json::parse(R"({"b": 1, "a": [1.5, "x", null], "c": {"z": true, "y": 0.1}})");
  EXPECT_EQ(canonical(a), R"({"a":[1.5,"x",null],"b":1,"c":{"y":0.1,"z":true}})");
  const json b = json::parse(R"({"c":{"y":0.1,"z":true},"a":[1.5,"x",null],"b":1})");
  EXPECT_EQ(digest_of(a), digest_of(b));
}

TEST(Digest, ShortestRoundTripNumbers) {
  EXPECT_EQ(canonical(json(0.1)), "0.1");
  EXPECT_EQ(canonical(json(1.0 / 3.0)), "0.3333333333333333");
  EXPECT_EQ(json::parse(canonical(json(1.0 / 3.0))).get<double>(), 1.0 / 3.0);
}

TEST(Digest, Base64RoundTrip) {
  EXPECT_EQ(base64_encode(as_bytes("hello")), "aGVsbG8=");
  for (std::size_t n = 0; n < 40; ++n) {
    Bytes b(n);
    for (std::size_t i = 0; i < n; ++i) b[i] = static_cast<std::uint8_t>(i * 37 + 11);
    EXPECT_EQ(base64_decode(base64_encode(b)), b) << n;
  }
}

TEST(Digest, RoundTo) {
  EXPECT_EQ(round_to(0.125, 2), 0.13);
  EXPECT_EQ(round_to(-0.125, 2), -0.13);
  EXPECT_EQ(round_to(40.0004, 3), 40.0);
}

TEST(Png, RoundTripAndDeterminism) {
  GrayImage img{7, 5, {}};
  for (int i = 0; i < 35; ++i) img.pixels.push_back(static_cast<std::uint8_t>(i * 7));
  const Bytes a = encode_png(img);
  EXPECT_EQ(a, encode_png(img));
  EXPECT_EQ(decode_png(a), img);
  const std::uint8_t sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  EXPECT_TRUE(std::equal(sig, sig + 8, a.begin()));
}

TEST(Png, RejectsGarbage) {
  const Bytes junk{1, 2, 3, 4, 5};
  EXPECT_ERRC(decode_png(junk), Errc::Malformed);
}

TEST(Rng, ReproducibleAndInRange) {
  Rng a(7), b(7), c(8);
  bool differs = false;
  for (int i = 0; i < 1000; ++i) {
    const double u = a.uniform();
    EXPECT_EQ(u, b.uniform());
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
    if (c.next() != a.next()) differs = true;
    b.next();
  }
  EXPECT_TRUE(differs);
  Rng g(1);
  double sum = 0, sq = 0;
  for (int i = 0; i < 20000; ++i) {
    const double x = g.gaussian();
    sum += x;
    sq += x * x;
  }
  EXPECT_NEAR(sum / 20000, 0.0, 0.05);
  EXPECT_NEAR(sq / 20000, 1.0, 0.05);
}
