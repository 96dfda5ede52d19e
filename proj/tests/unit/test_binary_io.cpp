#include <gtest/gtest.h>

#include <algorithm>

#include "ensdep/binary_io.hpp"
#include "ensdep/random.hpp"
#include "test_support.hpp"

using namespace ensdep;

TEST(ByteIo, LittleEndianRoundTrip) {
  ByteWriter w;
  w.u8(0xab);
  w.u16(0x1234);
  w.u32(0xdeadbeef);
  w.f32(1.5f);
  w.f64(-2.25);
  w.str("hello");
  const auto bytes = w.release();
  EXPECT_EQ(static_cast<unsigned char>(bytes[1]), 0x34);
  ByteReader r(bytes, "t");
  EXPECT_EQ(r.u8(), 0xab);
  EXPECT_EQ(r.u16(), 0x1234);
  EXPECT_EQ(r.u32(), 0xdeadbeefu);
  EXPECT_EQ(r.f32(), 1.5f);
  EXPECT_EQ(r.f64(), -2.25);
  EXPECT_EQ(r.str(), "hello");
  EXPECT_EQ(r.remaining(), 0u);
  EXPECT_THROW(r.u8(), Error);
}

TEST(ByteIo, Crc32KnownValue) { EXPECT_EQ(crc32("123456789"), 0xCBF43926u); }

TEST(ByteIo, AtomicWriteAndRead) {
  ensdep::testing::TempDir dir("bytes");
  write_file_atomic(dir / "f.bin", std::string("a\0b", 3));
  EXPECT_EQ(read_file(dir / "f.bin"), std::string("a\0b", 3));
  EXPECT_THROW(read_file(dir / "missing"), Error);
}

TEST(Random, DeterministicDraws) {
  Rng a(5), b(5);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next(), b.next());
  Rng u(6);
  for (int i = 0; i < 1000; ++i) {
    const double x = u.uniform();
    EXPECT_GE(x, 0.0);
    EXPECT_LT(x, 1.0);
    EXPECT_LT(u.below(7), 7u);
  }
  EXPECT_NE(derive_seed(1, {2}), derive_seed(1, {3}));
  EXPECT_EQ(derive_seed(1, {2, 3}), derive_seed(1, {2, 3}));
}

TEST(Random, SampleWithoutReplacementIsDistinct) {
  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const auto n = 1 + rng.below(30);
    const auto k = rng.below(n + 1);
    auto picks = sample_without_replacement(n, k, rng);
    ASSERT_EQ(picks.size(), k);
    std::sort(picks.begin(), picks.end());
    EXPECT_EQ(std::unique(picks.begin(), picks.end()), picks.end());
    for (auto p : picks) EXPECT_LT(p, n);
  }
}
