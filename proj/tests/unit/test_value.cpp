#include <gtest/gtest.h>

#include <random>

#include "gatekeeper/error.hpp"
#include "gatekeeper/value.hpp"

namespace gk {
namespace {

TEST(IntKinds, RangesMatchCTypes) {
  EXPECT_EQ(int_range(IntKind::Int).min, WideInt(INT32_MIN));
  EXPECT_EQ(int_range(IntKind::Int).max, WideInt(INT32_MAX));
  EXPECT_EQ(int_range(IntKind::SizeT).min, 0);
  EXPECT_EQ(int_range(IntKind::SizeT).max, WideInt(UINT64_MAX));
  EXPECT_EQ(int_range(IntKind::OffT).min, WideInt(INT64_MIN));
  EXPECT_EQ(int_range(IntKind::SsizeT).max, WideInt(INT64_MAX));
  EXPECT_EQ(int_range(IntKind::Char).max, 255);
}

TEST(Value, IntegerFactoryRangeChecks) {
  EXPECT_NO_THROW(Value::integer(IntKind::Char, 255));
  try {
    Value::integer(IntKind::Char, 256);
    FAIL() << "expected RangeError";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::RangeError);
  }
  EXPECT_THROW(Value::integer(IntKind::SizeT, -1), Error);
}

TEST(Value, IntegerEqualityIgnoresKind) {
  EXPECT_EQ(Value::integer(IntKind::Int, 7), Value::integer(IntKind::SizeT, 7));
  EXPECT_EQ(Value::wide(-3), Value::integer(IntKind::OffT, -3));
  EXPECT_FALSE(Value::wide(1) == Value::wide(2));
  EXPECT_FALSE(Value::wide(0) == Value::null());
}

TEST(Value, CoerceToDeclaredTypes) {
  EXPECT_EQ(Value::wide(12).coerce_to(GkType::integer(IntKind::Char)).int_kind(), IntKind::Char);
  EXPECT_THROW(Value::wide(-1).coerce_to(GkType::integer(IntKind::SizeT)), Error);
  EXPECT_THROW(Value::str("x").coerce_to(GkType::integer(IntKind::Int)), Error);
  Value b = Value::bytes({1, 2, 3});
  EXPECT_EQ(b.coerce_to(GkType::array(GkType::integer(IntKind::Char))).as_bytes().size(), 3u);
}

TEST(Value, ZeroOfEveryDeclaredType) {
  EXPECT_EQ(Value::zero_of(GkType::integer(IntKind::OffT)).as_int(), 0);
  EXPECT_EQ(Value::zero_of(GkType::string()).as_str(), "");
  EXPECT_TRUE(Value::zero_of(GkType::array(GkType::integer(IntKind::Char))).as_bytes().empty());
}

TEST(Value, RecordFieldLookup) {
  Value r = Value::record("m", {"a", "b"}, {Value::wide(1), Value::str("x")});
  ASSERT_NE(r.field("b"), nullptr);
  EXPECT_EQ(r.field("b")->as_str(), "x");
  EXPECT_EQ(r.field("zz"), nullptr);
}

TEST(Value, WideToStringCoversExtremes) {
  EXPECT_EQ(wide_to_string(0), "0");
  EXPECT_EQ(wide_to_string(-42), "-42");
  EXPECT_EQ(wide_to_string(WideInt(UINT64_MAX)), "18446744073709551615");
  EXPECT_EQ(wide_to_string(WideInt(INT64_MIN)), "-9223372036854775808");
}

// Property: the key encoding orders integer keys numerically and string
// keys lexicographically, checked against std::sort on the raw values.
TEST(CanonicalKeys, OrderMatchesValueOrder) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<long long> d(-1'000'000, 1'000'000);
  for (int round = 0; round < 200; ++round) {
    long long a = d(rng), b = d(rng);
    const auto ka = canonical_key_encoding({Value::wide(a)});
    const auto kb = canonical_key_encoding({Value::wide(b)});
    EXPECT_EQ(a < b, ka < kb) << a << " vs " << b;
    EXPECT_EQ(a == b, ka == kb);
  }
  const std::vector<std::string> words = {"", "a", "ab", "b", "/", "/a/b", "zz"};
  for (const auto& x : words) {
    for (const auto& y : words) {
      EXPECT_EQ(x < y, canonical_key_encoding({Value::str(x)}) < canonical_key_encoding({Value::str(y)}));
    }
  }
}

TEST(CanonicalKeys, TuplesDoNotCollide) {
  EXPECT_NE(canonical_key_encoding({Value::str("a"), Value::str("bc")}),
            canonical_key_encoding({Value::str("ab"), Value::str("c")}));
}

}  // namespace
}  // namespace gk
