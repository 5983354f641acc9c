#include <gtest/gtest.h>

#include <random>

#include "gatekeeper/constraint.hpp"
#include "gatekeeper/error.hpp"
#include "support.hpp"

namespace gk {
namespace {

// One action whose post-call requires are the expressions under test; `r`
// is the call result, `x`, `y`, `b` are parameters.
struct Harness {
  ProgramPtr program;
  std::vector<ScopedConstraint> cs;
  std::unique_ptr<StateStore> state;

  explicit Harness(const std::vector<std::string>& requires_list, const std::string& extra = "") {
    std::string src = "Map m(k: int) returns (v: int, d: char[]);\n" + extra +
                      "action a(x: int, y: int, b: char[]) returns (r: ssize_t) := {\n"
                      "  r := extern call f(x, y, b);\n";
    for (const auto& c : requires_list) src += "  requires (" + c + ");\n";
    src += "}\n";
    program = compile(src);
    cs = collect_scoped_constraints(program->action("a"), program->action("a").untrusted_call);
    state = std::make_unique<StateStore>(program->program.maps);
  }
  bool eval(std::size_t i, const Bindings& b) const { return holds(cs.at(i).constraint, *state, b); }
};

Bindings xyr(WideInt x, WideInt y, WideInt r) {
  return {{"x", Value::wide(x)}, {"y", Value::wide(y)}, {"r", Value::wide(r)}, {"b", Value::bytes({})}};
}

// Oracle: each operator evaluated in C++ over random operands, checked by
// asserting `r == x OP y` holds exactly when r is the C++ result.
TEST(Evaluator, ArithmeticMatchesCpp) {
  Harness h({"r == x + y", "r == x - y", "r == x * y", "r == x / y", "r == x % y", "r == x & y", "r == x | y",
             "r == x ^ y", "r == x << 3", "r == x >> 2", "r == -x"});
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<long long> d(-100000, 100000);
  for (int i = 0; i < 500; ++i) {
    const long long x = d(rng);
    long long y = d(rng);
    if (i % 50 == 0) y = 0;
    const std::optional<long long> expect[] = {x + y,
                                               x - y,
                                               x * y,
                                               y == 0 ? std::nullopt : std::optional<long long>(x / y),
                                               y == 0 ? std::nullopt : std::optional<long long>(x % y),
                                               x & y,
                                               x | y,
                                               x ^ y,
                                               x * 8,
                                               x >> 2,
                                               -x};
    for (std::size_t k = 0; k < h.cs.size(); ++k) {
      if (!expect[k]) {
        // Division by zero is an evaluation fault, which counts as false.
        EXPECT_FALSE(h.eval(k, xyr(x, y, 0)));
        continue;
      }
      EXPECT_TRUE(h.eval(k, xyr(x, y, *expect[k]))) << k << " x=" << x << " y=" << y;
      EXPECT_FALSE(h.eval(k, xyr(x, y, *expect[k] + 1))) << k;
    }
  }
}

TEST(Evaluator, LogicalTruthTables) {
  Harness h({"x == 1 and y == 1", "x == 1 or y == 1", "x == 1 -> y == 1", "not (x == 1)", "x != y",
             "x < y", "x <= y", "x > y", "x >= y"});
  for (int x = 0; x <= 1; ++x) {
    for (int y = 0; y <= 1; ++y) {
      const bool p = x == 1, q = y == 1;
      const bool want[] = {p && q, p || q, !p || q, !p, x != y, x < y, x <= y, x > y, x >= y};
      for (std::size_t k = 0; k < h.cs.size(); ++k) EXPECT_EQ(h.eval(k, xyr(x, y, 0)), want[k]) << k;
    }
  }
}

TEST(Evaluator, MapAccessAndNull) {
  Harness h({"m(x) == NULL", "m(x).v == y", "m(x) != NULL -> m(x).v > 0"});
  EXPECT_TRUE(h.eval(0, xyr(1, 0, 0)));
  // Dereferencing an absent entry faults; holds() reports false.
  EXPECT_FALSE(h.eval(1, xyr(1, 0, 0)));
  try {
    evaluate(h.cs[1].constraint, *h.state, xyr(1, 0, 0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NullDereference);
    EXPECT_TRUE(is_evaluation_fault(e.code()));
  }
  EXPECT_TRUE(h.eval(2, xyr(1, 0, 0)));
  h.state->set("m", {Value::wide(1)}, "v", Value::wide(5));
  EXPECT_FALSE(h.eval(0, xyr(1, 0, 0)));
  EXPECT_TRUE(h.eval(1, xyr(1, 5, 0)));
  EXPECT_TRUE(h.eval(2, xyr(1, 0, 0)));
}

TEST(Evaluator, SliceSemantics) {
  Harness h({"m(0).d[x:y] == b[0:y - x]", "b[x:y] == b[x:y]", "len(b) == r"});
  h.state->set("m", {Value::wide(0)}, "d", Value::bytes({1, 2, 3}));
  auto with = [](WideInt x, WideInt y, std::vector<std::uint8_t> b) {
    Bindings out = xyr(x, y, static_cast<WideInt>(b.size()));
    out["b"] = Value::bytes(std::move(b));
    return out;
  };
  EXPECT_TRUE(h.eval(0, with(1, 3, {2, 3})));
  EXPECT_FALSE(h.eval(0, with(1, 3, {2, 4})));
  // Map fields read as zeros past their end.
  EXPECT_TRUE(h.eval(0, with(2, 5, {3, 0, 0})));
  // Variables do not: slicing past the end faults.
  EXPECT_FALSE(h.eval(1, with(0, 4, {1, 2})));
  EXPECT_TRUE(h.eval(1, with(0, 2, {1, 2})));
  EXPECT_TRUE(h.eval(2, with(0, 0, {9, 9, 9})));
  // Reversed bounds fault.
  EXPECT_FALSE(h.eval(1, with(2, 1, {1, 2, 3})));
}

TEST(Evaluator, Quantifiers) {
  Harness h({"forall k in m :: m(k).v > 0", "exists k in m :: m(k).v == x"});
  EXPECT_TRUE(h.eval(0, xyr(0, 0, 0)));   // vacuous
  EXPECT_FALSE(h.eval(1, xyr(0, 0, 0)));  // empty
  h.state->set("m", {Value::wide(1)}, "v", Value::wide(3));
  h.state->set("m", {Value::wide(2)}, "v", Value::wide(7));
  EXPECT_TRUE(h.eval(0, xyr(7, 0, 0)));
  EXPECT_TRUE(h.eval(1, xyr(7, 0, 0)));
  EXPECT_FALSE(h.eval(1, xyr(4, 0, 0)));
  h.state->set("m", {Value::wide(3)}, "v", Value::wide(0));
  EXPECT_FALSE(h.eval(0, xyr(7, 0, 0)));
}

bool faults(const Expr& e, const StateStore& st, const Bindings& b) {
  try {
    evaluate(e, st, b);
    return false;
  } catch (const Error& err) {
    return is_evaluation_fault(err.code());
  }
}

// Property: negation flips every non-faulting verdict; a faulting
// expression is false under both polarities.
TEST(Constraints, NegationFlipsVerdict) {
  Harness h({"x + y > r", "m(x).v == 1 or y < 0", "r % x == 0"});
  h.state->set("m", {Value::wide(2)}, "v", Value::wide(1));
  std::mt19937_64 rng(5);
  for (int i = 0; i < 300; ++i) {
    const Bindings b = xyr(static_cast<WideInt>(rng() % 5), static_cast<WideInt>(rng() % 9) - 4,
                           static_cast<WideInt>(rng() % 9) - 4);
    for (const auto& c : h.cs) {
      if (faults(c.constraint, *h.state, b)) {
        EXPECT_FALSE(holds(c.constraint, *h.state, b));
        EXPECT_FALSE(holds(negation(c.constraint), *h.state, b));
        continue;
      }
      EXPECT_NE(holds(c.constraint, *h.state, b), holds(negation(c.constraint), *h.state, b));
    }
  }
}

TEST(Constraints, ConjunctionOfParts) {
  Harness h({"x > 0", "y > 0"});
  const Expr both = conjunction({h.cs[0].constraint, h.cs[1].constraint});
  EXPECT_TRUE(holds(both, *h.state, xyr(1, 1, 0)));
  EXPECT_FALSE(holds(both, *h.state, xyr(1, 0, 0)));
  EXPECT_TRUE(holds(conjunction({}), *h.state, xyr(0, 0, 0)));
}

TEST(Constraints, FreeVariables) {
  Harness h({"m(x).v + r > len(b)"});
  auto vars = free_variables(h.cs[0].constraint);
  std::sort(vars.begin(), vars.end());
  EXPECT_EQ(vars, (std::vector<std::string>{"b", "r", "x"}));
}

TEST(ScopedConstraints, ReadActionAfterCall) {
  auto p = test::fs_model();
  const ActionInfo& read = p->action("read");
  auto cs = collect_scoped_constraints(read, read.untrusted_call);
  ASSERT_EQ(cs.size(), 4u);
  for (const auto& c : cs) {
    EXPECT_TRUE(c.path_condition.empty()) << c.source;
    EXPECT_FALSE(c.await);
  }
  EXPECT_EQ(cs[0].source, "nread >= 0 and nread <= cnt");
}

TEST(ScopedConstraints, PathConditionsAndAwait) {
  auto p = test::sync_model();
  const ActionInfo& trylock = p->action("mutex_trylock");
  auto cs = collect_scoped_constraints(trylock, trylock.untrusted_call);
  ASSERT_EQ(cs.size(), 3u);
  EXPECT_TRUE(cs[0].path_condition.empty());
  EXPECT_EQ(cs[1].path_condition.size(), 1u);
  EXPECT_EQ(cs[2].path_condition.size(), 1u);
  EXPECT_EQ(cs[1].atomic_map, "mutex_state");

  const ActionInfo& lock = p->action("mutex_lock");
  auto lcs = collect_scoped_constraints(lock, lock.untrusted_call);
  EXPECT_TRUE(std::any_of(lcs.begin(), lcs.end(), [](const auto& c) { return c.await; }));
}

TEST(ScopedConstraints, LocalsAreSubstituted) {
  auto p = compile(R"(
Map m(k: int) returns (v: int);
action a(x: int) returns (r: int) := {
  r := extern call f(x);
  t: int := x * 2;
  requires (r == t);
}
)");
  auto cs = collect_scoped_constraints(p->action("a"), p->action("a").untrusted_call);
  ASSERT_EQ(cs.size(), 1u);
  auto vars = free_variables(cs[0].constraint);
  EXPECT_EQ(std::count(vars.begin(), vars.end(), "t"), 0);
  StateStore st(p->program.maps);
  EXPECT_TRUE(holds(cs[0].constraint, st, {{"x", Value::wide(4)}, {"r", Value::wide(8)}}));
}

}  // namespace
}  // namespace gk
