#pragma once

// Random integer constraints over unknowns `x` and `y`, with an evaluator
// written directly in C++ so solver results can be checked by brute force.

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace gk::test {

struct RExpr {
  enum class Kind { X, Y, Const, Arith, Cmp, And, Or, Implies, Not };
  Kind kind = Kind::Const;
  long long value = 0;
  std::string op;
  std::shared_ptr<RExpr> l, r;

  std::string text() const {
    switch (kind) {
      case Kind::X: return "x";
      case Kind::Y: return "y";
      case Kind::Const: return value < 0 ? "(" + std::to_string(value) + ")" : std::to_string(value);
      case Kind::Not: return "not (" + l->text() + ")";
      case Kind::And: return "(" + l->text() + " and " + r->text() + ")";
      case Kind::Or: return "(" + l->text() + " or " + r->text() + ")";
      case Kind::Implies: return "(" + l->text() + " -> " + r->text() + ")";
      default: return "(" + l->text() + " " + op + " " + r->text() + ")";
    }
  }

  /// nullopt on an evaluation fault (division by zero).
  std::optional<long long> num(long long x, long long y) const {
    switch (kind) {
      case Kind::X: return x;
      case Kind::Y: return y;
      case Kind::Const: return value;
      default: break;
    }
    auto a = l->num(x, y);
    if (!a) return std::nullopt;
    auto b = r->num(x, y);
    if (!b) return std::nullopt;
    if (op == "+") return *a + *b;
    if (op == "-") return *a - *b;
    if (op == "*") return *a * *b;
    if (op == "&") return *a & *b;
    if (op == "|") return *a | *b;
    if (op == "^") return *a ^ *b;
    if (*b == 0) return std::nullopt;
    if (op == "/") return *a / *b;
    return *a % *b;
  }

  std::optional<bool> truth(long long x, long long y) const {
    switch (kind) {
      case Kind::Not: {
        auto a = l->truth(x, y);
        if (!a) return std::nullopt;
        return !*a;
      }
      case Kind::And:
      case Kind::Or:
      case Kind::Implies: {
        auto a = l->truth(x, y);
        if (!a) return std::nullopt;
        if (kind == Kind::And && !*a) return false;
        if (kind == Kind::Or && *a) return true;
        if (kind == Kind::Implies && !*a) return true;
        return r->truth(x, y);
      }
      default: break;
    }
    auto a = l->num(x, y);
    if (!a) return std::nullopt;
    auto b = r->num(x, y);
    if (!b) return std::nullopt;
    if (op == "==") return *a == *b;
    if (op == "!=") return *a != *b;
    if (op == "<") return *a < *b;
    if (op == "<=") return *a <= *b;
    if (op == ">") return *a > *b;
    return *a >= *b;
  }

  /// A fault makes the whole constraint false.
  bool holds(long long x, long long y) const { return truth(x, y).value_or(false); }
};

using RExprPtr = std::shared_ptr<RExpr>;

class RandomConstraints {
 public:
  explicit RandomConstraints(std::uint64_t seed) : rng_(seed) {}

  RExprPtr term(int depth) {
    auto e = std::make_shared<RExpr>();
    const int pick = static_cast<int>(rng_() % (depth <= 0 ? 3 : 5));
    if (pick == 0) {
      e->kind = RExpr::Kind::X;
    } else if (pick == 1) {
      e->kind = RExpr::Kind::Y;
    } else if (pick == 2) {
      e->kind = RExpr::Kind::Const;
      e->value = static_cast<long long>(rng_() % 33) - 16;
    } else {
      static const char* ops[] = {"+", "-", "*", "/", "%", "&", "|", "^"};
      e->kind = RExpr::Kind::Arith;
      e->op = ops[rng_() % 8];
      e->l = term(depth - 1);
      e->r = term(depth - 1);
    }
    return e;
  }

  RExprPtr formula(int depth) {
    auto e = std::make_shared<RExpr>();
    const int pick = static_cast<int>(rng_() % (depth <= 0 ? 1 : 5));
    if (pick == 0) {
      static const char* ops[] = {"==", "!=", "<", "<=", ">", ">="};
      e->kind = RExpr::Kind::Cmp;
      e->op = ops[rng_() % 6];
      e->l = term(2);
      e->r = term(1);
    } else if (pick == 1) {
      e->kind = RExpr::Kind::Not;
      e->l = formula(depth - 1);
    } else {
      e->kind = pick == 2 ? RExpr::Kind::And : pick == 3 ? RExpr::Kind::Or : RExpr::Kind::Implies;
      e->l = formula(depth - 1);
      e->r = formula(depth - 1);
    }
    return e;
  }

  /// A domain [lo, hi] for each unknown whose product has at most 2^12 points.
  std::pair<std::pair<long long, long long>, std::pair<long long, long long>> domains() {
    const int bx = static_cast<int>(rng_() % 13);
    const int by = static_cast<int>(rng_() % (13 - bx));
    const long long wx = 1LL << bx, wy = 1LL << by;
    const long long lx = static_cast<long long>(rng_() % 200) - 100 - wx / 2;
    const long long ly = static_cast<long long>(rng_() % 200) - 100 - wy / 2;
    return {{lx, lx + wx - 1}, {ly, ly + wy - 1}};
  }

  std::mt19937_64& rng() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

}  // namespace gk::test
