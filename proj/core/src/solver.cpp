// Bounded-domain solver. The last integer unknown's domain is cut at every
// point where a linear atom can change truth; each resulting segment has a
// constant truth value when all atoms are linear (exact), otherwise small
// segments are enumerated and large ones sampled. Earlier integer unknowns
// are enumerated over candidate sets; arrays are synthesized from slice
// equalities.

#include <algorithm>
#include <set>

#include "gatekeeper/constraint.hpp"
#include "gatekeeper/error.hpp"
#include "rng.hpp"

namespace gk {

namespace {

constexpr WideInt kEnumerateLimit = 4096;
constexpr int kSamplesPerSegment = 32;
constexpr WideInt kOuterProductLimit = WideInt{1} << 16;

struct Lin {
  WideInt a = 0;
  WideInt b = 0;
};

bool mentions(const Expr& e, const std::string& x) {
  const auto fv = free_variables(e);
  return std::find(fv.begin(), fv.end(), x) != fv.end();
}

WideInt floor_div(WideInt n, WideInt d) {
  WideInt q = n / d;
  if ((n % d != 0) && ((n < 0) != (d < 0))) --q;
  return q;
}

// Collects breakpoints for one integer unknown `x` with every other name
// bound through the evaluator.
class Analyzer {
 public:
  Analyzer(const StateStore& state, const Bindings& vars, const Bindings& overlay, std::string x)
      : eval_(state, vars, &overlay), state_(state), x_(std::move(x)) {}

  void analyze_bool(const Expr& e) {
    if (!mentions(e, x_)) return;
    if (const auto* u = e.as<Unary>(); u && u->op == UnaryOp::Not) {
      analyze_bool(*u->operand);
      return;
    }
    if (const auto* b = e.as<Binary>()) {
      if (is_logical(b->op)) {
        analyze_bool(*b->lhs);
        analyze_bool(*b->rhs);
        return;
      }
      if (is_comparison(b->op)) {
        key_points(e);
        if (b->op == BinaryOp::Eq || b->op == BinaryOp::Ne) {
          const Expr* other = nullptr;
          if (b->rhs->as<NullLit>()) other = b->lhs.get();
          if (b->lhs->as<NullLit>()) other = b->rhs.get();
          if (other != nullptr) {
            if (!other->as<MapRef>() || !map_keys_linear(*other->as<MapRef>())) exact = false;
            return;
          }
        }
        auto l = linear(*b->lhs);
        auto r = linear(*b->rhs);
        if (l && r) {
          WideInt a = 0;
          WideInt c = 0;
          if (__builtin_sub_overflow(l->a, r->a, &a) || __builtin_sub_overflow(l->b, r->b, &c)) {
            exact = false;
            return;
          }
          if (a != 0) {
            // a*x + c crosses zero near -c/a.
            const WideInt t = floor_div(-c, a);
            for (WideInt d = -1; d <= 2; ++d) points.push_back(t + d);
          }
          return;
        }
        exact = false;
        slice_points(e);
        return;
      }
    }
    exact = false;
    key_points(e);
    slice_points(e);
  }

  bool exact = true;
  std::vector<WideInt> points;

 private:
  std::optional<Lin> linear(const Expr& e) {
    if (!mentions(e, x_)) {
      try {
        const Value v = eval_.eval(e);
        if (!v.is_int()) return std::nullopt;
        return Lin{0, v.as_int()};
      } catch (const Error&) {
        return std::nullopt;
      }
    }
    if (const auto* n = e.as<NameRef>(); n && n->name == x_) return Lin{1, 0};
    if (const auto* u = e.as<Unary>(); u && u->op == UnaryOp::Neg) {
      auto v = linear(*u->operand);
      if (!v) return std::nullopt;
      return Lin{-v->a, -v->b};
    }
    if (const auto* b = e.as<Binary>()) {
      if (b->op != BinaryOp::Add && b->op != BinaryOp::Sub && b->op != BinaryOp::Mul) return std::nullopt;
      auto l = linear(*b->lhs);
      auto r = linear(*b->rhs);
      if (!l || !r) return std::nullopt;
      Lin out;
      bool overflow = false;
      if (b->op == BinaryOp::Add) {
        overflow = __builtin_add_overflow(l->a, r->a, &out.a) || __builtin_add_overflow(l->b, r->b, &out.b);
      } else if (b->op == BinaryOp::Sub) {
        overflow = __builtin_sub_overflow(l->a, r->a, &out.a) || __builtin_sub_overflow(l->b, r->b, &out.b);
      } else {
        if (l->a != 0 && r->a != 0) return std::nullopt;
        const Lin& var = l->a != 0 ? *l : *r;
        const WideInt k = l->a != 0 ? r->b : l->b;
        overflow = __builtin_mul_overflow(var.a, k, &out.a) || __builtin_mul_overflow(var.b, k, &out.b);
      }
      if (overflow) return std::nullopt;
      return out;
    }
    return std::nullopt;
  }

  bool map_keys_linear(const MapRef& m) {
    for (const auto& k : m.keys) {
      if (mentions(k, x_) && !linear(k)) return false;
    }
    return true;
  }

  void solve_for(const Expr& e, WideInt target) {
    auto l = linear(e);
    if (!l || l->a == 0) return;
    const WideInt n = target - l->b;
    if (n % l->a == 0) {
      const WideInt v = n / l->a;
      points.push_back(v - 1);
      points.push_back(v);
      points.push_back(v + 1);
    }
  }

  // Every existing key a MapRef over x could hit.
  void key_points(const Expr& e) {
    std::visit(
        [&](const auto& n) {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, MapRef>) {
            for (const auto& k : n.keys) key_points(k);
            for (std::size_t i = 0; i < n.keys.size(); ++i) {
              if (!mentions(n.keys[i], x_)) continue;
              for (const auto& key : state_.keys(n.map)) {
                if (key[i].is_int()) solve_for(n.keys[i], key[i].as_int());
              }
            }
          } else if constexpr (std::is_same_v<T, Unary>) {
            key_points(*n.operand);
          } else if constexpr (std::is_same_v<T, Binary>) {
            key_points(*n.lhs);
            key_points(*n.rhs);
          } else if constexpr (std::is_same_v<T, FieldRef>) {
            key_points(*n.base);
          } else if constexpr (std::is_same_v<T, IndexRef>) {
            key_points(*n.base);
            key_points(*n.index);
          } else if constexpr (std::is_same_v<T, SliceRef>) {
            key_points(*n.base);
            key_points(*n.lo);
            key_points(*n.hi);
          } else if constexpr (std::is_same_v<T, BuiltinCall>) {
            for (const auto& a : n.args) key_points(a);
          } else if constexpr (std::is_same_v<T, Quantifier>) {
            key_points(*n.body);
          }
        },
        e.node);
  }

  // Slice bounds hitting 0 or the end of their base.
  void slice_points(const Expr& e) {
    std::visit(
        [&](const auto& n) {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, SliceRef>) {
            solve_for(*n.lo, 0);
            solve_for(*n.hi, 0);
            if (!mentions(*n.base, x_)) {
              try {
                const Value base = eval_.eval(*n.base);
                WideInt len = 0;
                if (base.is_bytes()) len = static_cast<WideInt>(base.as_bytes().size());
                else if (base.is_list()) len = static_cast<WideInt>(base.as_list().size());
                solve_for(*n.hi, len);
                solve_for(*n.lo, len);
              } catch (const Error&) {
              }
            }
            slice_points(*n.lo);
            slice_points(*n.hi);
          } else if constexpr (std::is_same_v<T, Unary>) {
            slice_points(*n.operand);
          } else if constexpr (std::is_same_v<T, Binary>) {
            slice_points(*n.lhs);
            slice_points(*n.rhs);
          } else if constexpr (std::is_same_v<T, IndexRef>) {
            solve_for(*n.index, 0);
            slice_points(*n.base);
          } else if constexpr (std::is_same_v<T, FieldRef>) {
            slice_points(*n.base);
          }
        },
        e.node);
  }

  Evaluator eval_;
  const StateStore& state_;
  std::string x_;
};

struct Segment {
  WideInt lo;
  WideInt hi;
};

enum class ArrayMode { Structural, Tampered };

struct Region {
  std::vector<WideInt> outer;
  Segment seg;
  ArrayMode arrays = ArrayMode::Structural;
  bool hint = false;
  std::set<WideInt> used;
  bool exhausted = false;

  WideInt size() const { return seg.hi - seg.lo + 1; }
};

const StateStore& empty_state() {
  static const StateStore kEmpty{std::vector<MapDecl>{}};
  return kEmpty;
}

std::string assignment_key(const Bindings& b) {
  std::string out;
  for (const auto& [name, v] : b) {
    out += name;
    out.push_back('\0');
    if (v.is_int() || v.is_bytes() || v.is_str() || v.is_bool()) {
      out += canonical_key_encoding({v});
    } else {
      out += v.to_string();
    }
    out.push_back('\0');
  }
  return out;
}

class Run {
 public:
  Run(const SolveRequest& req, SolveMode mode)
      : req_(req), mode_(mode), state_(req.state ? *req.state : empty_state()), rng_(req.seed) {
    for (std::size_t i = 0; i < req.unknowns.size(); ++i) {
      const auto& u = req.unknowns[i];
      if (u.type.is_int()) {
        if (u.hi < u.lo) throw Error(ErrorCode::Unsat, "empty domain for '" + u.name + "'");
        ints_.push_back(i);
      } else {
        arrays_.push_back(i);
        overlay_[u.name] = u.initial;
      }
    }
  }

  SolveResult run() {
    if (req_.max_solutions == 0) return finish();
    if (ints_.empty()) {
      Region r;
      r.seg = {0, 0};
      regions_.push_back(r);
      if (mode_ == SolveMode::Violate && !arrays_.empty()) {
        Region t = r;
        t.arrays = ArrayMode::Tampered;
        regions_.push_back(t);
      }
    } else {
      build_regions();
    }
    return mode_ == SolveMode::Satisfy ? satisfy() : violate();
  }

 private:
  // ------------------------------------------------------------ regions
  std::vector<std::vector<WideInt>> outer_candidates() {
    std::vector<std::vector<WideInt>> per;
    WideInt product = 1;
    for (std::size_t k = 0; k + 1 < ints_.size(); ++k) {
      const auto& u = req_.unknowns[ints_[k]];
      product *= std::min<WideInt>(u.hi - u.lo + 1, kOuterProductLimit + 1);
      if (product > kOuterProductLimit) product = kOuterProductLimit + 1;
    }
    for (std::size_t k = 0; k + 1 < ints_.size(); ++k) {
      const auto& u = req_.unknowns[ints_[k]];
      std::vector<WideInt> c;
      if (product <= kOuterProductLimit) {
        for (WideInt v = u.lo; v <= u.hi; ++v) c.push_back(v);
      } else {
        std::set<WideInt> s = {u.lo, u.hi};
        for (WideInt v : {WideInt{-1}, WideInt{0}, WideInt{1}}) {
          if (v >= u.lo && v <= u.hi) s.insert(v);
        }
        for (int i = 0; i < 16; ++i) s.insert(rng_.between(u.lo, u.hi));
        c.assign(s.begin(), s.end());
      }
      per.push_back(std::move(c));
    }
    std::vector<std::vector<WideInt>> combos(1);
    for (const auto& c : per) {
      std::vector<std::vector<WideInt>> next;
      for (const auto& prefix : combos) {
        for (WideInt v : c) {
          auto p = prefix;
          p.push_back(v);
          next.push_back(std::move(p));
        }
      }
      combos = std::move(next);
    }
    return combos;
  }

  void build_regions() {
    const auto& last = req_.unknowns[ints_.back()];
    for (const auto& outer : outer_candidates()) {
      set_outer(outer);
      overlay_[last.name] = Value::wide(last.lo);
      Analyzer an(state_, req_.bindings, overlay_, last.name);
      for (const auto& c : req_.constraints) an.analyze_bool(c);
      if (mode_ == SolveMode::Violate && req_.hints) an.analyze_bool(*req_.hints);
      std::vector<WideInt> pts = {last.lo, last.hi};
      for (WideInt p : an.points) {
        if (p >= last.lo && p <= last.hi) pts.push_back(p);
      }
      std::sort(pts.begin(), pts.end());
      pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
      std::vector<Segment> segs;
      for (std::size_t i = 0; i < pts.size(); ++i) {
        segs.push_back({pts[i], pts[i]});
        if (i + 1 < pts.size() && pts[i] + 1 <= pts[i + 1] - 1) segs.push_back({pts[i] + 1, pts[i + 1] - 1});
      }
      for (const auto& s : segs) add_segment(outer, s, an.exact);
    }
  }

  void add_segment(const std::vector<WideInt>& outer, Segment s, bool exact) {
    auto push = [&](Segment seg) {
      Region r;
      r.outer = outer;
      r.seg = seg;
      classify_and_add(std::move(r));
    };
    if (exact || s.hi == s.lo) {
      push(s);
    } else if (s.hi - s.lo + 1 <= kEnumerateLimit) {
      for (WideInt v = s.lo; v <= s.hi; ++v) push({v, v});
    } else {
      std::set<WideInt> picks = {s.lo, s.hi};
      for (int i = 0; i < kSamplesPerSegment; ++i) picks.insert(rng_.between(s.lo, s.hi));
      for (WideInt v : picks) push({v, v});
    }
  }

  // Keeps regions whose representative has the wanted truth value.
  void classify_and_add(Region r) {
    const WideInt rep = r.seg.lo == r.seg.hi ? r.seg.lo : rng_.between(r.seg.lo, r.seg.hi);
    if (mode_ == SolveMode::Satisfy) {
      regions_.push_back(std::move(r));
      return;
    }
    auto structural = candidate(r.outer, rep, ArrayMode::Structural);
    if (structural.second) {
      r.hint = hint_holds(structural.first);
      regions_.push_back(r);
    } else if (!arrays_.empty()) {
      auto tampered = candidate(r.outer, rep, ArrayMode::Tampered);
      if (tampered.second) {
        r.arrays = ArrayMode::Tampered;
        r.hint = hint_holds(tampered.first);
        regions_.push_back(std::move(r));
      }
    }
  }

  // --------------------------------------------------------- candidates
  void set_outer(const std::vector<WideInt>& outer) {
    for (std::size_t k = 0; k < outer.size(); ++k) {
      const auto& u = req_.unknowns[ints_[k]];
      overlay_[u.name] = Value::integer(u.type.int_kind(), outer[k]);
    }
  }

  // Builds the assignment for (outer, x) and reports whether it has the
  // truth value the mode asks for.
  std::pair<Bindings, bool> candidate(const std::vector<WideInt>& outer, WideInt x, ArrayMode arrays) {
    set_outer(outer);
    if (!ints_.empty()) {
      const auto& u = req_.unknowns[ints_.back()];
      overlay_[u.name] = Value::integer(u.type.int_kind(), x);
    }
    bool feasible = true;
    std::vector<std::pair<std::string, std::pair<std::size_t, std::size_t>>> written;
    for (std::size_t ai : arrays_) {
      const auto& u = req_.unknowns[ai];
      overlay_[u.name] = u.initial;
      for (const auto& c : req_.constraints) synthesize(c, u.name, feasible, written);
    }
    if (arrays == ArrayMode::Tampered) {
      bool flipped = false;
      for (const auto& [name, range] : written) {
        if (range.second > range.first) {
          auto& bytes = overlay_[name].mutable_bytes();
          const std::size_t pos = range.first + static_cast<std::size_t>(
                                                    rng_.between(0, static_cast<WideInt>(range.second - range.first - 1)));
          bytes[pos] ^= 0xff;
          flipped = true;
          break;
        }
      }
      if (!flipped) return {overlay_, false};
    }
    bool all = feasible || mode_ == SolveMode::Violate;
    if (all) {
      all = std::all_of(req_.constraints.begin(), req_.constraints.end(), [&](const Expr& c) {
        return holds(c, state_, req_.bindings, &overlay_);
      });
    }
    if (!feasible && mode_ == SolveMode::Satisfy) all = false;
    Bindings assignment;
    for (const auto& u : req_.unknowns) assignment[u.name] = overlay_.at(u.name);
    return {std::move(assignment), mode_ == SolveMode::Satisfy ? all : !all};
  }

  // Copies the other side of positive-context slice equalities into `name`.
  void synthesize(const Expr& e, const std::string& name, bool& feasible,
                  std::vector<std::pair<std::string, std::pair<std::size_t, std::size_t>>>& written) {
    if (const auto* b = e.as<Binary>()) {
      if (b->op == BinaryOp::And) {
        synthesize(*b->lhs, name, feasible, written);
        synthesize(*b->rhs, name, feasible, written);
        return;
      }
      if (b->op == BinaryOp::Implies) {
        if (holds(*b->lhs, state_, req_.bindings, &overlay_)) synthesize(*b->rhs, name, feasible, written);
        return;
      }
      if (b->op == BinaryOp::Eq) {
        const Expr* target = nullptr;
        const Expr* source = nullptr;
        if (targets(*b->lhs, name) && !mentions(*b->rhs, name)) {
          target = b->lhs.get();
          source = b->rhs.get();
        } else if (targets(*b->rhs, name) && !mentions(*b->lhs, name)) {
          target = b->rhs.get();
          source = b->lhs.get();
        }
        if (target == nullptr) return;
        try {
          Evaluator ev(state_, req_.bindings, &overlay_);
          const Value src = ev.eval(*source);
          if (!src.is_bytes()) return;
          std::size_t lo = 0;
          if (const auto* sl = target->as<SliceRef>()) {
            const WideInt l = ev.eval(*sl->lo).as_int();
            if (l < 0) {
              feasible = false;
              return;
            }
            lo = static_cast<std::size_t>(l);
          }
          auto& bytes = overlay_[name].mutable_bytes();
          const auto& data = src.as_bytes();
          if (lo + data.size() > bytes.size()) feasible = false;
          for (std::size_t i = 0; i < data.size() && lo + i < bytes.size(); ++i) bytes[lo + i] = data[i];
          written.emplace_back(name, std::make_pair(std::min(lo, bytes.size()),
                                                    std::min(lo + data.size(), bytes.size())));
        } catch (const Error&) {
        }
      }
    }
  }

  static bool targets(const Expr& e, const std::string& name) {
    if (const auto* n = e.as<NameRef>()) return n->name == name;
    if (const auto* sl = e.as<SliceRef>()) {
      const auto* n = sl->base->as<NameRef>();
      return n != nullptr && n->name == name;
    }
    return false;
  }

  bool hint_holds(const Bindings& assignment) {
    if (!req_.hints) return false;
    return holds(*req_.hints, state_, req_.bindings, &assignment);
  }

  // Next unused value of a region: endpoints first, then random interior.
  std::optional<WideInt> draw(Region& r) {
    if (r.exhausted) return std::nullopt;
    if (static_cast<WideInt>(r.used.size()) >= r.size()) {
      r.exhausted = true;
      return std::nullopt;
    }
    for (WideInt v : {r.seg.lo, r.seg.hi}) {
      if (r.used.insert(v).second) return v;
    }
    for (int attempt = 0; attempt < 8; ++attempt) {
      const WideInt v = rng_.between(r.seg.lo, r.seg.hi);
      if (r.used.insert(v).second) return v;
    }
    if (r.size() <= kEnumerateLimit) {
      for (WideInt v = r.seg.lo; v <= r.seg.hi; ++v) {
        if (r.used.insert(v).second) return v;
      }
    }
    r.exhausted = true;
    return std::nullopt;
  }

  bool emit(const Bindings& assignment) {
    if (!seen_.insert(assignment_key(assignment)).second) return false;
    out_.push_back(assignment);
    return true;
  }

  // Round-robin over regions until enough solutions or all are exhausted.
  void round_robin(std::vector<Region*>& group) {
    bool progress = true;
    while (progress && out_.size() < req_.max_solutions) {
      progress = false;
      for (Region* r : group) {
        if (out_.size() >= req_.max_solutions) return;
        auto v = draw(*r);
        while (v) {
          auto [assignment, good] = candidate(r->outer, *v, r->arrays);
          if (good && emit(assignment)) {
            progress = true;
            break;
          }
          v = draw(*r);
        }
      }
    }
  }

  SolveResult satisfy() {
    std::vector<Region*> order;
    for (auto& r : regions_) order.push_back(&r);
    rng_.shuffle(order);
    std::vector<Region*> good;
    for (Region* r : order) {
      if (out_.size() >= req_.max_solutions) break;
      const WideInt rep = r->seg.lo == r->seg.hi ? r->seg.lo : rng_.between(r->seg.lo, r->seg.hi);
      r->used.insert(rep);
      auto [assignment, ok] = candidate(r->outer, rep, ArrayMode::Structural);
      if (!ok) continue;
      emit(assignment);
      good.push_back(r);
    }
    if (out_.size() < req_.max_solutions) round_robin(good);
    return finish();
  }

  SolveResult violate() {
    std::vector<Region*> hinted;
    std::vector<Region*> plain;
    for (auto& r : regions_) (r.hint ? hinted : plain).push_back(&r);
    rng_.shuffle(hinted);
    rng_.shuffle(plain);
    round_robin(hinted);
    round_robin(plain);
    return finish();
  }

  SolveResult finish() {
    SolveResult res;
    res.solutions = std::move(out_);
    if (res.solutions.size() >= req_.max_solutions) {
      res.status = SolveResult::Status::Solutions;
    } else if (mode_ == SolveMode::Satisfy) {
      res.status = res.solutions.empty() ? SolveResult::Status::Unsat : SolveResult::Status::Solutions;
    } else {
      res.status = SolveResult::Status::DomainExhausted;
    }
    return res;
  }

  const SolveRequest& req_;
  SolveMode mode_;
  const StateStore& state_;
  detail::Rng rng_;
  std::vector<std::size_t> ints_;
  std::vector<std::size_t> arrays_;
  Bindings overlay_;
  std::vector<Region> regions_;
  std::set<std::string> seen_;
  std::vector<Bindings> out_;
};

}  // namespace

Unknown make_unknown(std::string name, const GkType& type, Value initial) {
  Unknown u;
  u.name = std::move(name);
  u.type = type;
  u.initial = std::move(initial);
  if (type.is_int()) {
    const auto r = int_range(type.int_kind());
    u.lo = std::max<WideInt>(r.min, -(WideInt{1} << 31));
    u.hi = std::min<WideInt>(r.max, (WideInt{1} << 31) - 1);
  }
  return u;
}

SolveResult BoundedSolver::solve(const SolveRequest& req) { return Run(req, SolveMode::Satisfy).run(); }

SolveResult BoundedSolver::solve_violations(const SolveRequest& req) {
  return Run(req, SolveMode::Violate).run();
}

SolveResult solve(const SolveRequest& req) { return BoundedSolver{}.solve(req); }

SolveResult solve_violations(const SolveRequest& req) { return BoundedSolver{}.solve_violations(req); }

}  // namespace gk
