// Lexer and recursive-descent parser for model sources.

#include <cctype>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "gatekeeper/frontend.hpp"

namespace gk {

namespace {

enum class TokKind { Ident, Int, Str, Char, Punct, End };

struct Token {
  TokKind kind = TokKind::End;
  std::string text;  // identifier / punctuation / decoded string
  WideInt int_value = 0;
  SourceLoc loc;
};

struct ParseFailure {
  Diagnostic diag;
};

[[noreturn]] void fail(ErrorCode code, SourceLoc loc, std::string message) {
  throw ParseFailure{Diagnostic{code, loc, std::move(message)}};
}

// Longest punctuation first so "::" wins over ":" and "<<" over "<".
constexpr std::string_view kPunct[] = {
    ":=", "::", "->", "==", "!=", "<=", ">=", "<<", ">>", "&&", "||", "(", ")", "{",
    "}",  "[",  "]",  ",",  ";",  ":",  ".",  "<",  ">",  "+",  "-",  "*", "/", "%",
    "&",  "|",  "^",  "!",
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_space_and_comments();
      Token t;
      t.loc = {line_, col_};
      if (pos_ >= src_.size()) {
        t.kind = TokKind::End;
        out.push_back(std::move(t));
        return out;
      }
      const char c = src_[pos_];
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        t.kind = TokKind::Ident;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
          t.text.push_back(advance());
        }
      } else if (std::isdigit(static_cast<unsigned char>(c))) {
        t.kind = TokKind::Int;
        t.int_value = lex_int(t.loc);
      } else if (c == '"') {
        t.kind = TokKind::Str;
        advance();
        while (true) {
          if (pos_ >= src_.size() || src_[pos_] == '\n') {
            fail(ErrorCode::SyntaxError, t.loc, "unterminated string literal");
          }
          if (src_[pos_] == '"') {
            advance();
            break;
          }
          t.text.push_back(lex_char_in_literal(t.loc));
        }
      } else if (c == '\'') {
        t.kind = TokKind::Char;
        advance();
        if (pos_ >= src_.size() || src_[pos_] == '\'') {
          fail(ErrorCode::SyntaxError, t.loc, "empty character literal");
        }
        t.int_value = static_cast<unsigned char>(lex_char_in_literal(t.loc));
        if (pos_ >= src_.size() || src_[pos_] != '\'') {
          fail(ErrorCode::SyntaxError, t.loc, "unterminated character literal");
        }
        advance();
      } else {
        bool matched = false;
        for (auto p : kPunct) {
          if (src_.substr(pos_, p.size()) == p) {
            t.kind = TokKind::Punct;
            t.text = std::string(p);
            for (std::size_t i = 0; i < p.size(); ++i) advance();
            matched = true;
            break;
          }
        }
        if (!matched) {
          fail(ErrorCode::SyntaxError, t.loc,
               std::string("unexpected character '") + c + "'");
        }
      }
      out.push_back(std::move(t));
    }
  }

 private:
  char advance() {
    const char c = src_[pos_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }

  void skip_space_and_comments() {
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
  }

  WideInt lex_int(SourceLoc loc) {
    int base = 10;
    if (src_[pos_] == '0' && pos_ + 1 < src_.size() &&
        (src_[pos_ + 1] == 'x' || src_[pos_ + 1] == 'X')) {
      advance();
      advance();
      base = 16;
    } else if (src_[pos_] == '0' && pos_ + 1 < src_.size() &&
               std::isdigit(static_cast<unsigned char>(src_[pos_ + 1]))) {
      base = 8;  // C-style octal, e.g. 0644
    }
    WideInt v = 0;
    int digits = 0;
    while (pos_ < src_.size() && std::isalnum(static_cast<unsigned char>(src_[pos_]))) {
      const char c = static_cast<char>(std::tolower(static_cast<unsigned char>(src_[pos_])));
      int d = -1;
      if (c >= '0' && c <= '9') d = c - '0';
      if (c >= 'a' && c <= 'f') d = c - 'a' + 10;
      if (d < 0 || d >= base) fail(ErrorCode::SyntaxError, loc, "malformed integer literal");
      v = v * base + d;
      if (v > (static_cast<WideInt>(1) << 64)) {
        fail(ErrorCode::SyntaxError, loc, "integer literal too large");
      }
      advance();
      ++digits;
    }
    if (digits == 0) fail(ErrorCode::SyntaxError, loc, "malformed integer literal");
    return v;
  }

  char lex_char_in_literal(SourceLoc loc) {
    char c = advance();
    if (c != '\\') return c;
    if (pos_ >= src_.size()) fail(ErrorCode::SyntaxError, loc, "bad escape");
    c = advance();
    switch (c) {
      case 'n': return '\n';
      case 't': return '\t';
      case 'r': return '\r';
      case '0': return '\0';
      case '\\': return '\\';
      case '"': return '"';
      case '\'': return '\'';
      case 'x': {
        int v = 0;
        for (int i = 0; i < 2; ++i) {
          if (pos_ >= src_.size() || !std::isxdigit(static_cast<unsigned char>(src_[pos_]))) {
            fail(ErrorCode::SyntaxError, loc, "bad \\x escape");
          }
          const char h = static_cast<char>(std::tolower(static_cast<unsigned char>(advance())));
          v = v * 16 + (std::isdigit(static_cast<unsigned char>(h)) ? h - '0' : h - 'a' + 10);
        }
        return static_cast<char>(v);
      }
      default: fail(ErrorCode::SyntaxError, loc, std::string("unknown escape \\") + c);
    }
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

const std::set<std::string, std::less<>> kReserved = {
    "Map",  "returns", "action", "init",   "requires", "await",  "atomic", "if",
    "else", "return",  "extern", "call",   "delete",   "fuzz",   "NULL",   "true",
    "false", "and",    "or",     "not",    "forall",   "exists", "in",     "int",
    "off_t", "size_t", "ssize_t", "char",  "string",   "void",
};

class Parser {
 public:
  Parser(std::vector<Token> toks, std::string name) : toks_(std::move(toks)) {
    program_.name = std::move(name);
  }

  ModelProgram run() {
    while (!at_end()) {
      const Token& t = peek();
      if (is_kw("Map")) {
        parse_map();
      } else if (is_kw("action")) {
        parse_action();
      } else if (is_kw("init")) {
        parse_init();
      } else if (t.kind == TokKind::Ident) {
        fail(ErrorCode::UnknownKeyword, t.loc,
             "unknown declaration keyword '" + t.text + "' (expected Map, action or init)");
      } else {
        fail(ErrorCode::SyntaxError, t.loc, "unexpected " + describe(t));
      }
    }
    return std::move(program_);
  }

 private:
  // ------------------------------------------------------------ tokens
  const Token& peek(std::size_t ahead = 0) const {
    const auto i = std::min(pos_ + ahead, toks_.size() - 1);
    return toks_[i];
  }
  bool at_end() const { return peek().kind == TokKind::End; }
  const Token& next() {
    const Token& t = toks_[pos_];
    if (pos_ + 1 < toks_.size()) ++pos_;
    return t;
  }
  bool is_kw(std::string_view kw, std::size_t ahead = 0) const {
    const Token& t = peek(ahead);
    return t.kind == TokKind::Ident && t.text == kw;
  }
  bool is_punct(std::string_view p, std::size_t ahead = 0) const {
    const Token& t = peek(ahead);
    return t.kind == TokKind::Punct && t.text == p;
  }
  static std::string describe(const Token& t) {
    switch (t.kind) {
      case TokKind::End: return "end of input";
      case TokKind::Int: return "integer literal";
      case TokKind::Str: return "string literal";
      case TokKind::Char: return "character literal";
      default: return "'" + t.text + "'";
    }
  }
  const Token& expect_punct(std::string_view p) {
    if (!is_punct(p)) {
      fail(ErrorCode::SyntaxError, peek().loc,
           "expected '" + std::string(p) + "', found " + describe(peek()));
    }
    return next();
  }
  void expect_kw(std::string_view kw) {
    if (!is_kw(kw)) {
      fail(ErrorCode::SyntaxError, peek().loc,
           "expected '" + std::string(kw) + "', found " + describe(peek()));
    }
    next();
  }
  bool accept_punct(std::string_view p) {
    if (!is_punct(p)) return false;
    next();
    return true;
  }
  std::string expect_ident(std::string_view what) {
    const Token& t = peek();
    if (t.kind != TokKind::Ident || kReserved.count(t.text) != 0) {
      fail(ErrorCode::SyntaxError, t.loc,
           "expected " + std::string(what) + ", found " + describe(t));
    }
    next();
    return t.text;
  }

  // ------------------------------------------------------------- types
  GkType parse_type() {
    const Token& t = peek();
    if (t.kind != TokKind::Ident) {
      fail(ErrorCode::SyntaxError, t.loc, "expected a type, found " + describe(t));
    }
    GkType base;
    if (t.text == "int") base = GkType::integer(IntKind::Int);
    else if (t.text == "off_t") base = GkType::integer(IntKind::OffT);
    else if (t.text == "size_t") base = GkType::integer(IntKind::SizeT);
    else if (t.text == "ssize_t") base = GkType::integer(IntKind::SsizeT);
    else if (t.text == "char") base = GkType::integer(IntKind::Char);
    else if (t.text == "string") base = GkType::string();
    else if (t.text == "void") base = GkType::void_type();
    else fail(ErrorCode::SyntaxError, t.loc, "unknown type '" + t.text + "'");
    next();
    while (is_punct("[") && is_punct("]", 1)) {
      next();
      next();
      base = GkType::array(std::move(base));
    }
    return base;
  }

  std::vector<Param> parse_params() {
    expect_punct("(");
    std::vector<Param> out;
    if (accept_punct(")")) return out;
    for (;;) {
      Param p;
      p.name = expect_ident("parameter name");
      expect_punct(":");
      p.type = parse_type();
      out.push_back(std::move(p));
      if (accept_punct(")")) return out;
      expect_punct(",");
    }
  }

  // ------------------------------------------------------ declarations
  void parse_map() {
    MapDecl m;
    m.loc = peek().loc;
    next();
    m.name = expect_ident("map name");
    m.keys = parse_params();
    if (m.keys.empty()) fail(ErrorCode::SyntaxError, m.loc, "map '" + m.name + "' has no key");
    expect_kw("returns");
    const SourceLoc returns_loc = peek().loc;
    m.fields = parse_params();
    if (m.fields.empty()) {
      fail(ErrorCode::SyntaxError, returns_loc, "map '" + m.name + "' has no value fields");
    }
    accept_punct(";");
    program_.maps.push_back(std::move(m));
  }

  void parse_action() {
    ActionDecl a;
    a.loc = peek().loc;
    next();
    a.name = expect_ident("action name");
    a.params = parse_params();
    expect_kw("returns");
    const SourceLoc returns_loc = peek().loc;
    auto results = parse_params();
    if (results.size() != 1) {
      fail(ErrorCode::SyntaxError, returns_loc,
           "action '" + a.name + "' must declare exactly one result");
    }
    a.result = std::move(results.front());
    expect_punct(":=");
    expect_punct("{");
    while (!is_punct("}")) {
      if (at_end()) fail(ErrorCode::SyntaxError, peek().loc, "unterminated action body");
      if (is_kw("fuzz")) {
        const SourceLoc loc = peek().loc;
        if (a.hints) fail(ErrorCode::DuplicateName, loc, "second fuzz block in '" + a.name + "'");
        a.hints = parse_fuzz_block();
        continue;
      }
      a.body.push_back(parse_stmt());
    }
    next();
    accept_punct(";");
    program_.actions.push_back(std::move(a));
  }

  Expr parse_fuzz_block() {
    next();  // fuzz
    expect_punct("{");
    expect_kw("requires");
    expect_punct("(");
    Expr e = parse_expr();
    expect_punct(")");
    expect_punct(";");
    expect_punct("}");
    accept_punct(";");
    return e;
  }

  void parse_init() {
    next();
    expect_punct("{");
    while (!accept_punct("}")) {
      if (at_end()) fail(ErrorCode::SyntaxError, peek().loc, "unterminated init block");
      InitAssignment ia;
      ia.loc = peek().loc;
      ia.target = parse_postfix();
      expect_punct(":=");
      ia.value = parse_expr();
      expect_punct(";");
      program_.init.push_back(std::move(ia));
    }
    accept_punct(";");
  }

  // -------------------------------------------------------- statements
  std::vector<Stmt> parse_block_body() {
    expect_punct("{");
    std::vector<Stmt> body;
    while (!accept_punct("}")) {
      if (at_end()) fail(ErrorCode::SyntaxError, peek().loc, "unterminated block");
      if (is_kw("fuzz")) {
        fail(ErrorCode::SyntaxError, peek().loc, "fuzz blocks must appear at action level");
      }
      body.push_back(parse_stmt());
    }
    return body;
  }

  std::vector<Stmt> parse_branch() {
    if (is_punct("{")) return parse_block_body();
    std::vector<Stmt> body;
    body.push_back(parse_stmt());
    return body;
  }

  Expr parse_rhs() {
    if (is_kw("extern")) return parse_extern_call();
    return parse_expr();
  }

  Expr parse_extern_call() {
    const SourceLoc loc = peek().loc;
    next();
    expect_kw("call");
    ExternCall call;
    call.fn = expect_ident("extern function name");
    call.args = parse_args();
    return make_expr(std::move(call), loc);
  }

  Stmt parse_stmt() {
    Stmt s;
    s.loc = peek().loc;
    if (is_kw("requires")) {
      next();
      expect_punct("(");
      Requires r{parse_expr(), false};
      expect_punct(")");
      expect_punct(";");
      s.node = std::move(r);
    } else if (is_kw("await")) {
      next();
      expect_kw("requires");
      expect_punct("(");
      Requires r{parse_expr(), true};
      expect_punct(")");
      expect_punct(";");
      s.node = std::move(r);
    } else if (is_kw("atomic")) {
      next();
      expect_punct("(");
      Atomic a;
      a.target = parse_expr();
      expect_punct(")");
      a.body = parse_block_body();
      accept_punct(";");
      s.node = std::move(a);
    } else if (is_kw("if")) {
      next();
      expect_punct("(");
      If i;
      i.cond = parse_expr();
      expect_punct(")");
      i.then_body = parse_branch();
      if (is_kw("else")) {
        next();
        i.else_body = parse_branch();
      }
      s.node = std::move(i);
    } else if (is_punct("{")) {
      s.node = Block{parse_block_body()};
      accept_punct(";");
    } else if (is_kw("return")) {
      next();
      Return r;
      if (!is_punct(";")) r.value = parse_expr();
      expect_punct(";");
      s.node = std::move(r);
    } else if (is_kw("delete")) {
      next();
      Delete d{parse_expr()};
      expect_punct(";");
      s.node = std::move(d);
    } else if (is_kw("extern")) {
      CallStmt c{parse_extern_call()};
      expect_punct(";");
      s.node = std::move(c);
    } else if (peek().kind == TokKind::Ident && is_punct(":", 1)) {
      LocalDecl d;
      d.name = expect_ident("local name");
      expect_punct(":");
      d.type = parse_type();
      expect_punct(":=");
      d.init = parse_rhs();
      expect_punct(";");
      s.node = std::move(d);
    } else {
      Assign a;
      a.target = parse_postfix();
      expect_punct(":=");
      a.value = parse_rhs();
      expect_punct(";");
      s.node = std::move(a);
    }
    return s;
  }

  // ------------------------------------------------------- expressions
  std::vector<Expr> parse_args() {
    expect_punct("(");
    std::vector<Expr> args;
    if (accept_punct(")")) return args;
    for (;;) {
      args.push_back(parse_expr());
      if (accept_punct(")")) return args;
      expect_punct(",");
    }
  }

  Expr binary(BinaryOp op, Expr lhs, Expr rhs, SourceLoc loc) {
    return make_expr(Binary{op, Box<Expr>(std::move(lhs)), Box<Expr>(std::move(rhs))}, loc);
  }

  Expr parse_expr() {
    if (is_kw("forall") || is_kw("exists")) {
      const SourceLoc loc = peek().loc;
      Quantifier q;
      q.universal = next().text == "forall";
      q.var = expect_ident("quantified variable");
      expect_kw("in");
      q.map = expect_ident("map name");
      expect_punct("::");
      q.body = Box<Expr>(parse_expr());
      return make_expr(std::move(q), loc);
    }
    Expr lhs = parse_or();
    if (is_punct("->")) {
      const SourceLoc loc = next().loc;
      Expr rhs = parse_expr();  // right associative
      return binary(BinaryOp::Implies, std::move(lhs), std::move(rhs), loc);
    }
    return lhs;
  }

  Expr parse_or() {
    Expr lhs = parse_and();
    while (is_kw("or") || is_punct("||")) {
      const SourceLoc loc = next().loc;
      lhs = binary(BinaryOp::Or, std::move(lhs), parse_and(), loc);
    }
    return lhs;
  }

  Expr parse_and() {
    Expr lhs = parse_not();
    while (is_kw("and") || is_punct("&&")) {
      const SourceLoc loc = next().loc;
      lhs = binary(BinaryOp::And, std::move(lhs), parse_not(), loc);
    }
    return lhs;
  }

  Expr parse_not() {
    if (is_kw("not") || is_punct("!")) {
      const SourceLoc loc = next().loc;
      return make_expr(Unary{UnaryOp::Not, Box<Expr>(parse_not())}, loc);
    }
    return parse_comparison();
  }

  Expr parse_comparison() {
    Expr lhs = parse_bitor();
    static const std::pair<std::string_view, BinaryOp> kOps[] = {
        {"==", BinaryOp::Eq}, {"!=", BinaryOp::Ne}, {"<=", BinaryOp::Le},
        {">=", BinaryOp::Ge}, {"<", BinaryOp::Lt},  {">", BinaryOp::Gt},
    };
    for (const auto& [text, op] : kOps) {
      if (is_punct(text)) {
        const SourceLoc loc = next().loc;
        Expr rhs = parse_bitor();
        for (const auto& [text2, op2] : kOps) {
          (void)op2;
          if (is_punct(text2)) {
            fail(ErrorCode::SyntaxError, peek().loc,
                 "comparisons do not chain; add parentheses");
          }
        }
        return binary(op, std::move(lhs), std::move(rhs), loc);
      }
    }
    return lhs;
  }

  template <class Next>
  Expr parse_left_assoc(Next next_level,
                        std::initializer_list<std::pair<std::string_view, BinaryOp>> ops) {
    Expr lhs = (this->*next_level)();
    for (;;) {
      bool matched = false;
      for (const auto& [text, op] : ops) {
        if (is_punct(text)) {
          const SourceLoc loc = next().loc;
          lhs = binary(op, std::move(lhs), (this->*next_level)(), loc);
          matched = true;
          break;
        }
      }
      if (!matched) return lhs;
    }
  }

  Expr parse_bitor() { return parse_left_assoc(&Parser::parse_bitxor, {{"|", BinaryOp::BitOr}}); }
  Expr parse_bitxor() {
    return parse_left_assoc(&Parser::parse_bitand, {{"^", BinaryOp::BitXor}});
  }
  Expr parse_bitand() {
    return parse_left_assoc(&Parser::parse_shift, {{"&", BinaryOp::BitAnd}});
  }
  Expr parse_shift() {
    return parse_left_assoc(&Parser::parse_additive,
                            {{"<<", BinaryOp::Shl}, {">>", BinaryOp::Shr}});
  }
  Expr parse_additive() {
    return parse_left_assoc(&Parser::parse_multiplicative,
                            {{"+", BinaryOp::Add}, {"-", BinaryOp::Sub}});
  }
  Expr parse_multiplicative() {
    return parse_left_assoc(&Parser::parse_unary,
                            {{"*", BinaryOp::Mul}, {"/", BinaryOp::Div}, {"%", BinaryOp::Mod}});
  }

  Expr parse_unary() {
    if (is_punct("-")) {
      const SourceLoc loc = next().loc;
      return make_expr(Unary{UnaryOp::Neg, Box<Expr>(parse_unary())}, loc);
    }
    return parse_postfix();
  }

  Expr parse_postfix() {
    Expr e = parse_primary();
    for (;;) {
      if (is_punct("[")) {
        const SourceLoc loc = next().loc;
        Expr first = parse_expr();
        if (accept_punct(":")) {
          Expr hi = parse_expr();
          expect_punct("]");
          e = make_expr(SliceRef{Box<Expr>(std::move(e)), Box<Expr>(std::move(first)),
                                 Box<Expr>(std::move(hi))},
                        loc);
        } else {
          expect_punct("]");
          e = make_expr(IndexRef{Box<Expr>(std::move(e)), Box<Expr>(std::move(first))}, loc);
        }
      } else if (is_punct(".")) {
        const SourceLoc loc = next().loc;
        std::string field = expect_ident("field name");
        e = make_expr(FieldRef{Box<Expr>(std::move(e)), std::move(field)}, loc);
      } else {
        return e;
      }
    }
  }

  Expr parse_primary() {
    const Token& t = peek();
    const SourceLoc loc = t.loc;
    switch (t.kind) {
      case TokKind::Int: {
        const WideInt v = t.int_value;
        next();
        return make_expr(IntLit{v}, loc);
      }
      case TokKind::Str: {
        std::string s = t.text;
        next();
        return make_expr(StrLit{std::move(s)}, loc);
      }
      case TokKind::Char: {
        const auto v = static_cast<std::uint8_t>(t.int_value);
        next();
        return make_expr(CharLit{v}, loc);
      }
      case TokKind::Punct:
        if (t.text == "(") {
          next();
          Expr e = parse_expr();
          expect_punct(")");
          return e;
        }
        fail(ErrorCode::SyntaxError, loc, "unexpected " + describe(t));
      case TokKind::End: fail(ErrorCode::SyntaxError, loc, "unexpected end of input");
      case TokKind::Ident: break;
    }
    if (t.text == "NULL") {
      next();
      return make_expr(NullLit{}, loc);
    }
    if (t.text == "true" || t.text == "false") {
      const bool v = t.text == "true";
      next();
      return make_expr(BoolLit{v}, loc);
    }
    if (kReserved.count(t.text) != 0) {
      fail(ErrorCode::SyntaxError, loc, "unexpected keyword '" + t.text + "'");
    }
    std::string name = t.text;
    next();
    if (is_punct("(")) {
      auto args = parse_args();
      if (name == "len") return make_expr(BuiltinCall{std::move(name), std::move(args)}, loc);
      return make_expr(MapRef{std::move(name), std::move(args)}, loc);
    }
    return make_expr(NameRef{std::move(name)}, loc);
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  ModelProgram program_;
};

}  // namespace

std::string Diagnostic::to_string() const {
  return std::to_string(loc.line) + ":" + std::to_string(loc.column) + ": " +
         std::string(gk::to_string(code)) + ": " + message;
}

Expr make_expr(Expr::Node node, SourceLoc loc) {
  Expr e;
  e.node = std::move(node);
  e.loc = loc;
  return e;
}

ParseResult parse(std::string_view source, std::string name) {
  ParseResult result;
  try {
    Lexer lexer(source);
    Parser parser(lexer.run(), std::move(name));
    result.program = parser.run();
  } catch (const ParseFailure& f) {
    result.diagnostics.push_back(f.diag);
  }
  return result;
}

}  // namespace gk
