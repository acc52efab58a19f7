/*
 Copyright 2026 The horizon-pmp Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#include "horizon_pmp/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <set>

#include <fmt/format.h>

#include "horizon_pmp/errors.hpp"

namespace hpmp {

namespace {

enum class Tok { Number, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, End };

struct Token {
  Tok kind = Tok::End;
  std::size_t offset = 0;
  std::string text;
  double number = 0.0;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  Token next() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    Token t;
    t.offset = pos_;
    if (pos_ >= src_.size()) return t;
    const char c = src_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t end = pos_;
      while (end < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[end])) || src_[end] == '_'))
        ++end;
      t.kind = Tok::Ident;
      t.text = std::string(src_.substr(pos_, end - pos_));
      pos_ = end;
      return t;
    }
    ++pos_;
    switch (c) {
      case '+': t.kind = Tok::Plus; return t;
      case '-': t.kind = Tok::Minus; return t;
      case '*': t.kind = Tok::Star; return t;
      case '/': t.kind = Tok::Slash; return t;
      case '^': t.kind = Tok::Caret; return t;
      case '(': t.kind = Tok::LParen; return t;
      case ')': t.kind = Tok::RParen; return t;
      default: break;
    }
    throw ParseError(fmt::format("unexpected character '{}'", c), t.offset);
  }

 private:
  Token number() {
    Token t;
    t.offset = pos_;
    std::size_t end = pos_;
    auto digits = [&] {
      const std::size_t start = end;
      while (end < src_.size() && std::isdigit(static_cast<unsigned char>(src_[end]))) ++end;
      return end - start;
    };
    std::size_t count = digits();
    if (end < src_.size() && src_[end] == '.') {
      ++end;
      count += digits();
    }
    if (count == 0) throw ParseError("malformed number", t.offset);
    if (end < src_.size() && (src_[end] == 'e' || src_[end] == 'E')) {
      std::size_t save = end;
      ++end;
      if (end < src_.size() && (src_[end] == '+' || src_[end] == '-')) ++end;
      if (digits() == 0) end = save;  // "2e" is 2 followed by identifier e
    }
    t.kind = Tok::Number;
    t.text = std::string(src_.substr(pos_, end - pos_));
    t.number = std::strtod(t.text.c_str(), nullptr);
    if (!std::isfinite(t.number)) throw ParseError("number out of range", t.offset);
    pos_ = end;
    return t;
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

class Parser {
 public:
  Parser(std::string_view src, const std::vector<std::string>& symbols)
      : lexer_(src), symbols_(symbols) {
    advance();
  }

  std::vector<ExprNode> run(int& root) {
    if (cur_.kind == Tok::End) throw ParseError("empty input", cur_.offset);
    root = expr();
    if (cur_.kind != Tok::End) throw ParseError("unexpected trailing input", cur_.offset);
    return std::move(nodes_);
  }

 private:
  void advance() { cur_ = lexer_.next(); }

  int add(ExprNode n) {
    nodes_.push_back(n);
    return static_cast<int>(nodes_.size()) - 1;
  }

  int binary(NodeKind k, int l, int r, std::size_t off) {
    ExprNode n;
    n.kind = k;
    n.lhs = l;
    n.rhs = r;
    n.offset = off;
    return add(n);
  }

  int expr() {
    int l = term();
    while (cur_.kind == Tok::Plus || cur_.kind == Tok::Minus) {
      const auto k = cur_.kind == Tok::Plus ? NodeKind::Add : NodeKind::Sub;
      const auto off = cur_.offset;
      advance();
      l = binary(k, l, term(), off);
    }
    return l;
  }

  int term() {
    int l = unary();
    while (cur_.kind == Tok::Star || cur_.kind == Tok::Slash) {
      const auto k = cur_.kind == Tok::Star ? NodeKind::Mul : NodeKind::Div;
      const auto off = cur_.offset;
      advance();
      l = binary(k, l, unary(), off);
    }
    return l;
  }

  int unary() {
    if (cur_.kind == Tok::Minus) {
      const auto off = cur_.offset;
      advance();
      ExprNode n;
      n.kind = NodeKind::Negate;
      n.lhs = unary();
      n.offset = off;
      return add(n);
    }
    if (cur_.kind == Tok::Plus) {
      advance();
      return unary();
    }
    return power();
  }

  int power() {
    int base = primary();
    if (cur_.kind == Tok::Caret) {
      const auto off = cur_.offset;
      advance();
      return binary(NodeKind::Pow, base, unary(), off);
    }
    return base;
  }

  int primary() {
    const Token t = cur_;
    switch (t.kind) {
      case Tok::Number: {
        advance();
        ExprNode n;
        n.kind = NodeKind::Constant;
        n.constant = t.number;
        n.offset = t.offset;
        return add(n);
      }
      case Tok::LParen: {
        advance();
        int inner = expr();
        expect_rparen();
        return inner;
      }
      case Tok::Ident: {
        advance();
        if (cur_.kind == Tok::LParen) {
          const NodeKind k = function_kind(t);
          advance();
          ExprNode n;
          n.kind = k;
          n.lhs = expr();
          n.offset = t.offset;
          expect_rparen();
          return add(n);
        }
        for (std::size_t i = 0; i < symbols_.size(); ++i) {
          if (symbols_[i] == t.text) {
            ExprNode n;
            n.kind = NodeKind::Variable;
            n.symbol = i;
            n.offset = t.offset;
            return add(n);
          }
        }
        throw ParseError(fmt::format("unknown identifier '{}'", t.text), t.offset);
      }
      case Tok::End:
        throw ParseError("unexpected end of input", t.offset);
      default:
        throw ParseError("expected operand", t.offset);
    }
  }

  static NodeKind function_kind(const Token& t) {
    static const std::map<std::string, NodeKind, std::less<>> kFunctions = {
        {"exp", NodeKind::Exp},   {"log", NodeKind::Log},   {"sin", NodeKind::Sin},
        {"cos", NodeKind::Cos},   {"sqrt", NodeKind::Sqrt}, {"abs", NodeKind::Abs}};
    auto it = kFunctions.find(t.text);
    if (it == kFunctions.end()) throw ParseError(fmt::format("unknown function '{}'", t.text), t.offset);
    return it->second;
  }

  void expect_rparen() {
    if (cur_.kind != Tok::RParen) throw ParseError("expected ')'", cur_.offset);
    advance();
  }

  Lexer lexer_;
  const std::vector<std::string>& symbols_;
  Token cur_;
  std::vector<ExprNode> nodes_;
};

const char* function_name(NodeKind k) {
  switch (k) {
    case NodeKind::Exp: return "exp";
    case NodeKind::Log: return "log";
    case NodeKind::Sin: return "sin";
    case NodeKind::Cos: return "cos";
    case NodeKind::Sqrt: return "sqrt";
    case NodeKind::Abs: return "abs";
    default: return "";
  }
}

const char* operator_text(NodeKind k) {
  switch (k) {
    case NodeKind::Add: return " + ";
    case NodeKind::Sub: return " - ";
    case NodeKind::Mul: return " * ";
    case NodeKind::Div: return " / ";
    case NodeKind::Pow: return " ^ ";
    default: return "";
  }
}

bool is_integer(double v) { return std::floor(v) == v; }

// Shared evaluator: `Value` is double or DualValue.
template <typename Value>
class Evaluator {
 public:
  Evaluator(const std::vector<ExprNode>& nodes, std::span<const double> values, std::size_t seed,
            const Expr& owner)
      : nodes_(nodes), values_(values), seed_(seed), owner_(owner) {}

  Value run(int i) {
    const ExprNode& n = nodes_[static_cast<std::size_t>(i)];
    Value out{};
    switch (n.kind) {
      case NodeKind::Constant: out = make(n.constant, 0.0); break;
      case NodeKind::Variable: out = make(values_[n.symbol], n.symbol == seed_ ? 1.0 : 0.0); break;
      case NodeKind::Negate: {
        Value a = run(n.lhs);
        out = make(-val(a), -der(a));
        break;
      }
      case NodeKind::Exp: {
        Value a = run(n.lhs);
        const double e = std::exp(val(a));
        out = make(e, e * der(a));
        break;
      }
      case NodeKind::Log: {
        Value a = run(n.lhs);
        if (!(val(a) > 0.0)) fail("log of nonpositive argument", i);
        out = make(std::log(val(a)), der(a) / val(a));
        break;
      }
      case NodeKind::Sin: {
        Value a = run(n.lhs);
        out = make(std::sin(val(a)), std::cos(val(a)) * der(a));
        break;
      }
      case NodeKind::Cos: {
        Value a = run(n.lhs);
        out = make(std::cos(val(a)), -std::sin(val(a)) * der(a));
        break;
      }
      case NodeKind::Sqrt: {
        Value a = run(n.lhs);
        if (val(a) < 0.0) fail("sqrt of negative argument", i);
        const double s = std::sqrt(val(a));
        double d = 0.0;
        if (der(a) != 0.0) {
          if (s == 0.0) fail("sqrt is not differentiable at zero", i);
          d = der(a) / (2.0 * s);
        }
        out = make(s, d);
        break;
      }
      case NodeKind::Abs: {
        Value a = run(n.lhs);
        const double sign = val(a) > 0.0 ? 1.0 : (val(a) < 0.0 ? -1.0 : 0.0);
        out = make(std::abs(val(a)), sign * der(a));
        break;
      }
      case NodeKind::Add: {
        Value a = run(n.lhs), b = run(n.rhs);
        out = make(val(a) + val(b), der(a) + der(b));
        break;
      }
      case NodeKind::Sub: {
        Value a = run(n.lhs), b = run(n.rhs);
        out = make(val(a) - val(b), der(a) - der(b));
        break;
      }
      case NodeKind::Mul: {
        Value a = run(n.lhs), b = run(n.rhs);
        out = make(val(a) * val(b), der(a) * val(b) + val(a) * der(b));
        break;
      }
      case NodeKind::Div: {
        Value a = run(n.lhs), b = run(n.rhs);
        if (val(b) == 0.0) fail("division by zero", i);
        const double q = val(a) / val(b);
        out = make(q, (der(a) - q * der(b)) / val(b));
        break;
      }
      case NodeKind::Pow: out = power(n, i); break;
    }
    if (!std::isfinite(val(out)) || !std::isfinite(der(out))) fail("non-finite result", i);
    return out;
  }

 private:
  Value power(const ExprNode& n, int i) {
    Value a = run(n.lhs), b = run(n.rhs);
    const double x = val(a), y = val(b);
    if (x == 0.0 && y < 0.0) fail("zero raised to a negative power", i);
    if (x < 0.0 && !is_integer(y)) fail("negative base with non-integer exponent", i);
    const double p = std::pow(x, y);
    double d = 0.0;
    if (der(a) != 0.0) {
      if (x == 0.0 && y < 1.0 && y != 0.0) fail("power is not differentiable at zero", i);
      d += y == 0.0 ? 0.0 : y * std::pow(x, y - 1.0) * der(a);
    }
    if (der(b) != 0.0) {
      if (x <= 0.0) {
        if (!(x == 0.0 && y > 0.0)) fail("variable exponent requires a positive base", i);
      } else {
        d += p * std::log(x) * der(b);
      }
    }
    return make(p, d);
  }

  [[noreturn]] void fail(const char* what, int i) const {
    throw DomainError(what, owner_print(i));
  }

  std::string owner_print(int i) const;

  static Value make(double v, double d) {
    if constexpr (std::is_same_v<Value, double>) {
      (void)d;
      return v;
    } else {
      return DualValue{v, d};
    }
  }
  static double val(const Value& v) {
    if constexpr (std::is_same_v<Value, double>) return v;
    else return v.value;
  }
  static double der(const Value& v) {
    if constexpr (std::is_same_v<Value, double>) return 0.0;
    else return v.derivative;
  }

  const std::vector<ExprNode>& nodes_;
  std::span<const double> values_;
  std::size_t seed_;
  const Expr& owner_;
};

constexpr std::size_t kNoSeed = static_cast<std::size_t>(-1);

}  // namespace

// Friend access to print_node is needed from the evaluator; route through a helper.
struct ExprAccess {
  static std::string print_node(const Expr& e, int i);
};

namespace {
template <typename Value>
std::string Evaluator<Value>::owner_print(int i) const {
  return ExprAccess::print_node(owner_, i);
}
}  // namespace

double Expr::eval(std::span<const double> values) const {
  if (values.size() < symbols_->size()) throw UnboundVariableError("too few symbol values for expression");
  Evaluator<double> ev(*nodes_, values, kNoSeed, *this);
  return ev.run(root_);
}

DualValue Expr::eval_dual(std::span<const double> values, std::size_t seed) const {
  if (values.size() < symbols_->size()) throw UnboundVariableError("too few symbol values for expression");
  Evaluator<DualValue> ev(*nodes_, values, seed, *this);
  return ev.run(root_);
}

namespace {
std::vector<double> bind(const Expr& e, const std::map<std::string, double>& env) {
  const auto& syms = e.symbols();
  std::vector<double> values(syms.size(), 0.0);
  for (std::size_t i = 0; i < syms.size(); ++i) {
    auto it = env.find(syms[i]);
    if (it != env.end()) {
      values[i] = it->second;
    } else if (e.uses(i)) {
      throw UnboundVariableError(fmt::format("unbound variable '{}'", syms[i]));
    }
  }
  return values;
}
}  // namespace

double Expr::eval(const std::map<std::string, double>& env) const { return eval(bind(*this, env)); }

DualValue Expr::eval_dual(const std::map<std::string, double>& env, std::string_view seed) const {
  const auto values = bind(*this, env);
  std::size_t index = kNoSeed;
  for (std::size_t i = 0; i < symbols_->size(); ++i)
    if ((*symbols_)[i] == seed) index = i;
  if (index == kNoSeed || !env.contains(std::string(seed)))
    throw UnboundVariableError(fmt::format("seed variable '{}' is not bound", seed));
  return eval_dual(values, index);
}

bool Expr::uses(std::size_t i) const {
  if (!nodes_) return false;
  for (const auto& n : *nodes_)
    if (n.kind == NodeKind::Variable && n.symbol == i) return true;
  return false;
}

std::string Expr::print() const { return nodes_ ? print_node(root_) : std::string(); }

std::string ExprAccess::print_node(const Expr& e, int i) { return e.print_node(i); }

std::string Expr::print_node(int i) const {
  const ExprNode& n = (*nodes_)[static_cast<std::size_t>(i)];
  switch (n.kind) {
    case NodeKind::Constant: return fmt::format("{:.17g}", n.constant);
    case NodeKind::Variable: return (*symbols_)[n.symbol];
    case NodeKind::Negate: return "(-" + print_node(n.lhs) + ")";
    case NodeKind::Add:
    case NodeKind::Sub:
    case NodeKind::Mul:
    case NodeKind::Div:
    case NodeKind::Pow:
      return "(" + print_node(n.lhs) + operator_text(n.kind) + print_node(n.rhs) + ")";
    default: return std::string(function_name(n.kind)) + "(" + print_node(n.lhs) + ")";
  }
}

bool Expr::equal_nodes(int i, const Expr& other, int j) const {
  const ExprNode& a = (*nodes_)[static_cast<std::size_t>(i)];
  const ExprNode& b = (*other.nodes_)[static_cast<std::size_t>(j)];
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case NodeKind::Constant: return a.constant == b.constant;
    case NodeKind::Variable: return (*symbols_)[a.symbol] == (*other.symbols_)[b.symbol];
    default: break;
  }
  if (!equal_nodes(a.lhs, other, b.lhs)) return false;
  return a.rhs < 0 || equal_nodes(a.rhs, other, b.rhs);
}

bool operator==(const Expr& a, const Expr& b) {
  if (a.empty() || b.empty()) return a.empty() == b.empty();
  return a.equal_nodes(a.root_, b, b.root_);
}

Expr parse(std::string_view source, std::span<const std::string> symbols) {
  if (symbols.empty()) throw PreconditionError("symbol set must be nonempty");
  std::set<std::string> distinct(symbols.begin(), symbols.end());
  if (distinct.size() != symbols.size()) throw PreconditionError("symbol names must be distinct");

  auto syms = std::make_shared<const std::vector<std::string>>(symbols.begin(), symbols.end());
  Parser parser(source, *syms);
  Expr e;
  int root = -1;
  auto nodes = parser.run(root);
  e.nodes_ = std::make_shared<const std::vector<ExprNode>>(std::move(nodes));
  e.symbols_ = std::move(syms);
  e.source_ = std::make_shared<const std::string>(source);
  e.root_ = root;
  return e;
}

Expr parse(std::string_view source, std::initializer_list<std::string> symbols) {
  std::vector<std::string> s(symbols);
  return parse(source, std::span<const std::string>(s));
}

}  // namespace hpmp
