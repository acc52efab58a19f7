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

#pragma once

// Scalar expressions over a declared symbol set, with forward-mode derivatives.
//
// Grammar (EBNF):
//
//   expr    = term { ("+" | "-") term } ;
//   term    = unary { ("*" | "/") unary } ;
//   unary   = ("-" | "+") unary | power ;
//   power   = primary [ "^" unary ] ;            (* right-associative *)
//   primary = number | ident | func "(" expr ")" | "(" expr ")" ;
//   func    = "exp" | "log" | "sin" | "cos" | "sqrt" | "abs" ;
//   number  = digits [ "." digits ] [ ("e" | "E") [ "+" | "-" ] digits ]
//           | "." digits [ exponent ] ;
//
// `^` binds tighter than unary minus, so -x^2 is -(x^2) and 2^-1 is 0.5.

#include <cstddef>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hpmp {

/// A value together with its derivative along one seeded variable.
struct DualValue {
  double value = 0.0;
  double derivative = 0.0;
};

enum class NodeKind { Constant, Variable, Negate, Exp, Log, Sin, Cos, Sqrt, Abs, Add, Sub, Mul, Div, Pow };

struct ExprNode {
  NodeKind kind = NodeKind::Constant;
  double constant = 0.0;     // Constant
  std::size_t symbol = 0;    // Variable: index into the symbol table
  int lhs = -1;              // unary operand, or left operand
  int rhs = -1;              // right operand of binary ops
  std::size_t offset = 0;    // byte offset in the source text
};

/// Immutable parsed expression. Copies share the node storage.
class Expr {
 public:
  Expr() = default;

  [[nodiscard]] const std::vector<std::string>& symbols() const noexcept { return *symbols_; }
  [[nodiscard]] bool empty() const noexcept { return nodes_ == nullptr; }

  /// Evaluate with `values[i]` bound to `symbols()[i]`.
  [[nodiscard]] double eval(std::span<const double> values) const;
  /// Evaluate by name. Only variables occurring in the tree need a binding.
  [[nodiscard]] double eval(const std::map<std::string, double>& env) const;

  /// Value and derivative along symbol index `seed`.
  [[nodiscard]] DualValue eval_dual(std::span<const double> values, std::size_t seed) const;
  [[nodiscard]] DualValue eval_dual(const std::map<std::string, double>& env, std::string_view seed) const;

  /// Fully parenthesized text that parses back to the same tree.
  [[nodiscard]] std::string print() const;
  /// Source text the expression was parsed from.
  [[nodiscard]] const std::string& source() const noexcept { return *source_; }

  /// True if symbol index `i` occurs in the tree.
  [[nodiscard]] bool uses(std::size_t i) const;

  /// Structural equality of trees (symbol names compared, not indices).
  friend bool operator==(const Expr& a, const Expr& b);

  friend Expr parse(std::string_view source, std::span<const std::string> symbols);
  friend struct ExprAccess;

 private:
  std::shared_ptr<const std::vector<ExprNode>> nodes_;
  std::shared_ptr<const std::vector<std::string>> symbols_;
  std::shared_ptr<const std::string> source_;
  int root_ = -1;

  [[nodiscard]] std::string print_node(int i) const;
  [[nodiscard]] bool equal_nodes(int i, const Expr& other, int j) const;
};

/// Parse `source` against the declared `symbols` (nonempty, distinct).
/// Throws ParseError on syntax errors, unknown identifiers and empty input.
[[nodiscard]] Expr parse(std::string_view source, std::span<const std::string> symbols);
[[nodiscard]] Expr parse(std::string_view source, std::initializer_list<std::string> symbols);

}  // namespace hpmp
