#pragma once

// Closed-form scalar expressions: parsing, printing, evaluation and exact
// symbolic differentiation. Connections, curves and domains in a manifest
// are written in this language.

#include <cstddef>
#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace paracon::expr {

enum class Op {
  Constant,
  Symbol,  // coordinate or named parameter; resolved against an EvalContext
  Neg,
  Sin,
  Cos,
  Tan,
  Exp,
  Log,
  Sqrt,
  Abs,
  Add,
  Sub,
  Mul,
  Div,
  Pow,
  If,  // args: lhs, rhs, then, else
};

enum class Cmp { Lt, Le, Gt, Ge };

struct Node;
using Expr = std::shared_ptr<const Node>;

struct Node {
  Op op = Op::Constant;
  double value = 0.0;
  std::string name;
  Cmp cmp = Cmp::Lt;
  std::vector<Expr> args;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " at byte " + std::to_string(offset)),
        offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

class EvalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Builders. These do no simplification, so parse(print(e)) reproduces the
// exact tree.
Expr constant(double v);
Expr symbol(std::string name);
Expr unary(Op op, Expr a);
Expr binary(Op op, Expr a, Expr b);
Expr piecewise(Cmp cmp, Expr lhs, Expr rhs, Expr then_branch, Expr else_branch);

Expr parse(std::string_view text);
std::string print(const Expr& e);

bool structurally_equal(const Expr& a, const Expr& b);
bool depends_on(const Expr& e, std::string_view name);
void collect_symbols(const Expr& e, std::vector<std::string>& out);

// Exact derivative by structural rules. Piecewise nodes are differentiated
// branchwise with the condition held fixed. Folds trivial 0/1 terms.
Expr diff(const Expr& e, std::string_view var);

struct EvalContext {
  std::map<std::string, double, std::less<>> variables;
  std::map<std::string, double, std::less<>> parameters;
};

double eval(const Expr& e, const EvalContext& ctx);

// Flattened form of an expression for the hot loops. Symbols are resolved to
// slots of a caller-owned array once at compile time.
class Program {
 public:
  Program() = default;

  // `slots` lists the symbol names in slot order; an unknown name throws.
  static Program compile(const Expr& e, std::span<const std::string> slots);

  double run(std::span<const double> slot_values) const;

  bool is_zero() const { return zero_; }

 private:
  enum class Code : unsigned char {
    Push,
    Load,
    Neg,
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Abs,
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Compare,      // pops rhs, lhs; pushes 1 or 0
    JumpIfFalse,  // pops condition
    Jump,
  };
  struct Instr {
    Code code;
    Cmp cmp = Cmp::Lt;
    std::size_t arg = 0;  // slot, jump target, or source index
    double value = 0.0;
  };

  void emit(const Expr& e, std::span<const std::string> slots);

  std::vector<Instr> code_;
  std::vector<Expr> sources_;  // sub-expressions for error messages
  std::size_t max_stack_ = 0;
  bool zero_ = false;
};

}  // namespace paracon::expr
