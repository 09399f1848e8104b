#include "paracon/expr.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <numbers>
#include <system_error>

namespace paracon::expr {

Expr constant(double v) {
  auto n = std::make_shared<Node>();
  n->op = Op::Constant;
  n->value = v;
  return n;
}

Expr symbol(std::string name) {
  auto n = std::make_shared<Node>();
  n->op = Op::Symbol;
  n->name = std::move(name);
  return n;
}

Expr unary(Op op, Expr a) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->args = {std::move(a)};
  return n;
}

Expr binary(Op op, Expr a, Expr b) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->args = {std::move(a), std::move(b)};
  return n;
}

Expr piecewise(Cmp cmp, Expr lhs, Expr rhs, Expr then_branch, Expr else_branch) {
  auto n = std::make_shared<Node>();
  n->op = Op::If;
  n->cmp = cmp;
  n->args = {std::move(lhs), std::move(rhs), std::move(then_branch), std::move(else_branch)};
  return n;
}

// ---------------------------------------------------------------------------
// Parser

namespace {

struct UnaryFn {
  std::string_view name;
  Op op;
};

constexpr std::array<UnaryFn, 7> kUnaryFns{{
    {"sin", Op::Sin},
    {"cos", Op::Cos},
    {"tan", Op::Tan},
    {"exp", Op::Exp},
    {"log", Op::Log},
    {"sqrt", Op::Sqrt},
    {"abs", Op::Abs},
}};

class Parser {
 public:
  explicit Parser(std::string_view text) : s_(text) {}

  Expr parse_all() {
    Expr e = parse_sum();
    skip_ws();
    if (pos_ != s_.size()) throw ParseError("unexpected trailing input", pos_);
    return e;
  }

 private:
  void skip_ws() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t' || s_[pos_] == '\n' ||
                                s_[pos_] == '\r')) {
      ++pos_;
    }
  }

  bool starts_with(std::string_view tok) const { return s_.substr(pos_).starts_with(tok); }

  // Accepts ASCII '-' and U+2212 MINUS SIGN.
  bool eat_minus() {
    if (starts_with("-")) {
      pos_ += 1;
      return true;
    }
    if (starts_with("\xE2\x88\x92")) {
      pos_ += 3;
      return true;
    }
    return false;
  }

  bool eat(char c) {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!eat(c)) throw ParseError(std::string("expected '") + c + "'", pos_);
  }

  Expr parse_sum() {
    Expr lhs = parse_product();
    for (;;) {
      skip_ws();
      if (eat('+')) {
        lhs = binary(Op::Add, lhs, parse_product());
      } else if (eat_minus()) {
        lhs = binary(Op::Sub, lhs, parse_product());
      } else {
        return lhs;
      }
    }
  }

  Expr parse_product() {
    Expr lhs = parse_unary();
    for (;;) {
      if (eat('*')) {
        lhs = binary(Op::Mul, lhs, parse_unary());
      } else if (eat('/')) {
        lhs = binary(Op::Div, lhs, parse_unary());
      } else {
        return lhs;
      }
    }
  }

  // Unary minus binds looser than '^': -x^2 is -(x^2).
  Expr parse_unary() {
    skip_ws();
    if (eat_minus()) return unary(Op::Neg, parse_unary());
    if (eat('+')) return parse_unary();
    return parse_power();
  }

  Expr parse_power() {
    Expr base = parse_primary();
    if (eat('^')) return binary(Op::Pow, base, parse_unary());
    return base;
  }

  Expr parse_primary() {
    skip_ws();
    if (pos_ >= s_.size()) throw ParseError("unexpected end of input", pos_);
    const char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      Expr e = parse_sum();
      expect(')');
      return e;
    }
    if ((c >= '0' && c <= '9') || c == '.') return parse_number();
    if (is_ident_start(c)) return parse_identifier();
    throw ParseError(std::string("unexpected character '") + c + "'", pos_);
  }

  static bool is_ident_start(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
  }
  static bool is_ident_char(char c) { return is_ident_start(c) || (c >= '0' && c <= '9'); }

  Expr parse_number() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() && ((s_[pos_] >= '0' && s_[pos_] <= '9') || s_[pos_] == '.')) ++pos_;
    if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
      std::size_t p = pos_ + 1;
      if (p < s_.size() && (s_[p] == '+' || s_[p] == '-')) ++p;
      if (p < s_.size() && s_[p] >= '0' && s_[p] <= '9') {
        pos_ = p;
        while (pos_ < s_.size() && s_[pos_] >= '0' && s_[pos_] <= '9') ++pos_;
      }
    }
    double v = 0.0;
    const auto* first = s_.data() + start;
    const auto* last = s_.data() + pos_;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) throw ParseError("malformed number", start);
    return constant(v);
  }

  Expr parse_identifier() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() && is_ident_char(s_[pos_])) ++pos_;
    std::string name(s_.substr(start, pos_ - start));
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == '(') {
      ++pos_;
      return parse_call(name, start);
    }
    if (name == "pi") return constant(std::numbers::pi);
    return symbol(std::move(name));
  }

  Expr parse_call(const std::string& name, std::size_t at) {
    if (name == "if") {
      Expr lhs = parse_sum();
      skip_ws();
      Cmp cmp = parse_comparator();
      Expr rhs = parse_sum();
      expect(',');
      Expr a = parse_sum();
      expect(',');
      Expr b = parse_sum();
      if (eat(',')) throw ParseError("arity mismatch: if expects (condition, then, else)", pos_);
      expect(')');
      return piecewise(cmp, lhs, rhs, a, b);
    }
    std::vector<Expr> args;
    if (!eat(')')) {
      args.push_back(parse_sum());
      while (eat(',')) args.push_back(parse_sum());
      expect(')');
    }
    for (const auto& fn : kUnaryFns) {
      if (fn.name == name) {
        if (args.size() != 1) {
          throw ParseError("arity mismatch: " + name + " expects 1 argument, got " +
                               std::to_string(args.size()),
                           at);
        }
        return unary(fn.op, args[0]);
      }
    }
    if (name == "pow") {
      if (args.size() != 2) {
        throw ParseError("arity mismatch: pow expects 2 arguments, got " +
                             std::to_string(args.size()),
                         at);
      }
      return binary(Op::Pow, args[0], args[1]);
    }
    throw ParseError("unknown function '" + name + "'", at);
  }

  Cmp parse_comparator() {
    if (starts_with("<=")) return pos_ += 2, Cmp::Le;
    if (starts_with(">=")) return pos_ += 2, Cmp::Ge;
    if (starts_with("\xE2\x89\xA4")) return pos_ += 3, Cmp::Le;
    if (starts_with("\xE2\x89\xA5")) return pos_ += 3, Cmp::Ge;
    if (starts_with("<")) return pos_ += 1, Cmp::Lt;
    if (starts_with(">")) return pos_ += 1, Cmp::Gt;
    throw ParseError("expected comparison operator in if()", pos_);
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

std::string format_double(double v) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

const char* cmp_text(Cmp c) {
  switch (c) {
    case Cmp::Lt: return "<";
    case Cmp::Le: return "<=";
    case Cmp::Gt: return ">";
    case Cmp::Ge: return ">=";
  }
  return "<";
}

const char* unary_name(Op op) {
  for (const auto& fn : kUnaryFns) {
    if (fn.op == op) return fn.name.data();
  }
  return "?";
}

bool compare(Cmp c, double a, double b) {
  switch (c) {
    case Cmp::Lt: return a < b;
    case Cmp::Le: return a <= b;
    case Cmp::Gt: return a > b;
    case Cmp::Ge: return a >= b;
  }
  return false;
}

[[noreturn]] void domain_error(const std::string& what, const Expr& where) {
  throw EvalError("domain error: " + what + " in " + print(where));
}

double checked_div(double a, double b, const Expr& where) {
  if (b == 0.0) domain_error("division by zero", where);
  return a / b;
}

double checked_log(double a, const Expr& where) {
  if (!(a > 0.0)) domain_error("log of non-positive value", where);
  return std::log(a);
}

double checked_sqrt(double a, const Expr& where) {
  if (a < 0.0) domain_error("sqrt of negative value", where);
  return std::sqrt(a);
}

double checked_pow(double a, double b, const Expr& where) {
  if (std::floor(b) == b) {
    if (a == 0.0 && b < 0.0) domain_error("division by zero", where);
    return std::pow(a, b);
  }
  if (!(a > 0.0)) domain_error("non-integer power of non-positive base", where);
  return std::pow(a, b);
}

}  // namespace

Expr parse(std::string_view text) { return Parser(text).parse_all(); }

std::string print(const Expr& e) {
  switch (e->op) {
    case Op::Constant: {
      if (e->value < 0.0) return "(" + format_double(e->value) + ")";
      return format_double(e->value);
    }
    case Op::Symbol: return e->name;
    case Op::Neg: return "(-" + print(e->args[0]) + ")";
    case Op::Sin:
    case Op::Cos:
    case Op::Tan:
    case Op::Exp:
    case Op::Log:
    case Op::Sqrt:
    case Op::Abs: return std::string(unary_name(e->op)) + "(" + print(e->args[0]) + ")";
    case Op::Add: return "(" + print(e->args[0]) + " + " + print(e->args[1]) + ")";
    case Op::Sub: return "(" + print(e->args[0]) + " - " + print(e->args[1]) + ")";
    case Op::Mul: return "(" + print(e->args[0]) + " * " + print(e->args[1]) + ")";
    case Op::Div: return "(" + print(e->args[0]) + " / " + print(e->args[1]) + ")";
    case Op::Pow: return "(" + print(e->args[0]) + "^" + print(e->args[1]) + ")";
    case Op::If:
      return "if(" + print(e->args[0]) + " " + cmp_text(e->cmp) + " " + print(e->args[1]) +
             ", " + print(e->args[2]) + ", " + print(e->args[3]) + ")";
  }
  return "?";
}

bool structurally_equal(const Expr& a, const Expr& b) {
  if (a == b) return true;
  if (a->op != b->op || a->args.size() != b->args.size()) return false;
  switch (a->op) {
    case Op::Constant:
      if (a->value != b->value) return false;
      break;
    case Op::Symbol:
      if (a->name != b->name) return false;
      break;
    case Op::If:
      if (a->cmp != b->cmp) return false;
      break;
    default: break;
  }
  for (std::size_t i = 0; i < a->args.size(); ++i) {
    if (!structurally_equal(a->args[i], b->args[i])) return false;
  }
  return true;
}

bool depends_on(const Expr& e, std::string_view name) {
  if (e->op == Op::Symbol) return e->name == name;
  for (const auto& a : e->args) {
    if (depends_on(a, name)) return true;
  }
  return false;
}

void collect_symbols(const Expr& e, std::vector<std::string>& out) {
  if (e->op == Op::Symbol) {
    for (const auto& s : out) {
      if (s == e->name) return;
    }
    out.push_back(e->name);
    return;
  }
  for (const auto& a : e->args) collect_symbols(a, out);
}

// ---------------------------------------------------------------------------
// Differentiation

namespace {

bool is_const(const Expr& e, double v) { return e->op == Op::Constant && e->value == v; }

Expr add(Expr a, Expr b) {
  if (is_const(a, 0.0)) return b;
  if (is_const(b, 0.0)) return a;
  return binary(Op::Add, std::move(a), std::move(b));
}

Expr sub(Expr a, Expr b) {
  if (is_const(b, 0.0)) return a;
  if (is_const(a, 0.0)) return unary(Op::Neg, std::move(b));
  return binary(Op::Sub, std::move(a), std::move(b));
}

Expr mul(Expr a, Expr b) {
  if (is_const(a, 0.0) || is_const(b, 0.0)) return constant(0.0);
  if (is_const(a, 1.0)) return b;
  if (is_const(b, 1.0)) return a;
  return binary(Op::Mul, std::move(a), std::move(b));
}

Expr div(Expr a, Expr b) {
  if (is_const(a, 0.0)) return constant(0.0);
  if (is_const(b, 1.0)) return a;
  return binary(Op::Div, std::move(a), std::move(b));
}

Expr neg(Expr a) {
  if (is_const(a, 0.0)) return a;
  return unary(Op::Neg, std::move(a));
}

}  // namespace

Expr diff(const Expr& e, std::string_view var) {
  const auto& a = e->args;
  switch (e->op) {
    case Op::Constant: return constant(0.0);
    case Op::Symbol: return constant(e->name == var ? 1.0 : 0.0);
    case Op::Neg: return neg(diff(a[0], var));
    case Op::Sin: return mul(unary(Op::Cos, a[0]), diff(a[0], var));
    case Op::Cos: return mul(neg(unary(Op::Sin, a[0])), diff(a[0], var));
    case Op::Tan:
      return div(diff(a[0], var), binary(Op::Pow, unary(Op::Cos, a[0]), constant(2.0)));
    case Op::Exp: return mul(e, diff(a[0], var));
    case Op::Log: return div(diff(a[0], var), a[0]);
    case Op::Sqrt: return div(diff(a[0], var), mul(constant(2.0), e));
    case Op::Abs: {
      Expr d = diff(a[0], var);
      if (is_const(d, 0.0)) return d;
      return piecewise(Cmp::Lt, a[0], constant(0.0), neg(d), d);
    }
    case Op::Add: return add(diff(a[0], var), diff(a[1], var));
    case Op::Sub: return sub(diff(a[0], var), diff(a[1], var));
    case Op::Mul: return add(mul(diff(a[0], var), a[1]), mul(a[0], diff(a[1], var)));
    case Op::Div: {
      Expr num = sub(mul(diff(a[0], var), a[1]), mul(a[0], diff(a[1], var)));
      return div(num, binary(Op::Pow, a[1], constant(2.0)));
    }
    case Op::Pow: {
      if (!depends_on(a[1], var)) {
        Expr exponent = a[1]->op == Op::Constant ? constant(a[1]->value - 1.0)
                                                  : sub(a[1], constant(1.0));
        return mul(mul(a[1], binary(Op::Pow, a[0], exponent)), diff(a[0], var));
      }
      Expr inner = add(mul(diff(a[1], var), unary(Op::Log, a[0])),
                       div(mul(a[1], diff(a[0], var)), a[0]));
      return mul(e, inner);
    }
    case Op::If: {
      Expr t = diff(a[2], var);
      Expr f = diff(a[3], var);
      if (is_const(t, 0.0) && is_const(f, 0.0)) return t;
      return piecewise(e->cmp, a[0], a[1], t, f);
    }
  }
  return constant(0.0);
}

// ---------------------------------------------------------------------------
// Tree evaluation

double eval(const Expr& e, const EvalContext& ctx) {
  const auto& a = e->args;
  switch (e->op) {
    case Op::Constant: return e->value;
    case Op::Symbol: {
      auto v = ctx.variables.find(e->name);
      auto p = ctx.parameters.find(e->name);
      const bool in_v = v != ctx.variables.end();
      const bool in_p = p != ctx.parameters.end();
      if (in_v && in_p) throw EvalError("name bound twice: " + e->name);
      if (in_v) return v->second;
      if (in_p) return p->second;
      throw EvalError("unbound name: " + e->name);
    }
    case Op::Neg: return -eval(a[0], ctx);
    case Op::Sin: return std::sin(eval(a[0], ctx));
    case Op::Cos: return std::cos(eval(a[0], ctx));
    case Op::Tan: return std::tan(eval(a[0], ctx));
    case Op::Exp: return std::exp(eval(a[0], ctx));
    case Op::Log: return checked_log(eval(a[0], ctx), e);
    case Op::Sqrt: return checked_sqrt(eval(a[0], ctx), e);
    case Op::Abs: return std::abs(eval(a[0], ctx));
    case Op::Add: return eval(a[0], ctx) + eval(a[1], ctx);
    case Op::Sub: return eval(a[0], ctx) - eval(a[1], ctx);
    case Op::Mul: return eval(a[0], ctx) * eval(a[1], ctx);
    case Op::Div: return checked_div(eval(a[0], ctx), eval(a[1], ctx), e);
    case Op::Pow: return checked_pow(eval(a[0], ctx), eval(a[1], ctx), e);
    case Op::If:
      return compare(e->cmp, eval(a[0], ctx), eval(a[1], ctx)) ? eval(a[2], ctx)
                                                               : eval(a[3], ctx);
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// Compiled evaluation

Program Program::compile(const Expr& e, std::span<const std::string> slots) {
  Program p;
  p.zero_ = is_const(e, 0.0);
  p.emit(e, slots);
  // Stack depth: simulate.
  std::size_t depth = 0;
  std::size_t max_depth = 0;
  for (const auto& ins : p.code_) {
    switch (ins.code) {
      case Code::Push:
      case Code::Load: ++depth; break;
      case Code::Add:
      case Code::Sub:
      case Code::Mul:
      case Code::Div:
      case Code::Pow:
      case Code::Compare:
      case Code::JumpIfFalse: --depth; break;
      default: break;
    }
    max_depth = std::max(max_depth, depth);
  }
  // Branches are emitted sequentially, so the linear simulation over-counts;
  // that only makes the bound conservative.
  p.max_stack_ = max_depth + 1;
  return p;
}

void Program::emit(const Expr& e, std::span<const std::string> slots) {
  const auto& a = e->args;
  auto op_code = [](Op op) {
    switch (op) {
      case Op::Neg: return Code::Neg;
      case Op::Sin: return Code::Sin;
      case Op::Cos: return Code::Cos;
      case Op::Tan: return Code::Tan;
      case Op::Exp: return Code::Exp;
      case Op::Log: return Code::Log;
      case Op::Sqrt: return Code::Sqrt;
      case Op::Abs: return Code::Abs;
      case Op::Add: return Code::Add;
      case Op::Sub: return Code::Sub;
      case Op::Mul: return Code::Mul;
      case Op::Div: return Code::Div;
      default: return Code::Pow;
    }
  };
  switch (e->op) {
    case Op::Constant: code_.push_back({Code::Push, Cmp::Lt, 0, e->value}); return;
    case Op::Symbol: {
      for (std::size_t i = 0; i < slots.size(); ++i) {
        if (slots[i] == e->name) {
          code_.push_back({Code::Load, Cmp::Lt, i, 0.0});
          return;
        }
      }
      throw EvalError("unbound name: " + e->name);
    }
    case Op::If: {
      emit(a[0], slots);
      emit(a[1], slots);
      code_.push_back({Code::Compare, e->cmp, 0, 0.0});
      const std::size_t jif = code_.size();
      code_.push_back({Code::JumpIfFalse, Cmp::Lt, 0, 0.0});
      emit(a[2], slots);
      const std::size_t jmp = code_.size();
      code_.push_back({Code::Jump, Cmp::Lt, 0, 0.0});
      code_[jif].arg = code_.size();
      emit(a[3], slots);
      code_[jmp].arg = code_.size();
      return;
    }
    default: break;
  }
  for (const auto& arg : a) emit(arg, slots);
  const Code c = op_code(e->op);
  std::size_t src = 0;
  if (c == Code::Div || c == Code::Log || c == Code::Sqrt || c == Code::Pow) {
    src = sources_.size();
    sources_.push_back(e);
  }
  code_.push_back({c, Cmp::Lt, src, 0.0});
}

double Program::run(std::span<const double> slot_values) const {
  std::array<double, 64> small{};
  std::vector<double> large;
  double* stack = small.data();
  if (max_stack_ > small.size()) {
    large.resize(max_stack_);
    stack = large.data();
  }
  std::size_t sp = 0;
  const std::size_t n = code_.size();
  for (std::size_t pc = 0; pc < n; ++pc) {
    const Instr& ins = code_[pc];
    switch (ins.code) {
      case Code::Push: stack[sp++] = ins.value; break;
      case Code::Load: stack[sp++] = slot_values[ins.arg]; break;
      case Code::Neg: stack[sp - 1] = -stack[sp - 1]; break;
      case Code::Sin: stack[sp - 1] = std::sin(stack[sp - 1]); break;
      case Code::Cos: stack[sp - 1] = std::cos(stack[sp - 1]); break;
      case Code::Tan: stack[sp - 1] = std::tan(stack[sp - 1]); break;
      case Code::Exp: stack[sp - 1] = std::exp(stack[sp - 1]); break;
      case Code::Log: stack[sp - 1] = checked_log(stack[sp - 1], sources_[ins.arg]); break;
      case Code::Sqrt: stack[sp - 1] = checked_sqrt(stack[sp - 1], sources_[ins.arg]); break;
      case Code::Abs: stack[sp - 1] = std::abs(stack[sp - 1]); break;
      case Code::Add: --sp; stack[sp - 1] += stack[sp]; break;
      case Code::Sub: --sp; stack[sp - 1] -= stack[sp]; break;
      case Code::Mul: --sp; stack[sp - 1] *= stack[sp]; break;
      case Code::Div:
        --sp;
        stack[sp - 1] = checked_div(stack[sp - 1], stack[sp], sources_[ins.arg]);
        break;
      case Code::Pow:
        --sp;
        stack[sp - 1] = checked_pow(stack[sp - 1], stack[sp], sources_[ins.arg]);
        break;
      case Code::Compare:
        --sp;
        stack[sp - 1] = compare(ins.cmp, stack[sp - 1], stack[sp]) ? 1.0 : 0.0;
        break;
      case Code::JumpIfFalse:
        --sp;
        if (stack[sp] == 0.0) pc = ins.arg - 1;
        break;
      case Code::Jump: pc = ins.arg - 1; break;
    }
  }
  return stack[0];
}

}  // namespace paracon::expr
