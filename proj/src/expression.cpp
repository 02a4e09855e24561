#include "ssi/expression.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdlib>

namespace ssi {

class ExpressionParser {
 public:
  ExpressionParser(const std::string& src, const SymbolResolver& resolve, std::vector<Expression::Instr>& out)
      : src_(src), resolve_(resolve), out_(out) {}

  void parse() {
    expr();
    skip_space();
    if (pos_ != src_.size()) fail("unexpected '" + std::string(1, src_[pos_]) + "'");
  }

 private:
  using Op = Expression::Op;

  void expr() {
    term();
    for (;;) {
      if (accept('+')) { term(); emit(Op::add); }
      else if (accept('-')) { term(); emit(Op::sub); }
      else return;
    }
  }
  void term() {
    unary();
    for (;;) {
      if (accept('*')) { unary(); emit(Op::mul); }
      else if (accept('/')) { unary(); emit(Op::div); }
      else return;
    }
  }
  void unary() {
    if (accept('-')) { unary(); emit(Op::neg); return; }
    if (accept('+')) { unary(); return; }
    power();
  }
  void power() {
    primary();
    if (accept('^')) {
      unary();  // right associative
      emit(Op::pow);
    }
  }
  void primary() {
    skip_space();
    if (pos_ >= src_.size()) fail("unexpected end of expression");
    const char c = src_[pos_];
    if (accept('(')) {
      expr();
      expect(')');
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = src_.c_str() + pos_;
      char* end = nullptr;
      const double v = std::strtod(begin, &end);
      if (end == begin) fail("bad number");
      pos_ += static_cast<std::size_t>(end - begin);
      out_.push_back({Op::push_const, 0, v});
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
        ++pos_;
      const std::string name = src_.substr(start, pos_ - start);
      if (accept('(')) {
        function(name);
        return;
      }
      const auto sym = resolve_(name);
      if (!sym) fail("unknown identifier '" + name + "'");
      switch (sym->kind) {
        case Symbol::Kind::constant: out_.push_back({Op::push_const, 0, sym->value}); break;
        case Symbol::Kind::state: out_.push_back({Op::push_state, sym->index, 0.0}); break;
        case Symbol::Kind::exp_state: out_.push_back({Op::push_exp_state, sym->index, 0.0}); break;
        case Symbol::Kind::param: out_.push_back({Op::push_param, sym->index, 0.0}); break;
      }
      return;
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }
  void function(const std::string& name) {
    expr();
    if (name == "exp") emit(Op::exp);
    else if (name == "log") emit(Op::log);
    else if (name == "sqrt") emit(Op::sqrt);
    else if (name == "pow" || name == "min" || name == "max") {
      expect(',');
      expr();
      emit(name == "pow" ? Op::pow : name == "min" ? Op::min : Op::max);
    } else {
      fail("unknown function '" + name + "'");
    }
    expect(')');
  }

  void emit(Op op) { out_.push_back({op, 0, 0.0}); }
  void skip_space() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }
  bool accept(char c) {
    skip_space();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }
  [[noreturn]] void fail(const std::string& msg) const {
    throw ExpressionError("expression \"" + src_ + "\": " + msg);
  }

  const std::string& src_;
  const SymbolResolver& resolve_;
  std::vector<Expression::Instr>& out_;
  std::size_t pos_ = 0;
};

Expression Expression::compile(const std::string& source, const SymbolResolver& resolve) {
  Expression e;
  e.source_ = source;
  ExpressionParser(e.source_, resolve, e.code_).parse();
  int depth = 0, max_depth = 0;
  for (const auto& ins : e.code_) {
    switch (ins.op) {
      case Op::push_const: case Op::push_state: case Op::push_exp_state: case Op::push_param:
        ++depth;
        break;
      case Op::add: case Op::sub: case Op::mul: case Op::div: case Op::pow: case Op::min: case Op::max:
        --depth;
        break;
      default:
        break;
    }
    max_depth = std::max(max_depth, depth);
  }
  if (max_depth > 64) throw ExpressionError("expression \"" + source + "\": nested too deeply");
  return e;
}

bool Expression::uses_state() const {
  for (const auto& ins : code_)
    if (ins.op == Op::push_state || ins.op == Op::push_exp_state) return true;
  return false;
}

double Expression::eval(const Eigen::Ref<const Eigen::VectorXd>& state, const Eigen::VectorXd& params) const {
  std::array<double, 64> stack;
  int top = -1;
  for (const auto& ins : code_) {
    switch (ins.op) {
      case Op::push_const: stack[++top] = ins.value; break;
      case Op::push_state: stack[++top] = state[ins.index]; break;
      case Op::push_exp_state: stack[++top] = std::exp(state[ins.index]); break;
      case Op::push_param: stack[++top] = params[ins.index]; break;
      case Op::add: --top; stack[top] += stack[top + 1]; break;
      case Op::sub: --top; stack[top] -= stack[top + 1]; break;
      case Op::mul: --top; stack[top] *= stack[top + 1]; break;
      case Op::div: --top; stack[top] /= stack[top + 1]; break;
      case Op::pow: --top; stack[top] = std::pow(stack[top], stack[top + 1]); break;
      case Op::min: --top; stack[top] = std::min(stack[top], stack[top + 1]); break;
      case Op::max: --top; stack[top] = std::max(stack[top], stack[top + 1]); break;
      case Op::neg: stack[top] = -stack[top]; break;
      case Op::exp: stack[top] = std::exp(stack[top]); break;
      case Op::log: stack[top] = std::log(stack[top]); break;
      case Op::sqrt: stack[top] = std::sqrt(stack[top]); break;
    }
  }
  return top == 0 ? stack[0] : 0.0;
}

}  // namespace ssi
