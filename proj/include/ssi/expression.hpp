#ifndef SSI_EXPRESSION_HPP
#define SSI_EXPRESSION_HPP

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ssi {

class ExpressionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// What an identifier in a rate expression refers to.
struct Symbol {
  enum class Kind { constant, state, exp_state, param };
  Kind kind = Kind::constant;
  int index = 0;       ///< state or parameter index
  double value = 0.0;  ///< for constants
};

using SymbolResolver = std::function<std::optional<Symbol>(const std::string&)>;

/// Arithmetic expression compiled to a postfix program.
///
/// Grammar: numbers, identifiers, + - * / ^, unary minus, parentheses and
/// the functions exp, log, sqrt, pow(a, b), min(a, b), max(a, b).
class Expression {
 public:
  Expression() = default;
  static Expression compile(const std::string& source, const SymbolResolver& resolve);

  double eval(const Eigen::Ref<const Eigen::VectorXd>& state, const Eigen::VectorXd& params) const;
  const std::string& source() const { return source_; }
  bool uses_state() const;

 private:
  enum class Op { push_const, push_state, push_exp_state, push_param, add, sub, mul, div, pow, neg, exp, log, sqrt, min, max };
  struct Instr {
    Op op;
    int index = 0;
    double value = 0.0;
  };
  friend class ExpressionParser;

  std::string source_;
  std::vector<Instr> code_;
};

}  // namespace ssi

#endif  // SSI_EXPRESSION_HPP
