#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

namespace lipreach {

/// Small arithmetic expressions over named variables, used for kernel
/// parameters in model files.
///
///   expr   := term (('+' | '-') term)*
///   term   := unary (('*' | '/') unary)*
///   unary  := '-' unary | power
///   power  := atom ('^' unary)?
///   atom   := number | name | name '(' expr (',' expr)* ')' | '(' expr ')'
///
/// Functions: min, max (2+ args), abs, sqrt, exp, log, sin, cos, floor,
/// pow(x, y), clamp(x, lo, hi). The constant pi is predefined.
class Expr {
public:
    /// Throws ParseError with column (1-based, within `text`) on bad input.
    static Expr compile(const std::string& text, const std::vector<std::string>& variables);
    double eval(std::span<const double> values) const;
    const std::string& text() const { return text_; }

    struct Node;

private:
    std::shared_ptr<const Node> root_;
    std::string text_;
};

}  // namespace lipreach
