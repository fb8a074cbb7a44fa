#pragma once

#include "aiprobe/scalar.hpp"

#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace aiprobe {

// Arithmetic over constraint bounds: numeric literals, attribute references
// (optionally owner-qualified, e.g. "agent.x"), +, -, *, /, integer power,
// unary minus, and parentheses. Same-precedence operators evaluate left to
// right.
class Expression {
  public:
    Expression() = default;

    // Throws ParseError on syntax errors.
    static Expression parse(std::string_view text);

    // Evaluates against name -> number bindings. Throws ConstraintError on
    // unbound names, division by zero, or a non-integer power exponent.
    double evaluate(const std::map<std::string, double>& bindings) const;

    // Attribute names referenced anywhere in the expression.
    const std::vector<std::string>& references() const { return references_; }

    // The original text (used when serializing constraints back to XML).
    const std::string& text() const { return text_; }

    bool is_constant() const { return references_.empty(); }

    struct Node; // implementation detail, defined in expression.cpp

  private:
    std::shared_ptr<const Node> root_;
    std::vector<std::string> references_;
    std::string text_;
};

} // namespace aiprobe
