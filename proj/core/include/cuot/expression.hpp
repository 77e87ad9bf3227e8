#pragma once

#include <memory>
#include <string>

namespace cuot {

/// Scalar arithmetic expression in the variables t, x and y.
///
/// Grammar: + - * / ^ (right associative), unary minus, parentheses, the
/// functions sin cos tan exp log sqrt abs, the constants pi and e, and
/// implicit multiplication between adjacent factors ("8(t - 0.5)^2").
class Expression {
public:
    /// Throws ConfigError on a syntax error.
    static Expression parse(const std::string& text);

    double evaluate(double t, double x = 0.0, double y = 0.0) const;
    const std::string& text() const { return text_; }

    struct Node;

private:
    std::string text_;
    std::shared_ptr<const Node> root_;
};

}  // namespace cuot
