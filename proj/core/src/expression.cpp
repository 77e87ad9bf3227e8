#include "cuot/expression.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <numbers>

#include "cuot/errors.hpp"

namespace cuot {

struct Expression::Node {
    enum class Kind { number, var_t, var_x, var_y, negate, function, add, sub, mul, div, pow };
    Kind kind = Kind::number;
    double value = 0.0;
    double (*fn)(double) = nullptr;
    std::shared_ptr<const Node> lhs;
    std::shared_ptr<const Node> rhs;
};

namespace {

using Node = Expression::Node;
using NodePtr = std::shared_ptr<const Node>;

NodePtr make(Node::Kind kind, NodePtr lhs = nullptr, NodePtr rhs = nullptr) {
    auto n = std::make_shared<Node>();
    n->kind = kind;
    n->lhs = std::move(lhs);
    n->rhs = std::move(rhs);
    return n;
}

NodePtr number(double v) {
    auto n = std::make_shared<Node>();
    n->value = v;
    return n;
}

double fn_abs(double v) { return std::abs(v); }
double fn_sin(double v) { return std::sin(v); }
double fn_cos(double v) { return std::cos(v); }
double fn_tan(double v) { return std::tan(v); }
double fn_exp(double v) { return std::exp(v); }
double fn_log(double v) { return std::log(v); }
double fn_sqrt(double v) { return std::sqrt(v); }

class Parser {
public:
    explicit Parser(const std::string& text) : s_(text) {}

    NodePtr parse() {
        NodePtr n = expr();
        skip();
        if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
        return n;
    }

private:
    [[noreturn]] void fail(const std::string& what) const {
        throw ConfigError("expression \"" + s_ + "\": " + what + " at offset " + std::to_string(pos_));
    }

    void skip() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }

    char peek() {
        skip();
        return pos_ < s_.size() ? s_[pos_] : '\0';
    }

    bool starts_factor() {
        const char c = peek();
        return c == '(' || c == '.' || std::isalnum(static_cast<unsigned char>(c));
    }

    NodePtr expr() {
        NodePtr n = term();
        for (;;) {
            const char c = peek();
            if (c == '+' || c == '-') {
                ++pos_;
                n = make(c == '+' ? Node::Kind::add : Node::Kind::sub, n, term());
            } else {
                return n;
            }
        }
    }

    NodePtr term() {
        NodePtr n = unary();
        for (;;) {
            const char c = peek();
            if (c == '*' || c == '/') {
                ++pos_;
                n = make(c == '*' ? Node::Kind::mul : Node::Kind::div, n, unary());
            } else if (starts_factor()) {
                n = make(Node::Kind::mul, n, power());
            } else {
                return n;
            }
        }
    }

    NodePtr unary() {
        const char c = peek();
        if (c == '-') {
            ++pos_;
            return make(Node::Kind::negate, unary());
        }
        if (c == '+') {
            ++pos_;
            return unary();
        }
        return power();
    }

    NodePtr power() {
        NodePtr base = primary();
        if (peek() == '^') {
            ++pos_;
            return make(Node::Kind::pow, base, unary());
        }
        return base;
    }

    NodePtr primary() {
        const char c = peek();
        if (c == '(') {
            ++pos_;
            NodePtr n = expr();
            if (peek() != ')') fail("missing ')'");
            ++pos_;
            return n;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            const char* begin = s_.c_str() + pos_;
            char* end = nullptr;
            const double v = std::strtod(begin, &end);
            if (end == begin) fail("malformed number");
            pos_ += static_cast<std::size_t>(end - begin);
            return number(v);
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            const std::size_t start = pos_;
            while (pos_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[pos_]))) ++pos_;
            const std::string id = s_.substr(start, pos_ - start);
            if (id == "t") return make(Node::Kind::var_t);
            if (id == "x") return make(Node::Kind::var_x);
            if (id == "y") return make(Node::Kind::var_y);
            if (id == "pi") return number(std::numbers::pi);
            if (id == "e") return number(std::numbers::e);
            double (*fn)(double) = nullptr;
            if (id == "sin") fn = fn_sin;
            else if (id == "cos") fn = fn_cos;
            else if (id == "tan") fn = fn_tan;
            else if (id == "exp") fn = fn_exp;
            else if (id == "log") fn = fn_log;
            else if (id == "sqrt") fn = fn_sqrt;
            else if (id == "abs") fn = fn_abs;
            else {
                pos_ = start;
                fail("unknown identifier '" + id + "'");
            }
            if (peek() != '(') fail("expected '(' after " + id);
            ++pos_;
            auto n = std::make_shared<Node>();
            n->kind = Node::Kind::function;
            n->fn = fn;
            n->lhs = expr();
            if (peek() != ')') fail("missing ')'");
            ++pos_;
            return n;
        }
        fail(c == '\0' ? "unexpected end of input" : "unexpected '" + std::string(1, c) + "'");
    }

    std::string s_;
    std::size_t pos_ = 0;
};

double eval(const Node& n, double t, double x, double y) {
    switch (n.kind) {
        case Node::Kind::number: return n.value;
        case Node::Kind::var_t: return t;
        case Node::Kind::var_x: return x;
        case Node::Kind::var_y: return y;
        case Node::Kind::negate: return -eval(*n.lhs, t, x, y);
        case Node::Kind::function: return n.fn(eval(*n.lhs, t, x, y));
        case Node::Kind::add: return eval(*n.lhs, t, x, y) + eval(*n.rhs, t, x, y);
        case Node::Kind::sub: return eval(*n.lhs, t, x, y) - eval(*n.rhs, t, x, y);
        case Node::Kind::mul: return eval(*n.lhs, t, x, y) * eval(*n.rhs, t, x, y);
        case Node::Kind::div: return eval(*n.lhs, t, x, y) / eval(*n.rhs, t, x, y);
        case Node::Kind::pow: return std::pow(eval(*n.lhs, t, x, y), eval(*n.rhs, t, x, y));
    }
    return 0.0;
}

}  // namespace

Expression Expression::parse(const std::string& text) {
    Expression e;
    e.text_ = text;
    e.root_ = Parser(text).parse();
    return e;
}

double Expression::evaluate(double t, double x, double y) const { return eval(*root_, t, x, y); }

}  // namespace cuot
