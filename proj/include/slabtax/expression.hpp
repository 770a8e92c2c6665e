#pragma once

#include <cctype>
#include <cmath>
#include <memory>
#include <numbers>
#include <string>
#include <utility>

#include "slabtax/errors.hpp"

namespace slabtax {

/// Small closed-form expression language for problem data: polynomials in the
/// variables x and t, sin/cos/exp, the constant pi, and + - * / ^ with
/// nonnegative integer exponents.  Expressions are symbolically
/// differentiable, which is how the data regularity required of boundary and
/// initial functions (two time derivatives, analytic second space
/// derivatives) is guaranteed by construction.
///
/// Integer powers evaluate by repeated multiplication, so e.g. pi^2 is the
/// exact double product pi*pi wherever it appears.
class Expr {
  public:
    enum class Var { X, T };

    Expr() : node_(constant(0.0)) {}

    static Expr parse(const std::string& text);

    /// Expression holding one literal value (used for numeric config inputs).
    static Expr literal(double v) { return Expr(constant(v)); }

    double eval(double x, double t) const { return node_->eval(x, t); }

    Expr diff(Var v) const { return Expr(node_->diff(v)); }

    bool uses(Var v) const { return node_->uses(v); }

    /// Reconstructed text form (parenthesized; for error messages/manifests).
    std::string str() const { return node_->str(); }

  private:
    struct Node;
    using Ptr = std::shared_ptr<const Node>;

    struct Node {
        enum class Kind { Const, Variable, Add, Sub, Mul, Div, Neg, Pow, Sin, Cos, Exp };
        Kind kind;
        double value = 0.0; // Const
        Var var = Var::X;   // Variable
        int exponent = 0;   // Pow
        Ptr a, b;

        double eval(double x, double t) const {
            switch (kind) {
                case Kind::Const: return value;
                case Kind::Variable: return var == Var::X ? x : t;
                case Kind::Add: return a->eval(x, t) + b->eval(x, t);
                case Kind::Sub: return a->eval(x, t) - b->eval(x, t);
                case Kind::Mul: return a->eval(x, t) * b->eval(x, t);
                case Kind::Div: return a->eval(x, t) / b->eval(x, t);
                case Kind::Neg: return -a->eval(x, t);
                case Kind::Pow: {
                    const double base = a->eval(x, t);
                    double r = 1.0;
                    for (int i = 0; i < exponent; ++i) r *= base;
                    return r;
                }
                case Kind::Sin: return std::sin(a->eval(x, t));
                case Kind::Cos: return std::cos(a->eval(x, t));
                case Kind::Exp: return std::exp(a->eval(x, t));
            }
            return 0.0;
        }

        bool uses(Var v) const {
            switch (kind) {
                case Kind::Const: return false;
                case Kind::Variable: return var == v;
                case Kind::Neg:
                case Kind::Pow:
                case Kind::Sin:
                case Kind::Cos:
                case Kind::Exp: return a->uses(v);
                default: return a->uses(v) || b->uses(v);
            }
        }

        Ptr diff(Var v) const;

        std::string str() const {
            switch (kind) {
                case Kind::Const: {
                    return std::to_string(value);
                }
                case Kind::Variable: return var == Var::X ? "x" : "t";
                case Kind::Add: return "(" + a->str() + " + " + b->str() + ")";
                case Kind::Sub: return "(" + a->str() + " - " + b->str() + ")";
                case Kind::Mul: return "(" + a->str() + "*" + b->str() + ")";
                case Kind::Div: return "(" + a->str() + "/" + b->str() + ")";
                case Kind::Neg: return "(-" + a->str() + ")";
                case Kind::Pow: return a->str() + "^" + std::to_string(exponent);
                case Kind::Sin: return "sin(" + a->str() + ")";
                case Kind::Cos: return "cos(" + a->str() + ")";
                case Kind::Exp: return "exp(" + a->str() + ")";
            }
            return "";
        }
    };

    explicit Expr(Ptr node) : node_(std::move(node)) {}

    static Ptr constant(double v) {
        auto n = std::make_shared<Node>();
        n->kind = Node::Kind::Const;
        n->value = v;
        return n;
    }
    static Ptr variable(Var v) {
        auto n = std::make_shared<Node>();
        n->kind = Node::Kind::Variable;
        n->var = v;
        return n;
    }
    static bool is_const(const Ptr& p, double v) {
        return p->kind == Node::Kind::Const && p->value == v;
    }

    // Constructors with light constant folding; folding keeps derivative
    // trees small so second derivatives stay cheap and numerically clean.
    static Ptr add(Ptr a, Ptr b) {
        if (is_const(a, 0.0)) return b;
        if (is_const(b, 0.0)) return a;
        if (a->kind == Node::Kind::Const && b->kind == Node::Kind::Const)
            return constant(a->value + b->value);
        auto n = std::make_shared<Node>();
        n->kind = Node::Kind::Add;
        n->a = std::move(a);
        n->b = std::move(b);
        return n;
    }
    static Ptr sub(Ptr a, Ptr b) {
        if (is_const(b, 0.0)) return a;
        if (a->kind == Node::Kind::Const && b->kind == Node::Kind::Const)
            return constant(a->value - b->value);
        if (is_const(a, 0.0)) return neg(std::move(b));
        auto n = std::make_shared<Node>();
        n->kind = Node::Kind::Sub;
        n->a = std::move(a);
        n->b = std::move(b);
        return n;
    }
    static Ptr mul(Ptr a, Ptr b) {
        if (is_const(a, 0.0) || is_const(b, 0.0)) return constant(0.0);
        if (is_const(a, 1.0)) return b;
        if (is_const(b, 1.0)) return a;
        if (a->kind == Node::Kind::Const && b->kind == Node::Kind::Const)
            return constant(a->value * b->value);
        auto n = std::make_shared<Node>();
        n->kind = Node::Kind::Mul;
        n->a = std::move(a);
        n->b = std::move(b);
        return n;
    }
    static Ptr div(Ptr a, Ptr b) {
        if (is_const(b, 1.0)) return a;
        if (a->kind == Node::Kind::Const && b->kind == Node::Kind::Const && b->value != 0.0)
            return constant(a->value / b->value);
        auto n = std::make_shared<Node>();
        n->kind = Node::Kind::Div;
        n->a = std::move(a);
        n->b = std::move(b);
        return n;
    }
    static Ptr neg(Ptr a) {
        if (a->kind == Node::Kind::Const) return constant(-a->value);
        auto n = std::make_shared<Node>();
        n->kind = Node::Kind::Neg;
        n->a = std::move(a);
        return n;
    }
    static Ptr pow(Ptr a, int e) {
        if (e == 0) return constant(1.0);
        if (e == 1) return a;
        if (a->kind == Node::Kind::Const) {
            double r = 1.0;
            for (int i = 0; i < e; ++i) r *= a->value;
            return constant(r);
        }
        auto n = std::make_shared<Node>();
        n->kind = Node::Kind::Pow;
        n->a = std::move(a);
        n->exponent = e;
        return n;
    }
    static Ptr fun(Node::Kind kind, Ptr a) {
        auto n = std::make_shared<Node>();
        n->kind = kind;
        n->a = std::move(a);
        return n;
    }

    class Parser;

    Ptr node_;
};

inline Expr::Ptr Expr::Node::diff(Var v) const {
    switch (kind) {
        case Kind::Const: return constant(0.0);
        case Kind::Variable: return constant(var == v ? 1.0 : 0.0);
        case Kind::Add: return add(a->diff(v), b->diff(v));
        case Kind::Sub: return sub(a->diff(v), b->diff(v));
        case Kind::Mul: return add(mul(a->diff(v), b), mul(a, b->diff(v)));
        case Kind::Div:
            return div(sub(mul(a->diff(v), b), mul(a, b->diff(v))), mul(b, b));
        case Kind::Neg: return neg(a->diff(v));
        case Kind::Pow:
            return mul(mul(constant(static_cast<double>(exponent)), pow(a, exponent - 1)),
                       a->diff(v));
        case Kind::Sin: return mul(fun(Kind::Cos, a), a->diff(v));
        case Kind::Cos: return neg(mul(fun(Kind::Sin, a), a->diff(v)));
        case Kind::Exp: {
            auto self = std::make_shared<Node>(*this);
            return mul(Ptr(self), a->diff(v));
        }
    }
    return constant(0.0);
}

class Expr::Parser {
  public:
    explicit Parser(const std::string& text) : text_(text) {}

    Ptr run() {
        auto e = expr();
        skip_ws();
        if (pos_ != text_.size()) fail("unexpected trailing input");
        return e;
    }

  private:
    [[noreturn]] void fail(const std::string& msg) const {
        throw ConfigError("expression error at position " + std::to_string(pos_) + " in \"" +
                          text_ + "\": " + msg);
    }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool consume(char c) {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    char peek() {
        skip_ws();
        return pos_ < text_.size() ? text_[pos_] : '\0';
    }

    Ptr expr() {
        auto e = term();
        while (true) {
            if (consume('+'))
                e = add(e, term());
            else if (consume('-'))
                e = sub(e, term());
            else
                return e;
        }
    }

    Ptr term() {
        auto e = unary();
        while (true) {
            if (consume('*'))
                e = mul(e, unary());
            else if (consume('/'))
                e = div(e, unary());
            else
                return e;
        }
    }

    Ptr unary() {
        if (consume('-')) return neg(unary());
        return power();
    }

    Ptr power() {
        auto base = primary();
        if (consume('^')) {
            skip_ws();
            std::size_t start = pos_;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
                ++pos_;
            if (pos_ == start) fail("exponent must be a nonnegative integer literal");
            const int e = std::stoi(text_.substr(start, pos_ - start));
            if (e > 16) fail("exponent larger than 16");
            return pow(base, e);
        }
        return base;
    }

    Ptr primary() {
        skip_ws();
        if (pos_ >= text_.size()) fail("unexpected end of input");
        const char c = text_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c))) return identifier();
        if (consume('(')) {
            auto e = expr();
            if (!consume(')')) fail("missing ')'");
            return e;
        }
        fail(std::string("unexpected character '") + c + "'");
    }

    Ptr number() {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(text_.substr(pos_), &used);
        } catch (const std::exception&) {
            fail("malformed number");
        }
        pos_ += used;
        return constant(v);
    }

    Ptr identifier() {
        std::size_t start = pos_;
        while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
                                       text_[pos_] == '_'))
            ++pos_;
        const std::string name = text_.substr(start, pos_ - start);
        if (name == "x") return variable(Var::X);
        if (name == "t") return variable(Var::T);
        if (name == "pi") return constant(std::numbers::pi);
        if (name == "sin" || name == "cos" || name == "exp") {
            if (!consume('(')) fail(name + " requires parentheses");
            auto arg = expr();
            if (!consume(')')) fail("missing ')' after " + name + " argument");
            if (name == "sin") return fun(Node::Kind::Sin, arg);
            if (name == "cos") return fun(Node::Kind::Cos, arg);
            return fun(Node::Kind::Exp, arg);
        }
        pos_ = start;
        fail("unknown identifier \"" + name + "\"");
    }

    const std::string& text_;
    std::size_t pos_ = 0;
};

inline Expr Expr::parse(const std::string& text) { return Expr(Parser(text).run()); }

} // namespace slabtax
