#pragma once

#include <cctype>
#include <cmath>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "vec.hpp"

namespace wgstokes {

struct ExpressionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Compiled arithmetic expression over x, y, z and pi with + - * / ^,
/// unary minus, and the functions exp, sin, cos, sqrt, log, tan.
///
///   expr   := term (('+'|'-') term)*
///   term   := unary (('*'|'/') unary)*
///   unary  := '-' unary | power
///   power  := atom ('^' unary)?
///   atom   := number | ident | ident '(' expr ')' | '(' expr ')'
class Expression {
public:
    Expression() = default;
    explicit Expression(const std::string& text) : text_(text) {
        pos_ = 0;
        root_ = parse_expr();
        skip_ws();
        if (pos_ != text_.size()) fail("unexpected trailing input");
    }

    double operator()(const Vec& p) const {
        if (!root_) throw ExpressionError("empty expression");
        return root_->eval(p);
    }

    const std::string& text() const { return text_; }

private:
    enum class Op { num, var, add, sub, mul, div, pow, neg, fn };
    enum class Fn { exp, sin, cos, sqrt, log, tan };

    struct Node {
        Op op = Op::num;
        double value = 0.0;
        int var = 0;
        Fn fn = Fn::exp;
        std::shared_ptr<const Node> l, r;

        double eval(const Vec& p) const {
            switch (op) {
                case Op::num: return value;
                case Op::var: return p[var];
                case Op::add: return l->eval(p) + r->eval(p);
                case Op::sub: return l->eval(p) - r->eval(p);
                case Op::mul: return l->eval(p) * r->eval(p);
                case Op::div: return l->eval(p) / r->eval(p);
                case Op::pow: return std::pow(l->eval(p), r->eval(p));
                case Op::neg: return -l->eval(p);
                case Op::fn: {
                    const double a = l->eval(p);
                    switch (fn) {
                        case Fn::exp: return std::exp(a);
                        case Fn::sin: return std::sin(a);
                        case Fn::cos: return std::cos(a);
                        case Fn::sqrt: return std::sqrt(a);
                        case Fn::log: return std::log(a);
                        case Fn::tan: return std::tan(a);
                    }
                }
            }
            return 0.0;
        }
    };
    using NodePtr = std::shared_ptr<const Node>;

    static NodePtr make(Op op, NodePtr l, NodePtr r = nullptr) {
        auto n = std::make_shared<Node>();
        n->op = op;
        n->l = std::move(l);
        n->r = std::move(r);
        return n;
    }

    [[noreturn]] void fail(const std::string& msg) const {
        throw ExpressionError("expression '" + text_ + "': " + msg + " at position " + std::to_string(pos_));
    }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }
    bool accept(char c) {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    NodePtr parse_expr() {
        NodePtr n = parse_term();
        for (;;) {
            if (accept('+'))
                n = make(Op::add, n, parse_term());
            else if (accept('-'))
                n = make(Op::sub, n, parse_term());
            else
                return n;
        }
    }
    NodePtr parse_term() {
        NodePtr n = parse_unary();
        for (;;) {
            if (accept('*'))
                n = make(Op::mul, n, parse_unary());
            else if (accept('/'))
                n = make(Op::div, n, parse_unary());
            else
                return n;
        }
    }
    NodePtr parse_unary() {
        if (accept('-')) return make(Op::neg, parse_unary());
        if (accept('+')) return parse_unary();
        return parse_power();
    }
    NodePtr parse_power() {
        NodePtr base = parse_atom();
        if (accept('^')) return make(Op::pow, base, parse_unary());
        return base;
    }
    NodePtr parse_atom() {
        skip_ws();
        if (pos_ >= text_.size()) fail("unexpected end of input");
        if (accept('(')) {
            NodePtr n = parse_expr();
            if (!accept(')')) fail("expected ')'");
            return n;
        }
        const char c = text_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(text_.substr(pos_), &used);
            } catch (const std::exception&) {
                fail("bad number");
            }
            pos_ += used;
            auto n = std::make_shared<Node>();
            n->value = v;
            return n;
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            const std::size_t start = pos_;
            while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
                ++pos_;
            const std::string id = text_.substr(start, pos_ - start);
            auto n = std::make_shared<Node>();
            if (id == "x" || id == "y" || id == "z") {
                n->op = Op::var;
                n->var = id[0] - 'x';
                return n;
            }
            if (id == "pi") {
                n->value = std::numbers::pi;
                return n;
            }
            static const std::vector<std::pair<std::string, Fn>> fns{
                {"exp", Fn::exp}, {"sin", Fn::sin}, {"cos", Fn::cos},
                {"sqrt", Fn::sqrt}, {"log", Fn::log}, {"tan", Fn::tan}};
            for (const auto& [name, fn] : fns)
                if (id == name) {
                    if (!accept('(')) fail("expected '(' after " + id);
                    n->op = Op::fn;
                    n->fn = fn;
                    n->l = parse_expr();
                    if (!accept(')')) fail("expected ')'");
                    return n;
                }
            fail("unknown identifier '" + id + "'");
        }
        fail(std::string("unexpected character '") + c + "'");
    }

    std::string text_;
    std::size_t pos_ = 0;
    NodePtr root_;
};

}  // namespace wgstokes
