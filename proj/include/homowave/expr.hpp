#ifndef HOMOWAVE_EXPR_HPP
#define HOMOWAVE_EXPR_HPP

#include <cassert>
#include <cmath>
#include <charconv>
#include <cstdio>
#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace homowave {

class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t offset, const std::string& what)
        : std::runtime_error("parse error at offset " + std::to_string(offset) + ": " + what),
          offset_(offset) {}
    std::size_t offset() const { return offset_; }

private:
    std::size_t offset_;
};

class EvalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class ExprKind { Literal, Pi, Variable, Neg, Add, Sub, Mul, Div, Pow, Call };
enum class ExprFunc { Sin, Cos, Exp, Sqrt, Abs, Tanh, Min, Max };

namespace detail {

struct FuncInfo {
    std::string_view name;
    ExprFunc func;
    int arity;
};

inline constexpr FuncInfo kFuncs[] = {
    {"sin", ExprFunc::Sin, 1},  {"cos", ExprFunc::Cos, 1},   {"exp", ExprFunc::Exp, 1},
    {"sqrt", ExprFunc::Sqrt, 1}, {"abs", ExprFunc::Abs, 1},  {"tanh", ExprFunc::Tanh, 1},
    {"min", ExprFunc::Min, 2},  {"max", ExprFunc::Max, 2},
};

inline const FuncInfo* find_func(std::string_view name) {
    for (const auto& f : kFuncs)
        if (f.name == name) return &f;
    return nullptr;
}

} // namespace detail

struct ExprNode;
using ExprHandle = std::shared_ptr<const ExprNode>;

// AST node. Nodes are immutable after construction and shared by value
// copies of Expression, so evaluation is safe from concurrent workers.
struct ExprNode {
    ExprKind kind;
    double literal = 0.0;
    int var_slot = -1;
    std::string var_name;
    ExprFunc func = ExprFunc::Sin;
    std::vector<ExprHandle> args;
};

class Expression {
public:
    Expression() = default;

    // Parses `src` against the declared variable names. Grammar:
    //   expr   := term (('+'|'-') term)*
    //   term   := factor (('*'|'/') factor)*
    //   factor := unary ('^' factor)?
    //   unary  := '-' unary | atom
    //   atom   := number | 'pi' | ident | ident '(' expr (',' expr)* ')' | '(' expr ')'
    // Identifiers: [a-z][a-z0-9_]*.
    static Expression parse(std::string_view src, std::span<const std::string> allowed_vars);

    // Evaluates with one value per declared variable, in declaration order.
    double evaluate(std::span<const double> values) const;

    // Map-based evaluation; throws EvalError on a missing binding.
    double evaluate(const std::map<std::string, double>& bindings) const;

    const std::vector<std::string>& variables() const { return vars_; }

    bool uses_variable(std::string_view name) const { return uses(root_.get(), name); }
    bool is_constant() const;

    // Canonical fully parenthesized form; reparsing it reproduces the AST.
    std::string print() const;

    bool structurally_equal(const Expression& other) const {
        return equal(root_.get(), other.root_.get());
    }

    const ExprHandle& root() const { return root_; }

private:
    static bool uses(const ExprNode* n, std::string_view name);
    static bool equal(const ExprNode* x, const ExprNode* y);
    static void print_node(const ExprNode* n, std::string& out);
    static double eval_node(const ExprNode* n, std::span<const double> values);

    ExprHandle root_;
    std::vector<std::string> vars_;
};

namespace detail {

class Parser {
public:
    Parser(std::string_view src, std::span<const std::string> vars) : src_(src), vars_(vars) {}

    ExprHandle run() {
        if (src_.find_first_not_of(" \t\r\n") == std::string_view::npos)
            throw ParseError(0, "empty expression");
        ExprHandle e = expr();
        skip_ws();
        if (pos_ != src_.size())
            throw ParseError(pos_, std::string("unexpected character '") + src_[pos_] + "'");
        return e;
    }

private:
    void skip_ws() {
        while (pos_ < src_.size() && (src_[pos_] == ' ' || src_[pos_] == '\t' ||
                                      src_[pos_] == '\r' || src_[pos_] == '\n'))
            ++pos_;
    }

    char peek() {
        skip_ws();
        return pos_ < src_.size() ? src_[pos_] : '\0';
    }

    bool accept(char c) {
        if (peek() == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c, const char* what) {
        if (!accept(c)) throw ParseError(pos_, std::string("expected ") + what);
    }

    ExprHandle expr() {
        ExprHandle lhs = term();
        for (;;) {
            if (accept('+'))
                lhs = binary(ExprKind::Add, lhs, term());
            else if (accept('-'))
                lhs = binary(ExprKind::Sub, lhs, term());
            else
                return lhs;
        }
    }

    ExprHandle term() {
        ExprHandle lhs = factor();
        for (;;) {
            if (accept('*'))
                lhs = binary(ExprKind::Mul, lhs, factor());
            else if (accept('/'))
                lhs = binary(ExprKind::Div, lhs, factor());
            else
                return lhs;
        }
    }

    ExprHandle factor() {
        ExprHandle base = unary();
        if (accept('^')) return binary(ExprKind::Pow, base, factor());
        return base;
    }

    ExprHandle unary() {
        if (accept('-')) {
            auto n = std::make_shared<ExprNode>();
            n->kind = ExprKind::Neg;
            n->args.push_back(unary());
            return n;
        }
        return atom();
    }

    ExprHandle atom() {
        const char c = peek();
        if (c == '(') {
            ++pos_;
            ExprHandle e = expr();
            expect(')', "')'");
            return e;
        }
        if (c >= '0' && c <= '9') return number();
        if (c >= 'a' && c <= 'z') return identifier();
        if (c == '\0') throw ParseError(pos_, "unexpected end of input");
        throw ParseError(pos_, std::string("unexpected character '") + c + "'");
    }

    ExprHandle number() {
        const std::size_t start = pos_;
        while (pos_ < src_.size() && src_[pos_] >= '0' && src_[pos_] <= '9') ++pos_;
        if (pos_ < src_.size() && src_[pos_] == '.') {
            ++pos_;
            while (pos_ < src_.size() && src_[pos_] >= '0' && src_[pos_] <= '9') ++pos_;
        }
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            std::size_t mark = pos_++;
            if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
            if (pos_ < src_.size() && src_[pos_] >= '0' && src_[pos_] <= '9') {
                while (pos_ < src_.size() && src_[pos_] >= '0' && src_[pos_] <= '9') ++pos_;
            } else {
                pos_ = mark; // bare 'e' belongs to whatever follows
            }
        }
        double value = 0.0;
        const auto res = std::from_chars(src_.data() + start, src_.data() + pos_, value);
        if (res.ec != std::errc() || res.ptr != src_.data() + pos_)
            throw ParseError(start, "malformed number");
        auto n = std::make_shared<ExprNode>();
        n->kind = ExprKind::Literal;
        n->literal = value;
        return n;
    }

    ExprHandle identifier() {
        const std::size_t start = pos_;
        while (pos_ < src_.size() &&
               ((src_[pos_] >= 'a' && src_[pos_] <= 'z') ||
                (src_[pos_] >= '0' && src_[pos_] <= '9') || src_[pos_] == '_'))
            ++pos_;
        const std::string_view name = src_.substr(start, pos_ - start);

        if (peek() == '(') {
            const FuncInfo* info = find_func(name);
            if (!info)
                throw ParseError(start, "unknown function \"" + std::string(name) + "\"");
            ++pos_;
            auto n = std::make_shared<ExprNode>();
            n->kind = ExprKind::Call;
            n->func = info->func;
            n->args.push_back(expr());
            while (accept(',')) n->args.push_back(expr());
            expect(')', "')'");
            if (static_cast<int>(n->args.size()) != info->arity)
                throw ParseError(start, std::string(name) + " expects " +
                                            std::to_string(info->arity) + " argument(s), got " +
                                            std::to_string(n->args.size()));
            return n;
        }

        if (name == "pi") {
            auto n = std::make_shared<ExprNode>();
            n->kind = ExprKind::Pi;
            return n;
        }
        for (std::size_t i = 0; i < vars_.size(); ++i) {
            if (vars_[i] == name) {
                auto n = std::make_shared<ExprNode>();
                n->kind = ExprKind::Variable;
                n->var_slot = static_cast<int>(i);
                n->var_name = std::string(name);
                return n;
            }
        }
        throw ParseError(start, "unknown identifier \"" + std::string(name) + "\"");
    }

    ExprHandle binary(ExprKind kind, ExprHandle a, ExprHandle b) {
        auto n = std::make_shared<ExprNode>();
        n->kind = kind;
        n->args.push_back(std::move(a));
        n->args.push_back(std::move(b));
        return n;
    }

    std::string_view src_;
    std::span<const std::string> vars_;
    std::size_t pos_ = 0;
};

} // namespace detail

inline Expression Expression::parse(std::string_view src,
                                    std::span<const std::string> allowed_vars) {
    Expression e;
    e.vars_.assign(allowed_vars.begin(), allowed_vars.end());
    detail::Parser p(src, e.vars_);
    e.root_ = p.run();
    return e;
}

inline double Expression::eval_node(const ExprNode* n, std::span<const double> values) {
    switch (n->kind) {
        case ExprKind::Literal: return n->literal;
        case ExprKind::Pi: return 3.141592653589793238462643383279502884;
        case ExprKind::Variable: return values[static_cast<std::size_t>(n->var_slot)];
        case ExprKind::Neg: return -eval_node(n->args[0].get(), values);
        case ExprKind::Add: return eval_node(n->args[0].get(), values) + eval_node(n->args[1].get(), values);
        case ExprKind::Sub: return eval_node(n->args[0].get(), values) - eval_node(n->args[1].get(), values);
        case ExprKind::Mul: return eval_node(n->args[0].get(), values) * eval_node(n->args[1].get(), values);
        case ExprKind::Div: {
            const double num = eval_node(n->args[0].get(), values);
            const double den = eval_node(n->args[1].get(), values);
            if (den == 0.0) throw EvalError("domain error: division by zero");
            const double r = num / den;
            if (!std::isfinite(r)) throw EvalError("domain error: non-finite quotient");
            return r;
        }
        case ExprKind::Pow: {
            const double b = eval_node(n->args[0].get(), values);
            const double e = eval_node(n->args[1].get(), values);
            const double r = std::pow(b, e);
            if (!std::isfinite(r)) throw EvalError("domain error: pow(" + std::to_string(b) +
                                                   ", " + std::to_string(e) + ")");
            return r;
        }
        case ExprKind::Call: {
            const double x = eval_node(n->args[0].get(), values);
            switch (n->func) {
                case ExprFunc::Sin: return std::sin(x);
                case ExprFunc::Cos: return std::cos(x);
                case ExprFunc::Exp: {
                    const double r = std::exp(x);
                    if (!std::isfinite(r)) throw EvalError("domain error: exp overflow");
                    return r;
                }
                case ExprFunc::Sqrt:
                    if (x < 0.0) throw EvalError("domain error: sqrt of negative value");
                    return std::sqrt(x);
                case ExprFunc::Abs: return std::abs(x);
                case ExprFunc::Tanh: return std::tanh(x);
                case ExprFunc::Min: return std::min(x, eval_node(n->args[1].get(), values));
                case ExprFunc::Max: return std::max(x, eval_node(n->args[1].get(), values));
            }
            break;
        }
    }
    throw EvalError("corrupt expression node");
}

inline double Expression::evaluate(std::span<const double> values) const {
    if (!root_) throw EvalError("empty expression");
    if (values.size() < vars_.size()) throw EvalError("missing binding values");
    return eval_node(root_.get(), values);
}

inline double Expression::evaluate(const std::map<std::string, double>& bindings) const {
    std::vector<double> values(vars_.size(), 0.0);
    for (std::size_t i = 0; i < vars_.size(); ++i) {
        const auto it = bindings.find(vars_[i]);
        if (it == bindings.end()) {
            if (uses_variable(vars_[i]))
                throw EvalError("missing binding for \"" + vars_[i] + "\"");
            continue;
        }
        values[i] = it->second;
    }
    return evaluate(values);
}

inline bool Expression::uses(const ExprNode* n, std::string_view name) {
    if (!n) return false;
    if (n->kind == ExprKind::Variable && n->var_name == name) return true;
    for (const auto& a : n->args)
        if (uses(a.get(), name)) return true;
    return false;
}

inline bool Expression::is_constant() const {
    for (const auto& v : vars_)
        if (uses_variable(v)) return false;
    return true;
}

inline bool Expression::equal(const ExprNode* x, const ExprNode* y) {
    if (x == y) return true;
    if (!x || !y || x->kind != y->kind || x->args.size() != y->args.size()) return false;
    switch (x->kind) {
        case ExprKind::Literal:
            if (!(x->literal == y->literal)) return false;
            break;
        case ExprKind::Variable:
            if (x->var_name != y->var_name || x->var_slot != y->var_slot) return false;
            break;
        case ExprKind::Call:
            if (x->func != y->func) return false;
            break;
        default: break;
    }
    for (std::size_t i = 0; i < x->args.size(); ++i)
        if (!equal(x->args[i].get(), y->args[i].get())) return false;
    return true;
}

inline void Expression::print_node(const ExprNode* n, std::string& out) {
    switch (n->kind) {
        case ExprKind::Literal: {
            char buf[40];
            std::snprintf(buf, sizeof(buf), "%.17g", n->literal);
            out += buf;
            return;
        }
        case ExprKind::Pi: out += "pi"; return;
        case ExprKind::Variable: out += n->var_name; return;
        case ExprKind::Neg:
            out += "(-";
            print_node(n->args[0].get(), out);
            out += ')';
            return;
        case ExprKind::Add:
        case ExprKind::Sub:
        case ExprKind::Mul:
        case ExprKind::Div:
        case ExprKind::Pow: {
            const char* op = n->kind == ExprKind::Add   ? " + "
                             : n->kind == ExprKind::Sub ? " - "
                             : n->kind == ExprKind::Mul ? "*"
                             : n->kind == ExprKind::Div ? "/"
                                                        : "^";
            out += '(';
            print_node(n->args[0].get(), out);
            out += op;
            print_node(n->args[1].get(), out);
            out += ')';
            return;
        }
        case ExprKind::Call: {
            for (const auto& f : detail::kFuncs)
                if (f.func == n->func) out += f.name;
            out += '(';
            for (std::size_t i = 0; i < n->args.size(); ++i) {
                if (i) out += ", ";
                print_node(n->args[i].get(), out);
            }
            out += ')';
            return;
        }
    }
}

inline std::string Expression::print() const {
    std::string out;
    if (root_) print_node(root_.get(), out);
    return out;
}

} // namespace homowave

#endif
