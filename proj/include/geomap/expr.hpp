#pragma once

// Scalar expression language over chart coordinates x1..xn with exact
// second-order forward-mode derivatives. Metric components, hypersurface
// parametrizations and derived tensor fields are all closed-form expressions
// in this language, so curvature-level quantities never rely on differencing.
//
// Grammar:
//   expr   := term (('+'|'-') term)*
//   term   := factor (('*'|'/') factor)*
//   factor := base ('^' intliteral)?
//   base   := number | var | func '(' expr ')' | '(' expr ')' | '-' base
//   var    := 'x' digit+          (1-based index)
//   func   := sin | cos | exp | ln | sqrt | abs
// Whitespace is insignificant; numbers are decimals with optional exponent.

#include "geomap/common.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

namespace geomap {

enum class ExprOp {
    constant,
    variable,
    neg,
    sin,
    cos,
    exp,
    ln,
    sqrt,
    abs,
    add,
    sub,
    mul,
    div,
    pow_int,
};

struct ExprNode;
using ExprPtr = std::shared_ptr<const ExprNode>;

// Immutable after construction; shared subtrees make derived fields DAGs.
struct ExprNode {
    ExprOp op;
    double value = 0.0;  // constant
    int var_index = 0;   // variable (1-based)
    int exponent = 0;    // pow_int
    ExprPtr lhs;
    ExprPtr rhs;
};

// Value, gradient and symmetric Hessian of a scalar at a point. The Hessian
// is stored as the packed upper triangle so symmetry is exact by storage.
struct JetValue {
    double value = 0.0;
    Vec grad;
    Vec hess;  // packed, sym_size(n) entries
    bool abs_kink = false;

    int dimension() const { return static_cast<int>(grad.size()); }

    double hess_at(int i, int j) const { return hess[sym_index(i, j, dimension())]; }

    Mat hess_matrix() const {
        int n = dimension();
        Mat h(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) h(i, j) = h(j, i) = hess_at(i, j);
        return h;
    }

    static JetValue zero(int n) {
        JetValue j;
        j.grad = Vec::Zero(n);
        j.hess = Vec::Zero(sym_size(n));
        return j;
    }

    static JetValue constant(double v, int n) {
        JetValue j = zero(n);
        j.value = v;
        return j;
    }
};

class ExprAST {
public:
    ExprAST() = default;
    ExprAST(ExprPtr root, int dimension) : root_(std::move(root)), dimension_(dimension) {}

    const ExprPtr& root() const { return root_; }
    int dimension() const { return dimension_; }
    bool valid() const { return root_ != nullptr; }

private:
    ExprPtr root_;
    int dimension_ = 0;
};

// ---------------------------------------------------------------------------
// Builders. Used by the parser, by symbolic differentiation and by the
// derived-field constructions in the mapping layer. Constant folding of
// additive/multiplicative identities keeps derivative DAGs from drowning in
// zero nodes; no other rewriting happens.
// ---------------------------------------------------------------------------

namespace ast {

inline ExprPtr number(double v) {
    auto n = std::make_shared<ExprNode>();
    n->op = ExprOp::constant;
    n->value = v;
    return n;
}

inline ExprPtr variable(int index) {
    auto n = std::make_shared<ExprNode>();
    n->op = ExprOp::variable;
    n->var_index = index;
    return n;
}

inline bool is_const(const ExprPtr& e, double v) {
    return e->op == ExprOp::constant && e->value == v;
}

inline ExprPtr unary(ExprOp op, ExprPtr a) {
    auto n = std::make_shared<ExprNode>();
    n->op = op;
    n->lhs = std::move(a);
    return n;
}

inline ExprPtr binary(ExprOp op, ExprPtr a, ExprPtr b) {
    auto n = std::make_shared<ExprNode>();
    n->op = op;
    n->lhs = std::move(a);
    n->rhs = std::move(b);
    return n;
}

inline ExprPtr neg(ExprPtr a) {
    if (is_const(a, 0.0)) return a;
    return unary(ExprOp::neg, std::move(a));
}

inline ExprPtr add(ExprPtr a, ExprPtr b) {
    if (is_const(a, 0.0)) return b;
    if (is_const(b, 0.0)) return a;
    return binary(ExprOp::add, std::move(a), std::move(b));
}

inline ExprPtr sub(ExprPtr a, ExprPtr b) {
    if (is_const(b, 0.0)) return a;
    if (is_const(a, 0.0)) return neg(std::move(b));
    return binary(ExprOp::sub, std::move(a), std::move(b));
}

inline ExprPtr mul(ExprPtr a, ExprPtr b) {
    if (is_const(a, 0.0) || is_const(b, 0.0)) return number(0.0);
    if (is_const(a, 1.0)) return b;
    if (is_const(b, 1.0)) return a;
    return binary(ExprOp::mul, std::move(a), std::move(b));
}

inline ExprPtr div(ExprPtr a, ExprPtr b) {
    if (is_const(a, 0.0)) return a;
    if (is_const(b, 1.0)) return a;
    return binary(ExprOp::div, std::move(a), std::move(b));
}

inline ExprPtr pow_int(ExprPtr a, int k) {
    if (k == 1) return a;
    auto n = std::make_shared<ExprNode>();
    n->op = ExprOp::pow_int;
    n->exponent = k;
    n->lhs = std::move(a);
    return n;
}

inline ExprPtr sin(ExprPtr a) { return unary(ExprOp::sin, std::move(a)); }
inline ExprPtr cos(ExprPtr a) { return unary(ExprOp::cos, std::move(a)); }
inline ExprPtr exp(ExprPtr a) { return unary(ExprOp::exp, std::move(a)); }
inline ExprPtr ln(ExprPtr a) { return unary(ExprOp::ln, std::move(a)); }
inline ExprPtr sqrt(ExprPtr a) { return unary(ExprOp::sqrt, std::move(a)); }
inline ExprPtr abs(ExprPtr a) { return unary(ExprOp::abs, std::move(a)); }

}  // namespace ast

// ---------------------------------------------------------------------------
// Pretty printer. Output reparses to an evaluation-identical tree; constants
// print with 17 significant digits so doubles round-trip exactly.
// ---------------------------------------------------------------------------

namespace detail {

inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline int print_precedence(ExprOp op) {
    switch (op) {
        case ExprOp::add:
        case ExprOp::sub: return 1;
        case ExprOp::mul:
        case ExprOp::div: return 2;
        case ExprOp::neg: return 3;
        case ExprOp::pow_int: return 4;
        default: return 5;  // atoms and function calls
    }
}

inline void print_node(const ExprNode& node, std::string& out);

inline void print_child(const ExprNode& child, int min_prec, std::string& out) {
    bool parens = print_precedence(child.op) < min_prec ||
                  (child.op == ExprOp::constant && child.value < 0);
    if (parens) out += '(';
    print_node(child, out);
    if (parens) out += ')';
}

inline void print_node(const ExprNode& node, std::string& out) {
    switch (node.op) {
        case ExprOp::constant:
            out += format_double(node.value);
            break;
        case ExprOp::variable:
            out += 'x';
            out += std::to_string(node.var_index);
            break;
        case ExprOp::neg:
            out += '-';
            print_child(*node.lhs, 4, out);
            break;
        case ExprOp::add:
            print_child(*node.lhs, 1, out);
            out += " + ";
            print_child(*node.rhs, 2, out);
            break;
        case ExprOp::sub:
            print_child(*node.lhs, 1, out);
            out += " - ";
            print_child(*node.rhs, 2, out);
            break;
        case ExprOp::mul:
            print_child(*node.lhs, 2, out);
            out += '*';
            print_child(*node.rhs, 3, out);
            break;
        case ExprOp::div:
            print_child(*node.lhs, 2, out);
            out += '/';
            print_child(*node.rhs, 3, out);
            break;
        case ExprOp::pow_int:
            print_child(*node.lhs, 5, out);
            out += '^';
            out += std::to_string(node.exponent);
            break;
        case ExprOp::sin: out += "sin("; print_node(*node.lhs, out); out += ')'; break;
        case ExprOp::cos: out += "cos("; print_node(*node.lhs, out); out += ')'; break;
        case ExprOp::exp: out += "exp("; print_node(*node.lhs, out); out += ')'; break;
        case ExprOp::ln: out += "ln("; print_node(*node.lhs, out); out += ')'; break;
        case ExprOp::sqrt: out += "sqrt("; print_node(*node.lhs, out); out += ')'; break;
        case ExprOp::abs: out += "abs("; print_node(*node.lhs, out); out += ')'; break;
    }
}

}  // namespace detail

inline std::string to_string(const ExprAST& ast) {
    std::string out;
    if (ast.valid()) detail::print_node(*ast.root(), out);
    return out;
}

namespace detail {

inline std::string describe_subexpr(const ExprNode& node) {
    std::string s;
    print_node(node, s);
    if (s.size() > 96) s = s.substr(0, 93) + "...";
    return "'" + s + "'";
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Parser: recursive descent over the grammar above. Errors carry the byte
// offset of the offending token.
// ---------------------------------------------------------------------------

namespace detail {

class Parser {
public:
    Parser(std::string_view src, int dimension) : src_(src), dim_(dimension) {}

    ExprPtr parse() {
        ExprPtr e = parse_expr();
        skip_ws();
        if (pos_ != src_.size())
            fail("unexpected trailing input", pos_);
        return e;
    }

private:
    std::string_view src_;
    int dim_;
    size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& what, size_t at) const {
        throw Error(ErrorCode::syntax_error,
                    what + " at position " + std::to_string(at) + " in \"" + std::string(src_) + "\"");
    }

    void skip_ws() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }

    bool eat(char c) {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    char peek() {
        skip_ws();
        return pos_ < src_.size() ? src_[pos_] : '\0';
    }

    ExprPtr parse_expr() {
        ExprPtr e = parse_term();
        for (;;) {
            if (eat('+')) e = ast::binary(ExprOp::add, e, parse_term());
            else if (eat('-')) e = ast::binary(ExprOp::sub, e, parse_term());
            else return e;
        }
    }

    ExprPtr parse_term() {
        ExprPtr e = parse_factor();
        for (;;) {
            if (eat('*')) e = ast::binary(ExprOp::mul, e, parse_factor());
            else if (eat('/')) e = ast::binary(ExprOp::div, e, parse_factor());
            else return e;
        }
    }

    ExprPtr parse_factor() {
        ExprPtr base = parse_base();
        if (eat('^')) return ast::pow_int(base, parse_int_literal());
        return base;
    }

    int parse_int_literal() {
        skip_ws();
        size_t start = pos_;
        bool negative = false;
        if (pos_ < src_.size() && src_[pos_] == '-') {
            negative = true;
            ++pos_;
        }
        if (pos_ >= src_.size() || !std::isdigit(static_cast<unsigned char>(src_[pos_])))
            fail("expected integer exponent", start);
        long v = 0;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
            v = v * 10 + (src_[pos_] - '0');
            if (v > 1000) fail("exponent too large", start);
            ++pos_;
        }
        return static_cast<int>(negative ? -v : v);
    }

    ExprPtr parse_base() {
        skip_ws();
        if (pos_ >= src_.size()) fail("unexpected end of input", pos_);
        char c = src_[pos_];
        if (c == '-') {
            ++pos_;
            return ast::unary(ExprOp::neg, parse_base());
        }
        if (c == '(') {
            ++pos_;
            ExprPtr e = parse_expr();
            if (!eat(')')) fail("expected ')'", pos_);
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c))) return parse_ident();
        fail(std::string("unexpected character '") + c + "'", pos_);
    }

    ExprPtr parse_number() {
        size_t start = pos_;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
        if (pos_ < src_.size() && src_[pos_] == '.') {
            ++pos_;
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
        }
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            size_t mark = pos_;
            ++pos_;
            if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
            if (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
                while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
            } else {
                pos_ = mark;  // 'e' belongs to something else; not a valid exponent
            }
        }
        std::string text(src_.substr(start, pos_ - start));
        if (text == ".") fail("malformed number", start);
        try {
            return ast::number(std::stod(text));
        } catch (const std::exception&) {
            fail("malformed number \"" + text + "\"", start);
        }
    }

    ExprPtr parse_ident() {
        size_t start = pos_;
        while (pos_ < src_.size() && std::isalpha(static_cast<unsigned char>(src_[pos_]))) ++pos_;
        std::string name(src_.substr(start, pos_ - start));
        if (name == "x") {
            size_t digits = pos_;
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
            if (pos_ == digits) fail("variable needs an index (x1..xn)", start);
            long idx = std::stol(std::string(src_.substr(digits, pos_ - digits)));
            if (idx < 1 || idx > dim_)
                throw Error(ErrorCode::var_out_of_range,
                            "variable x" + std::to_string(idx) + " out of range for dimension " +
                                std::to_string(dim_) + " at position " + std::to_string(start));
            return ast::variable(static_cast<int>(idx));
        }
        static const std::unordered_map<std::string, ExprOp> funcs = {
            {"sin", ExprOp::sin}, {"cos", ExprOp::cos}, {"exp", ExprOp::exp},
            {"ln", ExprOp::ln},   {"sqrt", ExprOp::sqrt}, {"abs", ExprOp::abs},
        };
        auto it = funcs.find(name);
        if (it == funcs.end()) fail("unknown identifier \"" + name + "\"", start);
        if (!eat('(')) fail("expected '(' after " + name, pos_);
        ExprPtr arg = parse_expr();
        if (!eat(')')) fail("expected ')'", pos_);
        return ast::unary(it->second, arg);
    }
};

}  // namespace detail

inline ExprAST parse_expr(const std::string& src, int dimension) {
    if (dimension < 1)
        throw Error(ErrorCode::dimension_mismatch, "dimension must be >= 1");
    detail::Parser p(src, dimension);
    return ExprAST(p.parse(), dimension);
}

// ---------------------------------------------------------------------------
// Evaluation. Both evaluators memoize on node identity so shared subtrees of
// derived-field DAGs are computed once per point.
// ---------------------------------------------------------------------------

namespace detail {

[[noreturn]] inline void domain_error(const ExprNode& node, const std::string& what) {
    throw Error(ErrorCode::expr_domain, what + " in " + describe_subexpr(node));
}

inline double eval_value_node(const ExprNode& node, const Vec& x,
                              std::unordered_map<const ExprNode*, double>& memo) {
    if (auto it = memo.find(&node); it != memo.end()) return it->second;
    double r = 0;
    switch (node.op) {
        case ExprOp::constant: r = node.value; break;
        case ExprOp::variable: r = x[node.var_index - 1]; break;
        case ExprOp::neg: r = -eval_value_node(*node.lhs, x, memo); break;
        case ExprOp::sin: r = std::sin(eval_value_node(*node.lhs, x, memo)); break;
        case ExprOp::cos: r = std::cos(eval_value_node(*node.lhs, x, memo)); break;
        case ExprOp::exp: r = std::exp(eval_value_node(*node.lhs, x, memo)); break;
        case ExprOp::ln: {
            double u = eval_value_node(*node.lhs, x, memo);
            if (!(u > 0)) domain_error(node, "ln of non-positive argument");
            r = std::log(u);
            break;
        }
        case ExprOp::sqrt: {
            double u = eval_value_node(*node.lhs, x, memo);
            if (!(u > 0)) domain_error(node, "sqrt of non-positive argument");
            r = std::sqrt(u);
            break;
        }
        case ExprOp::abs: r = std::abs(eval_value_node(*node.lhs, x, memo)); break;
        case ExprOp::add:
            r = eval_value_node(*node.lhs, x, memo) + eval_value_node(*node.rhs, x, memo);
            break;
        case ExprOp::sub:
            r = eval_value_node(*node.lhs, x, memo) - eval_value_node(*node.rhs, x, memo);
            break;
        case ExprOp::mul:
            r = eval_value_node(*node.lhs, x, memo) * eval_value_node(*node.rhs, x, memo);
            break;
        case ExprOp::div: {
            double denom = eval_value_node(*node.rhs, x, memo);
            if (denom == 0) domain_error(node, "division by zero");
            r = eval_value_node(*node.lhs, x, memo) / denom;
            break;
        }
        case ExprOp::pow_int: {
            double u = eval_value_node(*node.lhs, x, memo);
            if (u == 0 && node.exponent < 0) domain_error(node, "zero base with negative exponent");
            r = int_pow(u, node.exponent);
            break;
        }
    }
    memo.emplace(&node, r);
    return r;
}

// Second-order forward propagation kernels. n is implied by vector sizes.

inline JetValue jet_linear(const JetValue& a, const JetValue& b, double sa, double sb) {
    JetValue r;
    r.value = sa * a.value + sb * b.value;
    r.grad = sa * a.grad + sb * b.grad;
    r.hess = sa * a.hess + sb * b.hess;
    r.abs_kink = a.abs_kink || b.abs_kink;
    return r;
}

inline JetValue jet_mul(const JetValue& a, const JetValue& b) {
    int n = a.dimension();
    JetValue r = JetValue::zero(n);
    r.value = a.value * b.value;
    r.grad = a.grad * b.value + b.grad * a.value;
    int idx = 0;
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j, ++idx)
            r.hess[idx] = a.hess[idx] * b.value + b.hess[idx] * a.value +
                          a.grad[i] * b.grad[j] + a.grad[j] * b.grad[i];
    r.abs_kink = a.abs_kink || b.abs_kink;
    return r;
}

inline JetValue jet_div(const JetValue& a, const JetValue& b, const ExprNode& node) {
    if (b.value == 0) domain_error(node, "division by zero");
    int n = a.dimension();
    JetValue r = JetValue::zero(n);
    r.value = a.value / b.value;
    r.grad = (a.grad - r.value * b.grad) / b.value;
    int idx = 0;
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j, ++idx)
            r.hess[idx] = (a.hess[idx] - r.grad[i] * b.grad[j] - r.grad[j] * b.grad[i] -
                           r.value * b.hess[idx]) /
                          b.value;
    r.abs_kink = a.abs_kink || b.abs_kink;
    return r;
}

// f(u) with supplied f(u0), f'(u0), f''(u0).
inline JetValue jet_chain(const JetValue& u, double f, double fp, double fpp) {
    int n = u.dimension();
    JetValue r = JetValue::zero(n);
    r.value = f;
    r.grad = fp * u.grad;
    int idx = 0;
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j, ++idx)
            r.hess[idx] = fp * u.hess[idx] + fpp * u.grad[i] * u.grad[j];
    r.abs_kink = u.abs_kink;
    return r;
}

inline JetValue eval_jet_node(const ExprNode& node, const Vec& x,
                              std::unordered_map<const ExprNode*, JetValue>& memo) {
    if (auto it = memo.find(&node); it != memo.end()) return it->second;
    int n = static_cast<int>(x.size());
    JetValue r;
    switch (node.op) {
        case ExprOp::constant:
            r = JetValue::constant(node.value, n);
            break;
        case ExprOp::variable:
            r = JetValue::zero(n);
            r.value = x[node.var_index - 1];
            r.grad[node.var_index - 1] = 1.0;
            break;
        case ExprOp::neg: {
            JetValue u = eval_jet_node(*node.lhs, x, memo);
            r = jet_chain(u, -u.value, -1.0, 0.0);
            break;
        }
        case ExprOp::sin: {
            JetValue u = eval_jet_node(*node.lhs, x, memo);
            r = jet_chain(u, std::sin(u.value), std::cos(u.value), -std::sin(u.value));
            break;
        }
        case ExprOp::cos: {
            JetValue u = eval_jet_node(*node.lhs, x, memo);
            r = jet_chain(u, std::cos(u.value), -std::sin(u.value), -std::cos(u.value));
            break;
        }
        case ExprOp::exp: {
            JetValue u = eval_jet_node(*node.lhs, x, memo);
            double e = std::exp(u.value);
            r = jet_chain(u, e, e, e);
            break;
        }
        case ExprOp::ln: {
            JetValue u = eval_jet_node(*node.lhs, x, memo);
            if (!(u.value > 0)) domain_error(node, "ln of non-positive argument");
            r = jet_chain(u, std::log(u.value), 1.0 / u.value, -1.0 / (u.value * u.value));
            break;
        }
        case ExprOp::sqrt: {
            JetValue u = eval_jet_node(*node.lhs, x, memo);
            if (!(u.value > 0)) domain_error(node, "sqrt of non-positive argument");
            double s = std::sqrt(u.value);
            r = jet_chain(u, s, 0.5 / s, -0.25 / (s * u.value));
            break;
        }
        case ExprOp::abs: {
            JetValue u = eval_jet_node(*node.lhs, x, memo);
            if (u.value == 0) {
                // Kink convention: zero derivatives, point flagged for reports.
                r = JetValue::zero(n);
                r.abs_kink = true;
            } else {
                r = jet_chain(u, std::abs(u.value), u.value > 0 ? 1.0 : -1.0, 0.0);
            }
            break;
        }
        case ExprOp::add:
            r = jet_linear(eval_jet_node(*node.lhs, x, memo), eval_jet_node(*node.rhs, x, memo), 1.0, 1.0);
            break;
        case ExprOp::sub:
            r = jet_linear(eval_jet_node(*node.lhs, x, memo), eval_jet_node(*node.rhs, x, memo), 1.0, -1.0);
            break;
        case ExprOp::mul:
            r = jet_mul(eval_jet_node(*node.lhs, x, memo), eval_jet_node(*node.rhs, x, memo));
            break;
        case ExprOp::div:
            r = jet_div(eval_jet_node(*node.lhs, x, memo), eval_jet_node(*node.rhs, x, memo), node);
            break;
        case ExprOp::pow_int: {
            JetValue u = eval_jet_node(*node.lhs, x, memo);
            int k = node.exponent;
            if (u.value == 0 && k < 0) domain_error(node, "zero base with negative exponent");
            double f = int_pow(u.value, k);
            double fp = (k == 0) ? 0.0 : k * int_pow(u.value, k - 1);
            double fpp = (k == 0 || k == 1) ? 0.0 : static_cast<double>(k) * (k - 1) * int_pow(u.value, k - 2);
            r = jet_chain(u, f, fp, fpp);
            break;
        }
    }
    memo.emplace(&node, r);
    return r;
}

}  // namespace detail

inline void check_point_dimension(const ExprAST& ast, const Vec& point) {
    if (static_cast<int>(point.size()) != ast.dimension())
        throw Error(ErrorCode::dimension_mismatch,
                    "point has dimension " + std::to_string(point.size()) + ", expression expects " +
                        std::to_string(ast.dimension()));
}

inline double eval_value(const ExprAST& ast, const Vec& point) {
    check_point_dimension(ast, point);
    std::unordered_map<const ExprNode*, double> memo;
    return detail::eval_value_node(*ast.root(), point, memo);
}

inline JetValue eval_jet(const ExprAST& ast, const Vec& point) {
    check_point_dimension(ast, point);
    std::unordered_map<const ExprNode*, JetValue> memo;
    return detail::eval_jet_node(*ast.root(), point, memo);
}

// ---------------------------------------------------------------------------
// Symbolic derivative with respect to x_var (1-based). Shared subtrees keep
// their sharing in the result.
// ---------------------------------------------------------------------------

namespace detail {

inline ExprPtr diff_node(const ExprPtr& node, int var,
                         std::unordered_map<const ExprNode*, ExprPtr>& memo) {
    if (auto it = memo.find(node.get()); it != memo.end()) return it->second;
    ExprPtr r;
    switch (node->op) {
        case ExprOp::constant:
            r = ast::number(0.0);
            break;
        case ExprOp::variable:
            r = ast::number(node->var_index == var ? 1.0 : 0.0);
            break;
        case ExprOp::neg:
            r = ast::neg(diff_node(node->lhs, var, memo));
            break;
        case ExprOp::sin:
            r = ast::mul(ast::cos(node->lhs), diff_node(node->lhs, var, memo));
            break;
        case ExprOp::cos:
            r = ast::neg(ast::mul(ast::sin(node->lhs), diff_node(node->lhs, var, memo)));
            break;
        case ExprOp::exp:
            r = ast::mul(ast::exp(node->lhs), diff_node(node->lhs, var, memo));
            break;
        case ExprOp::ln:
            r = ast::div(diff_node(node->lhs, var, memo), node->lhs);
            break;
        case ExprOp::sqrt:
            r = ast::div(diff_node(node->lhs, var, memo),
                         ast::mul(ast::number(2.0), ast::sqrt(node->lhs)));
            break;
        case ExprOp::abs:
            // d|u| = (u/|u|) du; undefined at u = 0, consistent with the kink rule.
            r = ast::mul(ast::div(node->lhs, ast::abs(node->lhs)), diff_node(node->lhs, var, memo));
            break;
        case ExprOp::add:
            r = ast::add(diff_node(node->lhs, var, memo), diff_node(node->rhs, var, memo));
            break;
        case ExprOp::sub:
            r = ast::sub(diff_node(node->lhs, var, memo), diff_node(node->rhs, var, memo));
            break;
        case ExprOp::mul:
            r = ast::add(ast::mul(diff_node(node->lhs, var, memo), node->rhs),
                         ast::mul(node->lhs, diff_node(node->rhs, var, memo)));
            break;
        case ExprOp::div:
            r = ast::div(ast::sub(ast::mul(diff_node(node->lhs, var, memo), node->rhs),
                                  ast::mul(node->lhs, diff_node(node->rhs, var, memo))),
                         ast::mul(node->rhs, node->rhs));
            break;
        case ExprOp::pow_int: {
            int k = node->exponent;
            if (k == 0) {
                r = ast::number(0.0);
            } else {
                r = ast::mul(ast::mul(ast::number(static_cast<double>(k)), ast::pow_int(node->lhs, k - 1)),
                             diff_node(node->lhs, var, memo));
            }
            break;
        }
    }
    memo.emplace(node.get(), r);
    return r;
}

}  // namespace detail

inline ExprAST differentiate(const ExprAST& ast_in, int var) {
    if (var < 1 || var > ast_in.dimension())
        throw Error(ErrorCode::var_out_of_range, "derivative variable index out of range");
    std::unordered_map<const ExprNode*, ExprPtr> memo;
    return ExprAST(detail::diff_node(ast_in.root(), var, memo), ast_in.dimension());
}

}  // namespace geomap
