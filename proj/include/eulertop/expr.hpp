#pragma once

// Scalar expressions in the coordinates x1..xn and named parameters.
// Trees are immutable; parsing, differentiation, simplification and
// evaluation are separate passes so each can be tested on its own.

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace eulertop {

using ParameterBinding = std::map<std::string, double>;

struct ParseError : std::runtime_error {
    ParseError(const std::string& what, std::size_t position)
        : std::runtime_error(what), position(position) {}
    std::size_t position;  // 1-based offset into the source text
};

struct EvalError : std::runtime_error {
    enum class Kind { DivideByZero, DomainError, UnboundParameter };
    EvalError(Kind kind, const std::string& what)
        : std::runtime_error(what), kind(kind) {}
    Kind kind;
};

class Expression {
public:
    enum class Kind : std::uint8_t {
        Constant, Coordinate, Parameter,
        Negate, Add, Sub, Mul, Div, IntPow,
        Sqrt, Exp, Ln, Sin, Cos,
    };

    struct Node;
    using NodePtr = std::shared_ptr<const Node>;

    struct Node {
        Kind kind;
        double number = 0.0;      // Constant
        int coordinate = 0;       // Coordinate, 1-based
        std::string parameter;    // Parameter
        long long exponent = 0;   // IntPow
        NodePtr a, b;             // children (unary: a only)
    };

    Expression() = default;

    int dimension() const { return dimension_; }
    const NodePtr& root() const { return root_; }
    bool empty() const { return root_ == nullptr; }

    // ---- construction -----------------------------------------------------

    static Expression number(double value, int dimension) {
        return make(leaf(Kind::Constant, [&](Node& n) { n.number = value; }), dimension);
    }
    static Expression coordinate(int index, int dimension) {
        if (index < 1 || index > dimension)
            throw std::invalid_argument("coordinate index out of range");
        return make(leaf(Kind::Coordinate, [&](Node& n) { n.coordinate = index; }), dimension);
    }
    static Expression parameter(std::string name, int dimension) {
        return make(leaf(Kind::Parameter, [&](Node& n) { n.parameter = std::move(name); }),
                    dimension);
    }

    friend Expression operator-(const Expression& e) {
        // fold literal negation the same way the parser does, so construction
        // and parsing produce identical trees
        if (e.root_->kind == Kind::Constant)
            return number(-e.root_->number, e.dimension_);
        return make(unary(Kind::Negate, e.root_), e.dimension_);
    }
    friend Expression operator+(const Expression& l, const Expression& r) {
        return combine(Kind::Add, l, r);
    }
    friend Expression operator-(const Expression& l, const Expression& r) {
        return combine(Kind::Sub, l, r);
    }
    friend Expression operator*(const Expression& l, const Expression& r) {
        return combine(Kind::Mul, l, r);
    }
    friend Expression operator/(const Expression& l, const Expression& r) {
        return combine(Kind::Div, l, r);
    }
    friend Expression pow(const Expression& base, long long exponent) {
        auto n = std::make_shared<Node>();
        n->kind = Kind::IntPow;
        n->exponent = exponent;
        n->a = base.root_;
        return make(std::move(n), base.dimension_);
    }
    friend Expression sqrt(const Expression& e) { return make(unary(Kind::Sqrt, e.root_), e.dimension_); }
    friend Expression exp(const Expression& e)  { return make(unary(Kind::Exp, e.root_), e.dimension_); }
    friend Expression ln(const Expression& e)   { return make(unary(Kind::Ln, e.root_), e.dimension_); }
    friend Expression sin(const Expression& e)  { return make(unary(Kind::Sin, e.root_), e.dimension_); }
    friend Expression cos(const Expression& e)  { return make(unary(Kind::Cos, e.root_), e.dimension_); }

    // ---- passes -----------------------------------------------------------

    double evaluate(std::span<const double> state, const ParameterBinding& bindings = {}) const {
        if (static_cast<int>(state.size()) != dimension_)
            throw std::invalid_argument("state length does not match expression dimension");
        return eval_node(*root_, state, bindings);
    }

    // Exact partial derivative with respect to x_coordinate. The result is
    // deliberately left unsimplified; run simplified() afterwards.
    Expression derivative(int coordinate) const {
        if (coordinate < 1 || coordinate > dimension_)
            throw std::invalid_argument("derivative coordinate out of range");
        return make(diff_node(root_, coordinate), dimension_);
    }

    Expression simplified() const { return make(simplify_node(root_), dimension_); }

    std::string to_string() const {
        std::string out;
        print_node(*root_, out);
        return out;
    }

    friend bool structurally_equal(const Expression& l, const Expression& r) {
        return nodes_equal(l.root_.get(), r.root_.get());
    }

    // Names of all parameters referenced anywhere in the tree.
    std::set<std::string> parameters() const {
        std::set<std::string> out;
        collect_parameters(root_.get(), out);
        return out;
    }

private:
    NodePtr root_;
    int dimension_ = 0;

    static Expression make(NodePtr node, int dimension) {
        Expression e;
        e.root_ = std::move(node);
        e.dimension_ = dimension;
        return e;
    }

    template <class Init>
    static NodePtr leaf(Kind kind, Init init) {
        auto n = std::make_shared<Node>();
        n->kind = kind;
        init(*n);
        return n;
    }

    static NodePtr unary(Kind kind, NodePtr a) {
        auto n = std::make_shared<Node>();
        n->kind = kind;
        n->a = std::move(a);
        return n;
    }

    static NodePtr binary(Kind kind, NodePtr a, NodePtr b) {
        auto n = std::make_shared<Node>();
        n->kind = kind;
        n->a = std::move(a);
        n->b = std::move(b);
        return n;
    }

    static Expression combine(Kind kind, const Expression& l, const Expression& r) {
        if (l.dimension_ != r.dimension_)
            throw std::invalid_argument("mixing expressions of different dimensions");
        return make(binary(kind, l.root_, r.root_), l.dimension_);
    }

    // ---- evaluation ---------------------------------------------------

    static double eval_node(const Node& n, std::span<const double> x,
                            const ParameterBinding& p) {
        switch (n.kind) {
        case Kind::Constant:   return n.number;
        case Kind::Coordinate: return x[static_cast<std::size_t>(n.coordinate - 1)];
        case Kind::Parameter: {
            auto it = p.find(n.parameter);
            if (it == p.end())
                throw EvalError(EvalError::Kind::UnboundParameter,
                                "unbound parameter '" + n.parameter + "'");
            return it->second;
        }
        case Kind::Negate: return -eval_node(*n.a, x, p);
        case Kind::Add:    return eval_node(*n.a, x, p) + eval_node(*n.b, x, p);
        case Kind::Sub:    return eval_node(*n.a, x, p) - eval_node(*n.b, x, p);
        case Kind::Mul:    return eval_node(*n.a, x, p) * eval_node(*n.b, x, p);
        case Kind::Div: {
            const double num = eval_node(*n.a, x, p);
            const double den = eval_node(*n.b, x, p);
            if (den == 0.0)
                throw EvalError(EvalError::Kind::DivideByZero, "division by zero");
            return num / den;
        }
        case Kind::IntPow: return int_pow(eval_node(*n.a, x, p), n.exponent);
        case Kind::Sqrt: {
            const double v = eval_node(*n.a, x, p);
            if (v < 0.0)
                throw EvalError(EvalError::Kind::DomainError, "sqrt of negative value");
            return std::sqrt(v);
        }
        case Kind::Exp: return std::exp(eval_node(*n.a, x, p));
        case Kind::Ln: {
            const double v = eval_node(*n.a, x, p);
            if (v <= 0.0)
                throw EvalError(EvalError::Kind::DomainError, "ln of non-positive value");
            return std::log(v);
        }
        case Kind::Sin: return std::sin(eval_node(*n.a, x, p));
        case Kind::Cos: return std::cos(eval_node(*n.a, x, p));
        }
        throw std::logic_error("unreachable expression kind");
    }

    static double int_pow(double base, long long k) {
        if (k == 0) return 1.0;
        if (k < 0) {
            if (base == 0.0)
                throw EvalError(EvalError::Kind::DivideByZero,
                                "zero raised to a negative power");
            return 1.0 / int_pow(base, -k);
        }
        double acc = 1.0, b = base;
        for (long long e = k; e > 0; e >>= 1) {
            if (e & 1) acc *= b;
            if (e > 1) b *= b;
        }
        return acc;
    }

    // ---- differentiation ----------------------------------------------

    static NodePtr constant(double v) {
        return leaf(Kind::Constant, [&](Node& n) { n.number = v; });
    }

    static NodePtr diff_node(const NodePtr& n, int i) {
        switch (n->kind) {
        case Kind::Constant:
        case Kind::Parameter:  return constant(0.0);
        case Kind::Coordinate: return constant(n->coordinate == i ? 1.0 : 0.0);
        case Kind::Negate:     return unary(Kind::Negate, diff_node(n->a, i));
        case Kind::Add:        return binary(Kind::Add, diff_node(n->a, i), diff_node(n->b, i));
        case Kind::Sub:        return binary(Kind::Sub, diff_node(n->a, i), diff_node(n->b, i));
        case Kind::Mul:
            return binary(Kind::Add,
                          binary(Kind::Mul, diff_node(n->a, i), n->b),
                          binary(Kind::Mul, n->a, diff_node(n->b, i)));
        case Kind::Div:
            // (a'b - a b') / b^2
            return binary(Kind::Div,
                          binary(Kind::Sub,
                                 binary(Kind::Mul, diff_node(n->a, i), n->b),
                                 binary(Kind::Mul, n->a, diff_node(n->b, i))),
                          int_pow_node(n->b, 2));
        case Kind::IntPow: {
            if (n->exponent == 0) return constant(0.0);
            // k * a^(k-1) * a'
            return binary(Kind::Mul,
                          binary(Kind::Mul,
                                 constant(static_cast<double>(n->exponent)),
                                 int_pow_node(n->a, n->exponent - 1)),
                          diff_node(n->a, i));
        }
        case Kind::Sqrt:
            return binary(Kind::Div, diff_node(n->a, i),
                          binary(Kind::Mul, constant(2.0), unary(Kind::Sqrt, n->a)));
        case Kind::Exp:
            return binary(Kind::Mul, diff_node(n->a, i), unary(Kind::Exp, n->a));
        case Kind::Ln:
            return binary(Kind::Div, diff_node(n->a, i), n->a);
        case Kind::Sin:
            return binary(Kind::Mul, diff_node(n->a, i), unary(Kind::Cos, n->a));
        case Kind::Cos:
            return unary(Kind::Negate,
                         binary(Kind::Mul, diff_node(n->a, i), unary(Kind::Sin, n->a)));
        }
        throw std::logic_error("unreachable expression kind");
    }

    static NodePtr int_pow_node(NodePtr base, long long k) {
        auto n = std::make_shared<Node>();
        n->kind = Kind::IntPow;
        n->exponent = k;
        n->a = std::move(base);
        return n;
    }

    // ---- simplification -----------------------------------------------

    static bool is_const(const NodePtr& n, double v) {
        return n->kind == Kind::Constant && n->number == v;
    }

    static NodePtr simplify_node(const NodePtr& n) {
        switch (n->kind) {
        case Kind::Constant:
        case Kind::Coordinate:
        case Kind::Parameter:
            return n;
        case Kind::Negate: {
            NodePtr a = simplify_node(n->a);
            if (a->kind == Kind::Negate) return a->a;
            if (a->kind == Kind::Constant) return constant(-a->number);
            return a == n->a ? n : unary(Kind::Negate, std::move(a));
        }
        case Kind::IntPow: {
            NodePtr a = simplify_node(n->a);
            if (n->exponent == 1) return a;
            if (n->exponent == 0) return constant(1.0);
            if (a->kind == Kind::Constant && !(a->number == 0.0 && n->exponent < 0))
                return constant(int_pow(a->number, n->exponent));
            return a == n->a ? n : int_pow_node(std::move(a), n->exponent);
        }
        case Kind::Sqrt:
        case Kind::Exp:
        case Kind::Ln:
        case Kind::Sin:
        case Kind::Cos: {
            NodePtr a = simplify_node(n->a);
            if (a->kind == Kind::Constant) {
                const double v = a->number;
                switch (n->kind) {
                case Kind::Sqrt: if (v >= 0.0) return constant(std::sqrt(v)); break;
                case Kind::Exp:  return constant(std::exp(v));
                case Kind::Ln:   if (v > 0.0) return constant(std::log(v)); break;
                case Kind::Sin:  return constant(std::sin(v));
                case Kind::Cos:  return constant(std::cos(v));
                default: break;
                }
            }
            return a == n->a ? n : unary(n->kind, std::move(a));
        }
        default:
            break;
        }

        NodePtr a = simplify_node(n->a);
        NodePtr b = simplify_node(n->b);
        switch (n->kind) {
        case Kind::Add:
            if (a->kind == Kind::Constant && b->kind == Kind::Constant)
                return constant(a->number + b->number);
            if (is_const(a, 0.0)) return b;
            if (is_const(b, 0.0)) return a;
            if (b->kind == Kind::Negate) return binary(Kind::Sub, std::move(a), b->a);
            break;
        case Kind::Sub:
            if (a->kind == Kind::Constant && b->kind == Kind::Constant)
                return constant(a->number - b->number);
            if (is_const(b, 0.0)) return a;
            if (is_const(a, 0.0)) return simplify_node(unary(Kind::Negate, b));
            if (b->kind == Kind::Negate) return binary(Kind::Add, std::move(a), b->a);
            break;
        case Kind::Mul:
        case Kind::Div: {
            // lift negation out of products and quotients first
            bool negated = false;
            if (a->kind == Kind::Negate) { negated = !negated; a = a->a; }
            if (b->kind == Kind::Negate) { negated = !negated; b = b->a; }
            NodePtr out;
            if (n->kind == Kind::Mul) {
                if (a->kind == Kind::Constant && b->kind == Kind::Constant)
                    out = constant(a->number * b->number);
                else if (is_const(a, 0.0) || is_const(b, 0.0))
                    return constant(0.0);
                else if (is_const(a, 1.0))
                    out = b;
                else if (is_const(b, 1.0))
                    out = a;
                else
                    out = binary(Kind::Mul, std::move(a), std::move(b));
            } else {
                if (a->kind == Kind::Constant && b->kind == Kind::Constant &&
                    b->number != 0.0)
                    out = constant(a->number / b->number);
                else if (is_const(a, 0.0) && !is_const(b, 0.0))
                    return constant(0.0);  // the quotient-rule zero artifact
                else if (is_const(b, 1.0))
                    out = a;
                else
                    out = binary(Kind::Div, std::move(a), std::move(b));
            }
            if (!negated) return out;
            if (out->kind == Kind::Constant) return constant(-out->number);
            return unary(Kind::Negate, std::move(out));
        }
        default:
            throw std::logic_error("unreachable expression kind");
        }
        if (a == n->a && b == n->b) return n;
        return binary(n->kind, std::move(a), std::move(b));
    }

    // ---- printing -------------------------------------------------------
    // Canonical form: atoms print bare, every compound child is parenthesized,
    // so the printed text re-parses to the identical tree.

    static void print_node(const Node& n, std::string& out) {
        switch (n.kind) {
        case Kind::Constant: {
            // negative literals print parenthesized so they re-parse with the
            // same binding regardless of the surrounding operator
            if (n.number < 0.0 || (n.number == 0.0 && std::signbit(n.number))) {
                out += "(-";
                append_number(-n.number, out);
                out += ')';
            } else {
                append_number(n.number, out);
            }
            return;
        }
        case Kind::Coordinate:
            out += 'x';
            out += std::to_string(n.coordinate);
            return;
        case Kind::Parameter:
            out += n.parameter;
            return;
        case Kind::Negate:
            out += "(-";
            print_node(*n.a, out);
            out += ')';
            return;
        case Kind::Add: print_binary(n, " + ", out); return;
        case Kind::Sub: print_binary(n, " - ", out); return;
        case Kind::Mul: print_binary(n, " * ", out); return;
        case Kind::Div: print_binary(n, " / ", out); return;
        case Kind::IntPow:
            out += '(';
            print_node(*n.a, out);
            out += " ^ ";
            out += std::to_string(n.exponent);
            out += ')';
            return;
        case Kind::Sqrt: print_call("sqrt", n, out); return;
        case Kind::Exp:  print_call("exp", n, out); return;
        case Kind::Ln:   print_call("ln", n, out); return;
        case Kind::Sin:  print_call("sin", n, out); return;
        case Kind::Cos:  print_call("cos", n, out); return;
        }
    }

    static void print_binary(const Node& n, const char* op, std::string& out) {
        out += '(';
        print_node(*n.a, out);
        out += op;
        print_node(*n.b, out);
        out += ')';
    }

    static void print_call(const char* name, const Node& n, std::string& out) {
        out += name;
        out += '(';
        print_node(*n.a, out);
        out += ')';
    }

    static void append_number(double v, std::string& out) {
        char buf[32];
        auto res = std::to_chars(buf, buf + sizeof(buf), v);
        out.append(buf, res.ptr);
    }

    // ---- structural equality --------------------------------------------

    static bool nodes_equal(const Node* l, const Node* r) {
        if (l == r) return true;
        if (l == nullptr || r == nullptr) return false;
        if (l->kind != r->kind) return false;
        switch (l->kind) {
        case Kind::Constant:
            return l->number == r->number &&
                   std::signbit(l->number) == std::signbit(r->number);
        case Kind::Coordinate: return l->coordinate == r->coordinate;
        case Kind::Parameter:  return l->parameter == r->parameter;
        case Kind::IntPow:
            return l->exponent == r->exponent && nodes_equal(l->a.get(), r->a.get());
        default:
            return nodes_equal(l->a.get(), r->a.get()) && nodes_equal(l->b.get(), r->b.get());
        }
    }

    static void collect_parameters(const Node* n, std::set<std::string>& out) {
        if (n == nullptr) return;
        if (n->kind == Kind::Parameter) out.insert(n->parameter);
        collect_parameters(n->a.get(), out);
        collect_parameters(n->b.get(), out);
    }

    friend class Parser;
};

// ---------------------------------------------------------------------------
// Recursive-descent parser. Grammar (loosest binding first):
//
//   expr    ::= term (('+' | '-') term)*            left associative
//   term    ::= unary (('*' | '/') unary)*          left associative
//   unary   ::= '-' unary | power
//   power   ::= primary ('^' ['-'] integer)?
//   primary ::= number | coordinate | parameter | func '(' expr ')' | '(' expr ')'
//
// Coordinates are spelled x1..xn; the declared dimension bounds the index.
// Power exponents must be integer literals.

class Parser {
public:
    Parser(std::string_view source, int dimension, std::set<std::string> parameters)
        : src_(source), dimension_(dimension), parameters_(std::move(parameters)) {
        for (const auto& p : parameters_) {
            if (is_function_name(p) || looks_like_coordinate(p))
                throw std::invalid_argument("parameter name '" + p + "' is reserved");
        }
    }

    Expression run() {
        skip_spaces();
        if (at_end()) throw error("empty expression");
        Expression::NodePtr e = parse_expr();
        skip_spaces();
        if (!at_end()) throw error("unexpected trailing input");
        Expression out;
        out.root_ = std::move(e);
        out.dimension_ = dimension_;
        return out;
    }

private:
    using Kind = Expression::Kind;
    using NodePtr = Expression::NodePtr;

    std::string_view src_;
    std::size_t pos_ = 0;
    int dimension_;
    std::set<std::string> parameters_;

    ParseError error(const std::string& msg) const {
        return ParseError(msg + " at position " + std::to_string(pos_ + 1), pos_ + 1);
    }

    bool at_end() const { return pos_ >= src_.size(); }
    char peek() const { return src_[pos_]; }
    void skip_spaces() {
        while (!at_end() && std::isspace(static_cast<unsigned char>(peek()))) ++pos_;
    }
    bool consume(char c) {
        if (!at_end() && peek() == c) { ++pos_; return true; }
        return false;
    }

    NodePtr parse_expr() {
        NodePtr left = parse_term();
        for (;;) {
            skip_spaces();
            if (consume('+'))      left = Expression::binary(Kind::Add, std::move(left), parse_term());
            else if (consume('-')) left = Expression::binary(Kind::Sub, std::move(left), parse_term());
            else return left;
        }
    }

    NodePtr parse_term() {
        NodePtr left = parse_unary();
        for (;;) {
            skip_spaces();
            if (consume('*'))      left = Expression::binary(Kind::Mul, std::move(left), parse_unary());
            else if (consume('/')) left = Expression::binary(Kind::Div, std::move(left), parse_unary());
            else return left;
        }
    }

    NodePtr parse_unary() {
        skip_spaces();
        if (consume('-')) {
            NodePtr operand = parse_unary();
            // Fold a literal directly so "-2" round-trips as the constant -2.
            if (operand->kind == Kind::Constant)
                return Expression::constant(-operand->number);
            return Expression::unary(Kind::Negate, std::move(operand));
        }
        return parse_power();
    }

    NodePtr parse_power() {
        NodePtr base = parse_primary();
        skip_spaces();
        if (!consume('^')) return base;
        skip_spaces();
        const bool negative = consume('-');
        skip_spaces();
        if (at_end() || !std::isdigit(static_cast<unsigned char>(peek())))
            throw error("expected integer exponent");
        long long k = 0;
        const std::size_t start = pos_;
        while (!at_end() && std::isdigit(static_cast<unsigned char>(peek()))) {
            k = k * 10 + (peek() - '0');
            if (k > (1LL << 40)) { pos_ = start; throw error("exponent too large"); }
            ++pos_;
        }
        if (!at_end() && (peek() == '.' || peek() == 'e' || peek() == 'E')) {
            pos_ = start;
            throw error("exponent must be an integer literal");
        }
        return Expression::int_pow_node(std::move(base), negative ? -k : k);
    }

    NodePtr parse_primary() {
        skip_spaces();
        if (at_end()) throw error("expected operand");
        const char c = peek();
        if (consume('(')) {
            NodePtr inner = parse_expr();
            skip_spaces();
            if (!consume(')')) throw error("expected ')'");
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
        throw error("unexpected character '" + std::string(1, c) + "'");
    }

    NodePtr parse_number() {
        const std::size_t start = pos_;
        while (!at_end() && (std::isdigit(static_cast<unsigned char>(peek())) || peek() == '.'))
            ++pos_;
        if (!at_end() && (peek() == 'e' || peek() == 'E')) {
            ++pos_;
            if (!at_end() && (peek() == '+' || peek() == '-')) ++pos_;
            if (at_end() || !std::isdigit(static_cast<unsigned char>(peek()))) {
                pos_ = start;
                throw error("malformed numeric literal");
            }
            while (!at_end() && std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
        }
        const std::string_view text = src_.substr(start, pos_ - start);
        double value = 0.0;
        auto res = std::from_chars(text.data(), text.data() + text.size(), value);
        if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
            pos_ = start;
            throw error("malformed numeric literal");
        }
        return Expression::constant(value);
    }

    NodePtr parse_identifier() {
        const std::size_t start = pos_;
        while (!at_end() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_'))
            ++pos_;
        const std::string name(src_.substr(start, pos_ - start));

        if (is_function_name(name)) {
            skip_spaces();
            if (!consume('(')) { pos_ = start; throw error("expected '(' after function name"); }
            NodePtr arg = parse_expr();
            skip_spaces();
            if (!consume(')')) throw error("expected ')'");
            Kind k = name == "sqrt" ? Kind::Sqrt
                   : name == "exp"  ? Kind::Exp
                   : name == "ln"   ? Kind::Ln
                   : name == "sin"  ? Kind::Sin
                                    : Kind::Cos;
            return Expression::unary(k, std::move(arg));
        }
        if (looks_like_coordinate(name)) {
            int index = 0;
            for (std::size_t i = 1; i < name.size(); ++i) {
                index = index * 10 + (name[i] - '0');
                if (index > 1'000'000) break;
            }
            if (index < 1 || index > dimension_) {
                pos_ = start;
                throw error("coordinate index out of range in '" + name + "'");
            }
            return Expression::leaf(Kind::Coordinate, [&](Expression::Node& n) {
                n.coordinate = index;
            });
        }
        if (parameters_.count(name)) {
            return Expression::leaf(Kind::Parameter, [&](Expression::Node& n) {
                n.parameter = name;
            });
        }
        pos_ = start;
        throw error("unknown identifier '" + name + "'");
    }

    static bool is_function_name(const std::string& s) {
        return s == "sqrt" || s == "exp" || s == "ln" || s == "sin" || s == "cos";
    }

    static bool looks_like_coordinate(const std::string& s) {
        if (s.size() < 2 || s[0] != 'x') return false;
        for (std::size_t i = 1; i < s.size(); ++i)
            if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
        return true;
    }
};

inline Expression parse(std::string_view source, int dimension,
                        std::set<std::string> parameters = {}) {
    if (dimension < 2) throw std::invalid_argument("dimension must be at least 2");
    return Parser(source, dimension, std::move(parameters)).run();
}

}  // namespace eulertop
