// Copyright (c) 2026, The ProtoML Authors
// SPDX-License-Identifier: Apache-2.0

#include "protoml/expr.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>

#include "protoml/error.hpp"

namespace protoml {

// ================================================================ values ==

bool Value::is_concrete() const {
    if (is_unknown()) {
        return false;
    }
    if (const auto* i = as_int()) {
        return i->is_constant();
    }
    if (const auto* l = as_list()) {
        return std::all_of(l->begin(), l->end(), [](const Value& v) { return v.is_concrete(); });
    }
    return true;
}

std::string Value::str() const {
    return std::visit(
        [](const auto& v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, UnknownValue>) {
                return "?";
            } else if constexpr (std::is_same_v<T, NoneValue>) {
                return "None";
            } else if constexpr (std::is_same_v<T, bool>) {
                return v ? "true" : "false";
            } else if constexpr (std::is_same_v<T, SymInt>) {
                return v.str();
            } else if constexpr (std::is_same_v<T, double>) {
                return python_float_literal(v);
            } else if constexpr (std::is_same_v<T, std::string>) {
                return python_string_literal(v);
            } else {
                std::string out = "[";
                for (std::size_t i = 0; i < v.size(); ++i) {
                    if (i) out += ", ";
                    out += v[i].str();
                }
                return out + "]";
            }
        },
        data);
}

// =============================================================== helpers ==

bool is_identifier(std::string_view s) {
    if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) {
        return false;
    }
    return std::all_of(s.begin(), s.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
    });
}

bool is_python_keyword(std::string_view s) {
    static constexpr std::array<std::string_view, 35> kKeywords = {
        "False", "None",   "True",    "and",      "as",     "assert", "async",
        "await", "break",  "class",   "continue", "def",    "del",    "elif",
        "else",  "except", "finally", "for",      "from",   "global", "if",
        "import", "in",    "is",      "lambda",   "nonlocal", "not",  "or",
        "pass",  "raise",  "return",  "try",      "while",  "with",   "yield"};
    return std::find(kKeywords.begin(), kKeywords.end(), s) != kKeywords.end();
}

std::string python_string_literal(std::string_view s) {
    std::string out = "'";
    for (char c : s) {
        switch (c) {
            case '\\': out += "\\\\"; break;
            case '\'': out += "\\'"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            case '\r': out += "\\r"; break;
            default: out += c;
        }
    }
    return out + "'";
}

std::string python_float_literal(double d) {
    if (std::isnan(d)) {
        return "float('nan')";
    }
    if (std::isinf(d)) {
        return d > 0 ? "float('inf')" : "-float('inf')";
    }
    std::array<char, 64> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), d);
    std::string s(buf.data(), end);
    if (s.find_first_of(".e") == std::string::npos) {
        s += ".0";
    }
    return s;
}

// ================================================================= lexer ==

namespace {

enum class Tok { Int, Float, Str, Ident, Op, End };

struct Token {
    Tok kind;
    std::string text;
    std::size_t col;
};

std::vector<Token> lex(std::string_view src) {
    std::vector<Token> out;
    std::size_t i = 0;
    auto fail = [&](const std::string& what, std::size_t col) -> void {
        throw Error(ErrorCode::Parse,
                    what + " at column " + std::to_string(col + 1) + " in '" + std::string(src) + "'");
    };
    while (i < src.size()) {
        char c = src[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        std::size_t start = i;
        if (std::isdigit(static_cast<unsigned char>(c))) {
            bool is_float = false;
            while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i]))) ++i;
            if (i < src.size() && src[i] == '.' && i + 1 < src.size() &&
                std::isdigit(static_cast<unsigned char>(src[i + 1]))) {
                is_float = true;
                ++i;
                while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i]))) ++i;
            }
            if (i < src.size() && (src[i] == 'e' || src[i] == 'E')) {
                std::size_t j = i + 1;
                if (j < src.size() && (src[j] == '+' || src[j] == '-')) ++j;
                if (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) {
                    is_float = true;
                    i = j;
                    while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i]))) ++i;
                }
            }
            out.push_back({is_float ? Tok::Float : Tok::Int, std::string(src.substr(start, i - start)), start});
            continue;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            while (i < src.size() && (std::isalnum(static_cast<unsigned char>(src[i])) || src[i] == '_')) ++i;
            out.push_back({Tok::Ident, std::string(src.substr(start, i - start)), start});
            continue;
        }
        if (c == '\'' || c == '"') {
            char quote = c;
            std::string text;
            ++i;
            bool closed = false;
            while (i < src.size()) {
                char ch = src[i++];
                if (ch == quote) {
                    closed = true;
                    break;
                }
                if (ch == '\\' && i < src.size()) {
                    char esc = src[i++];
                    switch (esc) {
                        case 'n': text += '\n'; break;
                        case 't': text += '\t'; break;
                        case 'r': text += '\r'; break;
                        default: text += esc;
                    }
                    continue;
                }
                text += ch;
            }
            if (!closed) fail("unterminated string", start);
            out.push_back({Tok::Str, text, start});
            continue;
        }
        static constexpr std::array<std::string_view, 7> kTwoChar = {"//", "==", "!=", "<=", ">=", "**", "->"};
        std::string_view two = src.substr(i, 2);
        if (two.size() == 2 && std::find(kTwoChar.begin(), kTwoChar.end(), two) != kTwoChar.end()) {
            if (two == "**" || two == "->") fail("unsupported operator '" + std::string(two) + "'", start);
            out.push_back({Tok::Op, std::string(two), start});
            i += 2;
            continue;
        }
        if (std::string_view("+-*/%()[],.<>").find(c) != std::string_view::npos) {
            out.push_back({Tok::Op, std::string(1, c), start});
            ++i;
            continue;
        }
        fail(std::string("unexpected character '") + c + "'", start);
    }
    out.push_back({Tok::End, "", src.size()});
    return out;
}

// ================================================================ parser ==

class Parser {
public:
    Parser(std::string_view src) : src_(src), toks_(lex(src)) {}

    ExprPtr parse_all() {
        auto e = parse_expr();
        if (peek().kind != Tok::End) fail("unexpected '" + peek().text + "'");
        return e;
    }

private:
    std::string_view src_;
    std::vector<Token> toks_;
    std::size_t pos_ = 0;

    const Token& peek() const { return toks_[pos_]; }
    Token next() { return toks_[pos_++]; }

    [[noreturn]] void fail(const std::string& what) const {
        throw Error(ErrorCode::Parse, what + " at column " + std::to_string(peek().col + 1) + " in '" +
                                          std::string(src_) + "'");
    }

    bool accept_op(std::string_view op) {
        if (peek().kind == Tok::Op && peek().text == op) {
            ++pos_;
            return true;
        }
        return false;
    }
    bool accept_kw(std::string_view kw) {
        if (peek().kind == Tok::Ident && peek().text == kw) {
            ++pos_;
            return true;
        }
        return false;
    }
    void expect_op(std::string_view op) {
        if (!accept_op(op)) fail("expected '" + std::string(op) + "'");
    }

    static ExprPtr make(ExprKind kind, std::string text, std::vector<ExprPtr> children = {}) {
        auto n = std::make_shared<ExprNode>();
        n->kind = kind;
        n->text = std::move(text);
        n->children = std::move(children);
        return n;
    }

    ExprPtr parse_expr() {
        auto then = parse_or();
        if (accept_kw("if")) {
            auto cond = parse_or();
            if (!accept_kw("else")) fail("expected 'else'");
            auto other = parse_expr();
            return make(ExprKind::Ternary, "", {then, cond, other});
        }
        return then;
    }

    ExprPtr parse_or() {
        auto lhs = parse_and();
        while (accept_kw("or")) lhs = make(ExprKind::Or, "or", {lhs, parse_and()});
        return lhs;
    }

    ExprPtr parse_and() {
        auto lhs = parse_not();
        while (accept_kw("and")) lhs = make(ExprKind::And, "and", {lhs, parse_not()});
        return lhs;
    }

    ExprPtr parse_not() {
        if (accept_kw("not")) return make(ExprKind::Not, "not", {parse_not()});
        return parse_cmp();
    }

    ExprPtr parse_cmp() {
        auto lhs = parse_arith();
        static constexpr std::array<std::string_view, 6> kCmp = {"==", "!=", "<=", ">=", "<", ">"};
        for (auto op : kCmp) {
            if (accept_op(op)) {
                auto rhs = parse_arith();
                for (auto op2 : kCmp) {
                    if (peek().kind == Tok::Op && peek().text == op2) fail("chained comparisons are not supported");
                }
                return make(ExprKind::Compare, std::string(op), {lhs, rhs});
            }
        }
        return lhs;
    }

    ExprPtr parse_arith() {
        auto lhs = parse_term();
        while (true) {
            if (accept_op("+")) {
                lhs = make(ExprKind::Binary, "+", {lhs, parse_term()});
            } else if (accept_op("-")) {
                lhs = make(ExprKind::Binary, "-", {lhs, parse_term()});
            } else {
                return lhs;
            }
        }
    }

    ExprPtr parse_term() {
        auto lhs = parse_unary();
        while (true) {
            std::string op;
            for (std::string_view cand : {"*", "//", "/", "%"}) {
                if (accept_op(cand)) {
                    op = cand;
                    break;
                }
            }
            if (op.empty()) return lhs;
            lhs = make(ExprKind::Binary, op, {lhs, parse_unary()});
        }
    }

    ExprPtr parse_unary() {
        if (accept_op("-")) return make(ExprKind::Neg, "-", {parse_unary()});
        return parse_postfix();
    }

    ExprPtr parse_postfix() {
        auto base = parse_primary();
        while (accept_op("[")) {
            auto idx = parse_expr();
            expect_op("]");
            base = make(ExprKind::Index, "", {base, idx});
        }
        return base;
    }

    std::int64_t parse_small_int() {
        if (peek().kind != Tok::Int) fail("expected integer index");
        auto t = next();
        std::int64_t v = 0;
        auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
        if (ec != std::errc() || v > 1'000'000) fail("index out of range");
        return v;
    }

    ExprPtr parse_primary() {
        const Token& t = peek();
        switch (t.kind) {
            case Tok::Int: {
                next();
                auto n = std::make_shared<ExprNode>();
                n->kind = ExprKind::IntLit;
                n->text = t.text;
                auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), n->int_value);
                if (ec != std::errc()) fail("integer literal out of range");
                return n;
            }
            case Tok::Float: {
                Token tok = next();
                auto n = std::make_shared<ExprNode>();
                n->kind = ExprKind::FloatLit;
                n->text = tok.text;
                n->float_value = std::strtod(tok.text.c_str(), nullptr);
                return n;
            }
            case Tok::Str: {
                Token tok = next();
                return make(ExprKind::StrLit, tok.text);
            }
            case Tok::Op: {
                if (accept_op("(")) {
                    auto e = parse_expr();
                    expect_op(")");
                    return e;
                }
                if (accept_op("[")) {
                    std::vector<ExprPtr> items;
                    if (!accept_op("]")) {
                        do {
                            items.push_back(parse_expr());
                        } while (accept_op(","));
                        expect_op("]");
                    }
                    return make(ExprKind::ListLit, "", std::move(items));
                }
                fail("unexpected '" + t.text + "'");
            }
            case Tok::Ident: {
                Token tok = next();
                const std::string& w = tok.text;
                if (w == "true" || w == "True" || w == "false" || w == "False") {
                    auto n = std::make_shared<ExprNode>();
                    n->kind = ExprKind::BoolLit;
                    n->text = w;
                    n->bool_value = (w == "true" || w == "True");
                    return n;
                }
                if (w == "None") return make(ExprKind::NoneLit, "None");
                if (w == "props") {
                    expect_op(".");
                    if (peek().kind != Tok::Ident) fail("expected parameter name after 'props.'");
                    return make(ExprKind::PropRef, next().text);
                }
                if (w == "in") {
                    expect_op("[");
                    auto input = parse_small_int();
                    expect_op("]");
                    expect_op("[");
                    auto axis = parse_small_int();
                    expect_op("]");
                    auto n = std::make_shared<ExprNode>();
                    n->kind = ExprKind::InputDim;
                    n->text = "in";
                    n->input = static_cast<int>(input);
                    n->axis = static_cast<int>(axis);
                    return n;
                }
                if (w == "and" || w == "or" || w == "not" || w == "if" || w == "else") {
                    --pos_;
                    fail("unexpected keyword '" + w + "'");
                }
                if (accept_op("(")) {
                    std::vector<ExprPtr> args;
                    if (!accept_op(")")) {
                        do {
                            args.push_back(parse_expr());
                        } while (accept_op(","));
                        expect_op(")");
                    }
                    if (w != "has_input" && w != "min" && w != "max" && w != "len") {
                        fail("unknown function '" + w + "'");
                    }
                    if (w == "has_input" && (args.size() != 1 || args[0]->kind != ExprKind::IntLit)) {
                        fail("has_input expects one integer literal");
                    }
                    if (w == "len" && args.size() != 1) fail("len expects one argument");
                    if ((w == "min" || w == "max") && args.size() < 2) fail(w + " expects at least two arguments");
                    return make(ExprKind::Call, w, std::move(args));
                }
                return make(ExprKind::Name, w);
            }
            case Tok::End: fail("unexpected end of expression");
        }
        fail("unexpected token");
    }
};

}  // namespace

Expr Expr::parse(std::string_view source) {
    Expr e;
    e.source_ = std::string(source);
    e.root_ = Parser(source).parse_all();
    return e;
}

// ================================================================= refs ==

namespace {
void collect(const ExprNode& n, ExprRefs& r) {
    switch (n.kind) {
        case ExprKind::PropRef: r.props.insert(n.text); break;
        case ExprKind::Name:
            if (n.text == "repeat_index") {
                r.uses_repeat_index = true;
            } else {
                r.names.insert(n.text);
            }
            break;
        case ExprKind::InputDim: r.uses_input_dims = true; break;
        case ExprKind::Call:
            r.calls.insert(n.text);
            r.uses_float_or_bool_ops = true;
            break;
        case ExprKind::Binary:
            if (n.text == "/" || n.text == "%") r.uses_float_or_bool_ops = true;
            break;
        case ExprKind::FloatLit:
        case ExprKind::BoolLit:
        case ExprKind::StrLit:
        case ExprKind::NoneLit:
        case ExprKind::ListLit: r.uses_non_int_literals = true; break;
        case ExprKind::Not:
        case ExprKind::Compare:
        case ExprKind::And:
        case ExprKind::Or:
        case ExprKind::Ternary:
        case ExprKind::Index: r.uses_float_or_bool_ops = true; break;
        default: break;
    }
    for (const auto& c : n.children) collect(*c, r);
}
}  // namespace

ExprRefs collect_refs(const ExprNode& node) {
    ExprRefs r;
    collect(node, r);
    return r;
}

// ============================================================ evaluation ==

namespace {

[[noreturn]] void type_error(const std::string& what) { throw Error(ErrorCode::Schema, what); }

std::optional<double> as_number(const Value& v) {
    if (const auto* f = v.as_float()) return *f;
    if (const auto* i = v.as_int()) {
        if (auto c = i->constant()) return static_cast<double>(*c);
    }
    return std::nullopt;
}

bool is_numeric(const Value& v) { return v.as_float() || v.as_int(); }

Value arith(const std::string& op, const Value& a, const Value& b) {
    if (a.is_unknown() || b.is_unknown()) return {};
    const auto* ia = a.as_int();
    const auto* ib = b.as_int();
    if (ia && ib) {
        if (op == "+") return *ia + *ib;
        if (op == "-") return *ia - *ib;
        if (op == "*") return *ia * *ib;
        if (op == "//") return SymInt::floordiv(*ia, *ib);
        if (op == "%") return SymInt::mod(*ia, *ib);
        if (op == "/") {
            auto ca = ia->constant();
            auto cb = ib->constant();
            if (cb && *cb == 0) type_error("division by zero");
            if (ca && cb) return static_cast<double>(*ca) / static_cast<double>(*cb);
            return {};
        }
    }
    if (is_numeric(a) && is_numeric(b)) {
        auto x = as_number(a);
        auto y = as_number(b);
        if (!x || !y) return {};
        if (op == "+") return *x + *y;
        if (op == "-") return *x - *y;
        if (op == "*") return *x * *y;
        if (*y == 0.0) type_error("division by zero");
        if (op == "/") return *x / *y;
        if (op == "//") return std::floor(*x / *y);
        if (op == "%") return *x - std::floor(*x / *y) * *y;
    }
    if (op == "+") {
        if (a.as_string() && b.as_string()) return *a.as_string() + *b.as_string();
        if (a.as_list() && b.as_list()) {
            ValueList out = *a.as_list();
            out.insert(out.end(), b.as_list()->begin(), b.as_list()->end());
            return out;
        }
    }
    type_error("operator '" + op + "' cannot combine " + a.str() + " and " + b.str());
}

Value compare(const std::string& op, const Value& a, const Value& b) {
    if (a.is_unknown() || b.is_unknown()) return {};
    if (const auto *ia = a.as_int(), *ib = b.as_int(); ia && ib) {
        SymInt diff = *ia - *ib;
        auto c = diff.constant();
        if (!c) return {};
        if (op == "==") return *c == 0;
        if (op == "!=") return *c != 0;
        if (op == "<") return *c < 0;
        if (op == "<=") return *c <= 0;
        if (op == ">") return *c > 0;
        return *c >= 0;
    }
    if (is_numeric(a) && is_numeric(b)) {
        auto x = as_number(a);
        auto y = as_number(b);
        if (!x || !y) return {};
        if (op == "==") return *x == *y;
        if (op == "!=") return *x != *y;
        if (op == "<") return *x < *y;
        if (op == "<=") return *x <= *y;
        if (op == ">") return *x > *y;
        return *x >= *y;
    }
    if (op == "==" || op == "!=") {
        if (!a.is_concrete() || !b.is_concrete()) return {};
        bool eq = a == b;
        return op == "==" ? eq : !eq;
    }
    if (a.as_string() && b.as_string()) {
        int c = a.as_string()->compare(*b.as_string());
        if (op == "<") return c < 0;
        if (op == "<=") return c <= 0;
        if (op == ">") return c > 0;
        return c >= 0;
    }
    type_error("cannot order " + a.str() + " and " + b.str());
}

const bool* want_bool(const Value& v, const char* ctx) {
    if (v.is_unknown()) return nullptr;
    const auto* b = v.as_bool();
    if (!b) type_error(std::string(ctx) + " expects a boolean, got " + v.str());
    return b;
}

}  // namespace

Value evaluate(const ExprNode& n, const EvalEnv& env) {
    switch (n.kind) {
        case ExprKind::IntLit: return n.int_value;
        case ExprKind::FloatLit: return n.float_value;
        case ExprKind::BoolLit: return n.bool_value;
        case ExprKind::StrLit: return n.text;
        case ExprKind::NoneLit: return Value::none();
        case ExprKind::ListLit: {
            ValueList items;
            for (const auto& c : n.children) items.push_back(evaluate(*c, env));
            return items;
        }
        case ExprKind::PropRef: {
            if (env.prop) {
                if (auto v = env.prop(n.text)) return *v;
            }
            type_error("unknown parameter 'props." + n.text + "'");
        }
        case ExprKind::Name: {
            if (env.name) {
                if (auto v = env.name(n.text)) return *v;
            }
            type_error("unknown name '" + n.text + "'");
        }
        case ExprKind::InputDim: {
            if (!env.input_dim) type_error("in[][] is only valid in shape contracts");
            auto d = env.input_dim(n.input, n.axis);
            if (!d) return {};
            return *d;
        }
        case ExprKind::Neg: {
            Value v = evaluate(*n.children[0], env);
            if (v.is_unknown()) return {};
            if (const auto* i = v.as_int()) return -*i;
            if (const auto* f = v.as_float()) return -*f;
            type_error("cannot negate " + v.str());
        }
        case ExprKind::Not: {
            Value v = evaluate(*n.children[0], env);
            const bool* b = want_bool(v, "'not'");
            if (!b) return {};
            return !*b;
        }
        case ExprKind::Binary:
            return arith(n.text, evaluate(*n.children[0], env), evaluate(*n.children[1], env));
        case ExprKind::Compare:
            return compare(n.text, evaluate(*n.children[0], env), evaluate(*n.children[1], env));
        case ExprKind::And:
        case ExprKind::Or: {
            bool is_and = n.kind == ExprKind::And;
            Value lhs = evaluate(*n.children[0], env);
            const bool* l = want_bool(lhs, is_and ? "'and'" : "'or'");
            if (l && *l != is_and) return *l;  // short circuit
            Value rhs = evaluate(*n.children[1], env);
            const bool* r = want_bool(rhs, is_and ? "'and'" : "'or'");
            if (l) return rhs;
            if (r && *r != is_and) return *r;
            return {};
        }
        case ExprKind::Ternary: {
            Value cond = evaluate(*n.children[1], env);
            const bool* c = want_bool(cond, "conditional expression");
            if (c) return evaluate(*n.children[*c ? 0 : 2], env);
            Value a = evaluate(*n.children[0], env);
            Value b = evaluate(*n.children[2], env);
            if (a == b && a.is_concrete()) return a;
            return {};
        }
        case ExprKind::Call: {
            if (n.text == "has_input") {
                if (!env.has_input) type_error("has_input() is only valid in conditions");
                return env.has_input(static_cast<int>(n.children[0]->int_value));
            }
            std::vector<Value> args;
            for (const auto& c : n.children) args.push_back(evaluate(*c, env));
            if (n.text == "len") {
                if (args[0].is_unknown()) return {};
                if (const auto* l = args[0].as_list()) return static_cast<std::int64_t>(l->size());
                if (const auto* s = args[0].as_string()) return static_cast<std::int64_t>(s->size());
                type_error("len() expects a list");
            }
            // min / max
            bool want_min = n.text == "min";
            Value best;
            bool first = true;
            for (auto& a : args) {
                if (a.is_unknown()) return {};
                if (!is_numeric(a)) type_error(n.text + "() expects numbers");
                if (first) {
                    best = a;
                    first = false;
                    continue;
                }
                Value lt = compare("<", a, best);
                const bool* b = lt.as_bool();
                if (!b) return {};
                if (*b == want_min) best = a;
            }
            return best;
        }
        case ExprKind::Index: {
            Value base = evaluate(*n.children[0], env);
            Value idx = evaluate(*n.children[1], env);
            if (base.is_unknown() || idx.is_unknown()) return {};
            const auto* l = base.as_list();
            if (!l) type_error("cannot index " + base.str());
            const auto* i = idx.as_int();
            if (!i) type_error("list index must be an integer");
            auto c = i->constant();
            if (!c) return {};
            std::int64_t k = *c < 0 ? *c + static_cast<std::int64_t>(l->size()) : *c;
            if (k < 0 || k >= static_cast<std::int64_t>(l->size())) {
                type_error("list index " + std::to_string(*c) + " out of range");
            }
            return (*l)[static_cast<std::size_t>(k)];
        }
    }
    type_error("unsupported expression");
}

// ========================================================= static typing ==

std::string_view static_type_name(StaticType t) {
    switch (t) {
        case StaticType::Any: return "any";
        case StaticType::Int: return "int";
        case StaticType::Float: return "float";
        case StaticType::Bool: return "bool";
        case StaticType::String: return "string";
        case StaticType::IntList: return "int_list";
        case StaticType::List: return "list";
        case StaticType::None: return "None";
    }
    return "any";
}

StaticType infer_type(const ExprNode& n, const TypeEnv& env) {
    using T = StaticType;
    auto numeric = [](T t) { return t == T::Int || t == T::Float; };
    switch (n.kind) {
        case ExprKind::IntLit: return T::Int;
        case ExprKind::FloatLit: return T::Float;
        case ExprKind::BoolLit: return T::Bool;
        case ExprKind::StrLit: return T::String;
        case ExprKind::NoneLit: return T::None;
        case ExprKind::ListLit: {
            bool all_int = true;
            for (const auto& c : n.children) all_int = all_int && infer_type(*c, env) == T::Int;
            return all_int ? T::IntList : T::List;
        }
        case ExprKind::PropRef:
            if (env.prop) {
                if (auto t = env.prop(n.text)) return *t;
            }
            return T::Any;
        case ExprKind::Name:
            if (n.text == "repeat_index") return T::Int;
            if (env.name) {
                if (auto t = env.name(n.text)) return *t;
            }
            return T::Any;
        case ExprKind::InputDim: return T::Int;
        case ExprKind::Neg: return infer_type(*n.children[0], env);
        case ExprKind::Not:
        case ExprKind::Compare:
        case ExprKind::And:
        case ExprKind::Or: return T::Bool;
        case ExprKind::Binary: {
            T a = infer_type(*n.children[0], env);
            T b = infer_type(*n.children[1], env);
            if (a == T::Any || b == T::Any) return T::Any;
            if (n.text == "/" && numeric(a) && numeric(b)) return T::Float;
            if (a == T::Int && b == T::Int) return T::Int;
            if (numeric(a) && numeric(b)) return T::Float;
            if (n.text == "+" && a == b) return a;
            return T::Any;
        }
        case ExprKind::Ternary: {
            T a = infer_type(*n.children[0], env);
            T b = infer_type(*n.children[2], env);
            if (a == b) return a;
            if (numeric(a) && numeric(b)) return T::Float;
            return T::Any;
        }
        case ExprKind::Call:
            if (n.text == "has_input") return T::Bool;
            if (n.text == "len") return T::Int;
            {
                bool all_int = true;
                for (const auto& c : n.children) all_int = all_int && infer_type(*c, env) == T::Int;
                return all_int ? T::Int : T::Any;
            }
        case ExprKind::Index: {
            T base = infer_type(*n.children[0], env);
            return base == T::IntList ? T::Int : T::Any;
        }
    }
    return T::Any;
}

// ======================================================== python output ==

namespace {

int precedence(const ExprNode& n) {
    switch (n.kind) {
        case ExprKind::Ternary: return 1;
        case ExprKind::Or: return 2;
        case ExprKind::And: return 3;
        case ExprKind::Not: return 4;
        case ExprKind::Compare: return 5;
        case ExprKind::Binary: return (n.text == "+" || n.text == "-") ? 6 : 7;
        case ExprKind::Neg: return 8;
        case ExprKind::Call: return n.text == "has_input" ? 5 : 9;
        case ExprKind::IntLit: return n.int_value < 0 ? 8 : 9;
        case ExprKind::FloatLit: return n.float_value < 0 ? 8 : 9;
        default: return 9;
    }
}

std::string render(const ExprNode& n, const PyContext& ctx);

std::string child(const ExprNode& c, int min_prec, const PyContext& ctx) {
    std::string s = render(c, ctx);
    return precedence(c) < min_prec ? "(" + s + ")" : s;
}

std::string render(const ExprNode& n, const PyContext& ctx) {
    switch (n.kind) {
        case ExprKind::IntLit: return std::to_string(n.int_value);
        case ExprKind::FloatLit: return python_float_literal(n.float_value);
        case ExprKind::BoolLit: return n.bool_value ? "True" : "False";
        case ExprKind::StrLit: return python_string_literal(n.text);
        case ExprKind::NoneLit: return "None";
        case ExprKind::ListLit: {
            std::string out = "[";
            for (std::size_t i = 0; i < n.children.size(); ++i) {
                if (i) out += ", ";
                out += render(*n.children[i], ctx);
            }
            return out + "]";
        }
        case ExprKind::PropRef: return ctx.prop(n.text);
        case ExprKind::Name: return ctx.name(n.text);
        case ExprKind::InputDim:
            throw Error(ErrorCode::Generation, "shape-contract expression cannot be emitted as code");
        case ExprKind::Neg: return "-" + child(*n.children[0], 8, ctx);
        case ExprKind::Not: return "not " + child(*n.children[0], 4, ctx);
        case ExprKind::Binary:
        case ExprKind::And:
        case ExprKind::Or: {
            int p = precedence(n);
            return child(*n.children[0], p, ctx) + " " + n.text + " " + child(*n.children[1], p + 1, ctx);
        }
        case ExprKind::Compare:
            return child(*n.children[0], 6, ctx) + " " + n.text + " " + child(*n.children[1], 6, ctx);
        case ExprKind::Ternary:
            return child(*n.children[0], 2, ctx) + " if " + child(*n.children[1], 2, ctx) + " else " +
                   child(*n.children[2], 1, ctx);
        case ExprKind::Call: {
            if (n.text == "has_input") return ctx.has_input(static_cast<int>(n.children[0]->int_value));
            std::string out = n.text + "(";
            for (std::size_t i = 0; i < n.children.size(); ++i) {
                if (i) out += ", ";
                out += render(*n.children[i], ctx);
            }
            return out + ")";
        }
        case ExprKind::Index:
            return child(*n.children[0], 9, ctx) + "[" + render(*n.children[1], ctx) + "]";
    }
    throw Error(ErrorCode::Internal, "unsupported expression");
}

}  // namespace

std::string to_python(const ExprNode& node, const PyContext& ctx) { return render(node, ctx); }

bool is_atomic(const ExprNode& node) { return precedence(node) >= 9; }

}  // namespace protoml
