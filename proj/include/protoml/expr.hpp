// Copyright (c) 2026, The ProtoML Authors
// SPDX-License-Identifier: Apache-2.0
//
// The small Python-flavoured expression language shared by parameter
// bindings, block-level variables, repeat counts, conditions and shape
// contracts.
//
//   expr    := or ['if' or 'else' expr]
//   or      := and ('or' and)*
//   and     := not ('and' not)*
//   not     := 'not' not | cmp
//   cmp     := arith [('=='|'!='|'<'|'<='|'>'|'>=') arith]
//   arith   := term (('+'|'-') term)*
//   term    := unary (('*'|'//'|'/'|'%') unary)*
//   unary   := '-' unary | postfix
//   postfix := primary ('[' expr ']')*
//   primary := INT | FLOAT | STRING | true | false | None | '(' expr ')'
//            | '[' [expr (',' expr)*] ']' | 'props' '.' IDENT
//            | 'in' '[' INT ']' '[' INT ']' | IDENT '(' args ')' | IDENT

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "protoml/symbolic.hpp"

namespace protoml {

// ---------------------------------------------------------------- values --

struct Value;
using ValueList = std::vector<Value>;

struct UnknownValue {
    bool operator==(const UnknownValue&) const = default;
};
struct NoneValue {
    bool operator==(const NoneValue&) const = default;
};

/// Result of evaluating an expression. Integers are symbolic so that shape
/// arithmetic over unresolved parameters stays exact; floats are concrete.
struct Value {
    std::variant<UnknownValue, NoneValue, bool, SymInt, double, std::string, ValueList> data;

    Value() = default;
    Value(bool b) : data(b) {}                                   // NOLINT
    Value(SymInt i) : data(std::move(i)) {}                      // NOLINT
    Value(std::int64_t i) : data(SymInt(i)) {}                   // NOLINT
    Value(int i) : data(SymInt(static_cast<std::int64_t>(i))) {}  // NOLINT
    Value(double d) : data(d) {}                                 // NOLINT
    Value(std::string s) : data(std::move(s)) {}                 // NOLINT
    Value(ValueList l) : data(std::move(l)) {}                   // NOLINT
    static Value none() {
        Value v;
        v.data = NoneValue{};
        return v;
    }

    bool is_unknown() const { return std::holds_alternative<UnknownValue>(data); }
    const SymInt* as_int() const { return std::get_if<SymInt>(&data); }
    const bool* as_bool() const { return std::get_if<bool>(&data); }
    const double* as_float() const { return std::get_if<double>(&data); }
    const std::string* as_string() const { return std::get_if<std::string>(&data); }
    const ValueList* as_list() const { return std::get_if<ValueList>(&data); }

    /// True when the value (recursively) holds no unknowns or symbols.
    bool is_concrete() const;
    std::string str() const;

    bool operator==(const Value&) const = default;
};

// ------------------------------------------------------------------- AST --

enum class ExprKind {
    IntLit,
    FloatLit,
    BoolLit,
    StrLit,
    NoneLit,
    ListLit,
    PropRef,   // props.<name>
    Name,      // local variable, shape symbol, repeat_index
    InputDim,  // in[i][j]
    Neg,
    Not,
    Binary,    // + - * // / %
    Compare,   // == != < <= > >=
    And,
    Or,
    Ternary,   // children: then, cond, else
    Call,      // has_input(k), min(...), max(...), len(x)
    Index,     // children: base, index
};

struct ExprNode {
    ExprKind kind;
    std::string text;  // operator, name, or string literal contents
    std::int64_t int_value = 0;
    double float_value = 0.0;
    bool bool_value = false;
    int input = 0, axis = 0;  // InputDim
    std::vector<std::shared_ptr<const ExprNode>> children;
};

using ExprPtr = std::shared_ptr<const ExprNode>;

/// Parsed expression plus its original source text. Equality is textual so
/// that structural project comparison reflects what is on disk.
class Expr {
public:
    Expr() = default;
    /// Throws protoml::Error(Parse) with a column position on malformed input.
    static Expr parse(std::string_view source);

    const std::string& source() const { return source_; }
    const ExprNode& root() const { return *root_; }
    bool empty() const { return !root_; }

    bool operator==(const Expr& o) const { return source_ == o.source_; }

private:
    std::string source_;
    ExprPtr root_;
};

/// Names referenced by an expression, for load-time closure checks.
struct ExprRefs {
    std::set<std::string> props;
    std::set<std::string> names;
    std::set<std::string> calls;
    bool uses_input_dims = false;
    bool uses_repeat_index = false;
    bool uses_float_or_bool_ops = false;  // anything beyond + - * // on ints
    bool uses_non_int_literals = false;
};
ExprRefs collect_refs(const ExprNode& node);

// ------------------------------------------------------------ evaluation --

struct EvalEnv {
    std::function<std::optional<Value>(const std::string&)> prop;
    std::function<std::optional<Value>(const std::string&)> name;
    std::function<std::optional<SymInt>(int input, int axis)> input_dim;  // nullopt = unknown
    std::function<Value(int input)> has_input;
};

/// Evaluates with unknown propagation. Throws protoml::Error(Schema) on type
/// errors, unresolved names and division by zero.
Value evaluate(const ExprNode& node, const EvalEnv& env);

// ------------------------------------------------------- static typing --

enum class StaticType { Any, Int, Float, Bool, String, IntList, List, None };
std::string_view static_type_name(StaticType t);

struct TypeEnv {
    std::function<std::optional<StaticType>(const std::string&)> prop;
    std::function<std::optional<StaticType>(const std::string&)> name;
};
StaticType infer_type(const ExprNode& node, const TypeEnv& env);

// ------------------------------------------------------- python output --

struct PyContext {
    std::function<std::string(const std::string&)> prop;  // props.x -> text
    std::function<std::string(const std::string&)> name;  // local/symbol -> text
    std::function<std::string(int)> has_input;
};

/// Renders the expression as Python source with minimal parentheses.
std::string to_python(const ExprNode& node, const PyContext& ctx);
/// True when the Python rendering needs no parentheses in any context.
bool is_atomic(const ExprNode& node);

std::string python_string_literal(std::string_view s);
std::string python_float_literal(double d);

bool is_identifier(std::string_view s);
bool is_python_keyword(std::string_view s);

}  // namespace protoml
