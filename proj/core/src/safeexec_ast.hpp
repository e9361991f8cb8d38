#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "nsar/safeexec.hpp"

namespace nsar::exec::ast {

enum class BinOpKind { add, sub, mul, div, floordiv, mod };
enum class CmpKind { lt, le, gt, ge, eq, ne };

struct Expr;
using ExprPtr = std::unique_ptr<Expr>;

/// One tagged node type covers the whole whitelisted expression grammar;
/// kinds that cannot be represented here cannot be executed.
struct Expr {
    enum class Kind {
        int_lit,
        real_lit,
        str_lit,
        bool_lit,
        none_lit,
        name,
        list_display,
        dict_display,
        unary_neg,
        unary_not,
        binop,
        compare,
        bool_and,
        bool_or,
        conditional,
        subscript,
        call,
        list_comp,
    };

    Kind kind;
    std::size_t line = 0;
    std::size_t col = 0;

    std::int64_t int_value = 0;
    double real_value = 0.0;
    bool bool_value = false;
    std::string text;  // str_lit payload, name, call target, comp variable

    std::vector<ExprPtr> items;  // list elements / call args / and-or operands
    std::vector<std::pair<ExprPtr, ExprPtr>> pairs;  // dict entries

    BinOpKind bin_op = BinOpKind::add;
    ExprPtr lhs;  // binop lhs / unary operand / conditional value / comp element
    ExprPtr rhs;  // binop rhs / comp iterable

    std::vector<CmpKind> cmp_ops;
    std::vector<ExprPtr> cmp_operands;  // first operand + one per op

    ExprPtr cond;    // conditional test / comp filter (may be null)
    ExprPtr else_e;  // conditional else branch
};

struct Statement {
    std::optional<std::string> target;  // name = expr when set, bare expr otherwise
    ExprPtr expr;
    std::size_t line = 0;
};

}  // namespace nsar::exec::ast

namespace nsar::exec {

struct Program::Impl {
    std::vector<ast::Statement> statements;
};

}  // namespace nsar::exec
