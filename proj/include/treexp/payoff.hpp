#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "treexp/measure.hpp"

namespace treexp::dsl {

/**
 * A small expression language for payoffs over path features, so experiments
 * are configurable without recompilation.
 *
 * Variables: B (terminal value), B_at(k), QV (terminal realized quadratic
 * variation), QV_at(k), MAXB (running maximum of the path values),
 * AHAT_at(k) (per-step variance rate, with AHAT_at(0) = 0).
 * Constants: inf, ninf. Operators: + - * / ^ with the usual precedence
 * (^ binds tightest and is right-associative, then unary minus, then * /,
 * then + -); comparisons < <= > >= = == bind loosest and evaluate to 0 or 1.
 * Functions: max(a,b), min(a,b), abs(a), exp(a), neg(a), ind(a).
 *
 * Evaluation is total on every path and lands in the extended reals with the
 * conventions of XReal (division by zero gives +inf, -inf, -inf for positive,
 * negative, zero numerators).
 */

enum class BinOp { add, sub, mul, div, pow };
enum class CmpOp { lt, le, gt, ge, eq };
enum class Feature { terminal_value, terminal_qv, running_max };
enum class FeatureAt { value_at, qv_at, rate_at };
enum class Fn { max, min, abs, exp, ind, neg };

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Lit {
    double value;
};
struct Var {
    Feature feature;
};
struct At {
    FeatureAt feature;
    int index;
};
struct Bin {
    BinOp op;
    ExprPtr lhs, rhs;
};
struct Cmp {
    CmpOp op;
    ExprPtr lhs, rhs;
};
struct Call {
    Fn fn;
    std::vector<ExprPtr> args;
};

struct Expr {
    std::variant<Lit, Var, At, Bin, Cmp, Call> node;
};

enum class ErrorKind { syntax, unknown_identifier, arity };

struct ParseError : Error {
    ErrorKind kind;
    std::size_t offset;                  // byte offset into the source
    std::vector<std::string> expected;   // for syntax errors
    ParseError(ErrorKind kind_, std::size_t offset_, const std::string& what,
               std::vector<std::string> expected_ = {})
        : Error(what + " at offset " + std::to_string(offset_)),
          kind(kind_),
          offset(offset_),
          expected(std::move(expected_)) {}
};

/// Step index out of range for the lattice the expression is bound to.
struct BindError : Error {
    using Error::Error;
};

ExprPtr parse(std::string_view source);

/// Canonical source form; parsing it back yields a structurally identical
/// tree (see equal()).
std::string print(const Expr& e);
inline std::string print(const ExprPtr& e) { return print(*e); }

bool equal(const Expr& a, const Expr& b);
inline bool equal(const ExprPtr& a, const ExprPtr& b) { return equal(*a, *b); }

/// Validates every step index against the horizon (indices live in 0..K).
void bind_check(const Expr& e, int num_steps);

XReal evaluate(const Expr& e, const Lattice& lat, const PathId& path);
inline XReal evaluate(const ExprPtr& e, const Lattice& lat, const PathId& path) {
    return evaluate(*e, lat, path);
}

/// bind_check + pathwise evaluation over the whole lattice.
RandomVariable to_random_variable(const ExprPtr& e, const Lattice& lat);

}  // namespace treexp::dsl
