#pragma once

#include "esmck/rational.hpp"

#include <map>
#include <memory>
#include <set>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace esmck::ir {

enum class Sort { Arith, Bool };

enum class CmpOp { Lt, Le, Eq, Ge, Gt };

inline CmpOp flipCmp(CmpOp op) {
    switch (op) {
        case CmpOp::Lt: return CmpOp::Ge;
        case CmpOp::Le: return CmpOp::Gt;
        case CmpOp::Eq: return CmpOp::Eq;  // handled separately by callers
        case CmpOp::Ge: return CmpOp::Lt;
        case CmpOp::Gt: return CmpOp::Le;
    }
    throw Error("bad CmpOp");
}

inline const char* cmpText(CmpOp op) {
    switch (op) {
        case CmpOp::Lt: return "<";
        case CmpOp::Le: return "<=";
        case CmpOp::Eq: return "==";
        case CmpOp::Ge: return ">=";
        case CmpOp::Gt: return ">";
    }
    throw Error("bad CmpOp");
}

enum class VSort { Real, Int };

/// A symbolic unknown: a program input left free, or one havoc instance.
/// Names are unique per exploration (`dt`, `nu!0`, `alpha!2`, ...).
struct Symbol {
    enum class Origin { Input, Havoc };
    std::string name;
    Origin origin = Origin::Havoc;
    VSort sort = VSort::Real;

    bool operator==(const Symbol& o) const {
        return name == o.name && origin == o.origin && sort == o.sort;
    }
};

struct ExprNode;
using Expr = std::shared_ptr<const ExprNode>;

enum class ExprKind {
    Const, Var, Sym,
    Neg, Add, Sub, Mul, Div, Pow,
    Cmp, And, Or, Not,
};

/// Immutable expression node. Shared subterms form a DAG; all traversals
/// below memoize on node identity so shared structure stays linear.
struct ExprNode {
    ExprKind kind;
    Rational value;      // Const
    std::string var;     // Var
    Symbol sym;          // Sym
    CmpOp op = CmpOp::Lt;
    unsigned exponent = 0;  // Pow
    Expr a, b;

    Sort sort() const {
        switch (kind) {
            case ExprKind::Cmp:
            case ExprKind::And:
            case ExprKind::Or:
            case ExprKind::Not:
                return Sort::Bool;
            default:
                return Sort::Arith;
        }
    }
};

inline bool isConst(const Expr& e) { return e->kind == ExprKind::Const; }
inline bool isBoolConst(const Expr& e, bool v);

inline Expr constant(Rational v) {
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprKind::Const;
    n->value = std::move(v);
    return n;
}

inline Expr variable(std::string name) {
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprKind::Var;
    n->var = std::move(name);
    return n;
}

inline Expr symbol(Symbol s) {
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprKind::Sym;
    n->sym = std::move(s);
    return n;
}

/// Boolean constants are encoded as rational 1/0 under Cmp-free kinds would
/// complicate sorts; instead we keep dedicated constants.
inline Expr boolConst(bool v) {
    // Encoded as 0 == 0 (true) / 0 == 1 (false): keeps the node set small
    // while staying in the Bool sort.
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprKind::Cmp;
    n->op = CmpOp::Eq;
    n->a = constant(0);
    n->b = constant(v ? 0 : 1);
    return n;
}

inline std::optional<bool> asBoolConst(const Expr& e) {
    if (e->kind == ExprKind::Cmp && isConst(e->a) && isConst(e->b)) {
        const Rational& x = e->a->value;
        const Rational& y = e->b->value;
        switch (e->op) {
            case CmpOp::Lt: return x < y;
            case CmpOp::Le: return x <= y;
            case CmpOp::Eq: return x == y;
            case CmpOp::Ge: return x >= y;
            case CmpOp::Gt: return x > y;
        }
    }
    return std::nullopt;
}

inline bool isBoolConst(const Expr& e, bool v) {
    auto c = asBoolConst(e);
    return c.has_value() && *c == v;
}

/// Structural equality with shared-node short circuit.
inline bool structEq(const Expr& x, const Expr& y) {
    if (x.get() == y.get()) return true;
    if (x->kind != y->kind) return false;
    switch (x->kind) {
        case ExprKind::Const: return x->value == y->value;
        case ExprKind::Var: return x->var == y->var;
        case ExprKind::Sym: return x->sym == y->sym;
        case ExprKind::Neg:
        case ExprKind::Not:
            return structEq(x->a, y->a);
        case ExprKind::Pow:
            return x->exponent == y->exponent && structEq(x->a, y->a);
        case ExprKind::Cmp:
            return x->op == y->op && structEq(x->a, y->a) && structEq(x->b, y->b);
        default:
            return structEq(x->a, y->a) && structEq(x->b, y->b);
    }
}

// ---- folding constructors -------------------------------------------------
//
// These are the one canonical simplifier: the parser, the Evolve lowering,
// symbolic substitution, and simplify() all build through them. Rules are
// value-preserving under the reals abstraction where divisor subterms are
// assumed nonzero (x*0 -> 0, x/x -> 1, 0/x -> 0).

inline Expr mkNeg(Expr a) {
    if (isConst(a)) return constant(-a->value);
    if (a->kind == ExprKind::Neg) return a->a;
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprKind::Neg;
    n->a = std::move(a);
    return n;
}

inline Expr binaryNode(ExprKind k, Expr a, Expr b) {
    auto n = std::make_shared<ExprNode>();
    n->kind = k;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

inline Expr mkAdd(Expr a, Expr b) {
    if (isConst(a) && isConst(b)) return constant(a->value + b->value);
    if (isConst(a) && a->value.isZero()) return b;
    if (isConst(b) && b->value.isZero()) return a;
    return binaryNode(ExprKind::Add, std::move(a), std::move(b));
}

inline Expr mkSub(Expr a, Expr b) {
    if (isConst(a) && isConst(b)) return constant(a->value - b->value);
    if (isConst(b) && b->value.isZero()) return a;
    if (isConst(a) && a->value.isZero()) return mkNeg(std::move(b));
    if (structEq(a, b)) return constant(0);
    return binaryNode(ExprKind::Sub, std::move(a), std::move(b));
}

inline Expr mkMul(Expr a, Expr b) {
    if (isConst(a) && isConst(b)) return constant(a->value * b->value);
    if ((isConst(a) && a->value.isZero()) || (isConst(b) && b->value.isZero()))
        return constant(0);
    if (isConst(a) && a->value == Rational(1)) return b;
    if (isConst(b) && b->value == Rational(1)) return a;
    return binaryNode(ExprKind::Mul, std::move(a), std::move(b));
}

inline Expr mkDiv(Expr a, Expr b) {
    // Division by a literal zero is left in place; it surfaces as an
    // evaluation error, never as a folded value.
    if (isConst(b) && !b->value.isZero()) {
        if (isConst(a)) return constant(a->value / b->value);
        if (b->value == Rational(1)) return a;
    }
    if (isConst(a) && a->value.isZero() && !(isConst(b) && b->value.isZero()))
        return constant(0);
    if (!(isConst(b) && b->value.isZero()) && structEq(a, b)) return constant(1);
    return binaryNode(ExprKind::Div, std::move(a), std::move(b));
}

inline Expr mkPow(Expr base, unsigned k) {
    if (k == 0) return constant(1);
    if (k == 1) return base;
    if (isConst(base)) return constant(base->value.pow(k));
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprKind::Pow;
    n->a = std::move(base);
    n->exponent = k;
    return n;
}

inline Expr mkCmp(CmpOp op, Expr a, Expr b) {
    if (isConst(a) && isConst(b)) {
        const Rational& x = a->value;
        const Rational& y = b->value;
        bool v = false;
        switch (op) {
            case CmpOp::Lt: v = x < y; break;
            case CmpOp::Le: v = x <= y; break;
            case CmpOp::Eq: v = x == y; break;
            case CmpOp::Ge: v = x >= y; break;
            case CmpOp::Gt: v = x > y; break;
        }
        return boolConst(v);
    }
    if (structEq(a, b)) {
        switch (op) {
            case CmpOp::Lt:
            case CmpOp::Gt: return boolConst(false);
            default: return boolConst(true);
        }
    }
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprKind::Cmp;
    n->op = op;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

inline Expr mkAnd(Expr a, Expr b) {
    if (isBoolConst(a, true)) return b;
    if (isBoolConst(b, true)) return a;
    if (isBoolConst(a, false) || isBoolConst(b, false)) return boolConst(false);
    return binaryNode(ExprKind::And, std::move(a), std::move(b));
}

inline Expr mkOr(Expr a, Expr b) {
    if (isBoolConst(a, false)) return b;
    if (isBoolConst(b, false)) return a;
    if (isBoolConst(a, true) || isBoolConst(b, true)) return boolConst(true);
    return binaryNode(ExprKind::Or, std::move(a), std::move(b));
}

inline Expr mkNot(Expr a) {
    if (auto c = asBoolConst(a)) return boolConst(!*c);
    if (a->kind == ExprKind::Not) return a->a;
    if (a->kind == ExprKind::Cmp && a->op != CmpOp::Eq)
        return mkCmp(flipCmp(a->op), a->a, a->b);
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprKind::Not;
    n->a = std::move(a);
    return n;
}

// ---- printing ---------------------------------------------------------------

namespace detail {

inline int precedence(const ExprNode& e) {
    switch (e.kind) {
        case ExprKind::Or: return 1;
        case ExprKind::And: return 2;
        case ExprKind::Not: return 3;
        case ExprKind::Cmp: return 4;
        case ExprKind::Add:
        case ExprKind::Sub: return 5;
        case ExprKind::Mul:
        case ExprKind::Div: return 6;
        case ExprKind::Neg: return 7;
        default: return 8;  // atoms, Pow
    }
}

inline void printExpr(const Expr& e, std::string& out, int parentPrec, bool rightOperand) {
    int prec = precedence(*e);
    // A negative constant prints through the Neg level so it reparses
    // to the same folded node.
    if (e->kind == ExprKind::Const && e->value.sign() < 0) prec = 7;
    bool parens = prec < parentPrec || (prec == parentPrec && rightOperand);
    if (parens) out += "(";
    switch (e->kind) {
        case ExprKind::Const: {
            const Rational& v = e->value;
            if (v.sign() < 0) {
                out += "-";
                Rational p = -v;
                if (p.isInteger()) {
                    out += p.num().str();
                } else {
                    out += p.num().str();
                    out += "/";
                    out += p.den().str();
                }
            } else if (v.isInteger()) {
                out += v.num().str();
            } else {
                out += v.num().str();
                out += "/";
                out += v.den().str();
            }
            break;
        }
        case ExprKind::Var: out += e->var; break;
        case ExprKind::Sym: out += e->sym.name; break;
        case ExprKind::Neg:
            out += "-";
            printExpr(e->a, out, 7, true);
            break;
        case ExprKind::Not:
            // '!' applies to a primary: anything below atom precedence needs
            // parentheses to reparse into the same shape.
            out += "!";
            printExpr(e->a, out, 8, false);
            break;
        case ExprKind::Pow:
            out += "pow(";
            printExpr(e->a, out, 0, false);
            out += ", " + std::to_string(e->exponent) + ")";
            break;
        case ExprKind::Cmp:
            printExpr(e->a, out, 4, false);
            out += " ";
            out += cmpText(e->op);
            out += " ";
            printExpr(e->b, out, 4, true);
            break;
        case ExprKind::Add:
            printExpr(e->a, out, 5, false);
            out += " + ";
            printExpr(e->b, out, 5, true);
            break;
        case ExprKind::Sub:
            printExpr(e->a, out, 5, false);
            out += " - ";
            printExpr(e->b, out, 5, true);
            break;
        case ExprKind::Mul:
            printExpr(e->a, out, 6, false);
            out += " * ";
            printExpr(e->b, out, 6, true);
            break;
        case ExprKind::Div:
            printExpr(e->a, out, 6, false);
            out += " / ";
            printExpr(e->b, out, 6, true);
            break;
        case ExprKind::And:
            printExpr(e->a, out, 2, false);
            out += " && ";
            printExpr(e->b, out, 2, true);
            break;
        case ExprKind::Or:
            printExpr(e->a, out, 1, false);
            out += " || ";
            printExpr(e->b, out, 1, true);
            break;
    }
    if (parens) out += ")";
}

}  // namespace detail

inline std::string toString(const Expr& e) {
    std::string out;
    detail::printExpr(e, out, 0, false);
    return out;
}

// ---- substitution / simplification ------------------------------------------

/// Rebuilds through the folding constructors; `vars` / `syms` may be null.
/// Memoized on node identity so DAGs stay DAGs.
inline Expr rewrite(const Expr& e,
                    const std::map<std::string, Expr>* vars,
                    const std::map<std::string, Expr>* syms,
                    std::unordered_map<const ExprNode*, Expr>& memo) {
    if (auto it = memo.find(e.get()); it != memo.end()) return it->second;
    Expr r;
    switch (e->kind) {
        case ExprKind::Const: r = e; break;
        case ExprKind::Var:
            if (vars) {
                auto it = vars->find(e->var);
                r = it != vars->end() ? it->second : e;
            } else {
                r = e;
            }
            break;
        case ExprKind::Sym:
            if (syms) {
                auto it = syms->find(e->sym.name);
                r = it != syms->end() ? it->second : e;
            } else {
                r = e;
            }
            break;
        case ExprKind::Neg: r = mkNeg(rewrite(e->a, vars, syms, memo)); break;
        case ExprKind::Not: r = mkNot(rewrite(e->a, vars, syms, memo)); break;
        case ExprKind::Pow: r = mkPow(rewrite(e->a, vars, syms, memo), e->exponent); break;
        case ExprKind::Cmp:
            r = mkCmp(e->op, rewrite(e->a, vars, syms, memo), rewrite(e->b, vars, syms, memo));
            break;
        case ExprKind::Add:
            r = mkAdd(rewrite(e->a, vars, syms, memo), rewrite(e->b, vars, syms, memo));
            break;
        case ExprKind::Sub:
            r = mkSub(rewrite(e->a, vars, syms, memo), rewrite(e->b, vars, syms, memo));
            break;
        case ExprKind::Mul:
            r = mkMul(rewrite(e->a, vars, syms, memo), rewrite(e->b, vars, syms, memo));
            break;
        case ExprKind::Div:
            r = mkDiv(rewrite(e->a, vars, syms, memo), rewrite(e->b, vars, syms, memo));
            break;
        case ExprKind::And:
            r = mkAnd(rewrite(e->a, vars, syms, memo), rewrite(e->b, vars, syms, memo));
            break;
        case ExprKind::Or:
            r = mkOr(rewrite(e->a, vars, syms, memo), rewrite(e->b, vars, syms, memo));
            break;
    }
    memo.emplace(e.get(), r);
    return r;
}

inline Expr substituteVars(const Expr& e, const std::map<std::string, Expr>& env) {
    std::unordered_map<const ExprNode*, Expr> memo;
    return rewrite(e, &env, nullptr, memo);
}

inline Expr substituteSyms(const Expr& e, const std::map<std::string, Expr>& env) {
    std::unordered_map<const ExprNode*, Expr> memo;
    return rewrite(e, nullptr, &env, memo);
}

/// Semantics-preserving cleanup: constant folding plus the x+0 / x*1 / x*0 /
/// pow(x,1) / x/x rewrites baked into the constructors.
inline Expr simplify(const Expr& e) {
    std::unordered_map<const ExprNode*, Expr> memo;
    return rewrite(e, nullptr, nullptr, memo);
}

// ---- exact evaluation --------------------------------------------------------

struct EvalError : Error {
    explicit EvalError(const std::string& msg) : Error(msg) {}
};

/// Arithmetic-or-boolean result of exact evaluation.
struct Value {
    Sort sort;
    Rational rat;
    bool boolean = false;

    static Value ofRat(Rational r) { return Value{Sort::Arith, std::move(r), false}; }
    static Value ofBool(bool b) { return Value{Sort::Bool, Rational(0), b}; }

    const Rational& asRat(const char* ctx) const {
        if (sort != Sort::Arith) throw EvalError(std::string("expected arithmetic value in ") + ctx);
        return rat;
    }
    bool asBool(const char* ctx) const {
        if (sort != Sort::Bool) throw EvalError(std::string("expected boolean value in ") + ctx);
        return boolean;
    }
};

namespace detail {

struct EvalContext {
    const std::map<std::string, Rational>* vars;
    const std::map<std::string, Rational>* syms;
    std::unordered_map<const ExprNode*, Value> memo;
};

inline Value evalRec(const Expr& e, EvalContext& ctx) {
    if (auto it = ctx.memo.find(e.get()); it != ctx.memo.end()) return it->second;
    Value v = Value::ofRat(Rational(0));
    switch (e->kind) {
        case ExprKind::Const: v = Value::ofRat(e->value); break;
        case ExprKind::Var: {
            if (!ctx.vars) throw EvalError("unbound variable " + e->var);
            auto it = ctx.vars->find(e->var);
            if (it == ctx.vars->end()) throw EvalError("unbound variable " + e->var);
            v = Value::ofRat(it->second);
            break;
        }
        case ExprKind::Sym: {
            if (!ctx.syms) throw EvalError("unbound symbol " + e->sym.name);
            auto it = ctx.syms->find(e->sym.name);
            if (it == ctx.syms->end()) throw EvalError("unbound symbol " + e->sym.name);
            v = Value::ofRat(it->second);
            break;
        }
        case ExprKind::Neg: v = Value::ofRat(-evalRec(e->a, ctx).asRat("-")); break;
        case ExprKind::Add:
            v = Value::ofRat(evalRec(e->a, ctx).asRat("+") + evalRec(e->b, ctx).asRat("+"));
            break;
        case ExprKind::Sub:
            v = Value::ofRat(evalRec(e->a, ctx).asRat("-") - evalRec(e->b, ctx).asRat("-"));
            break;
        case ExprKind::Mul:
            v = Value::ofRat(evalRec(e->a, ctx).asRat("*") * evalRec(e->b, ctx).asRat("*"));
            break;
        case ExprKind::Div: {
            Rational denom = evalRec(e->b, ctx).asRat("/");
            if (denom.isZero())
                throw EvalError("division by zero in subexpression " + toString(e));
            v = Value::ofRat(evalRec(e->a, ctx).asRat("/") / denom);
            break;
        }
        case ExprKind::Pow:
            v = Value::ofRat(evalRec(e->a, ctx).asRat("pow").pow(e->exponent));
            break;
        case ExprKind::Cmp: {
            const Rational x = evalRec(e->a, ctx).asRat("cmp");
            const Rational y = evalRec(e->b, ctx).asRat("cmp");
            bool r = false;
            switch (e->op) {
                case CmpOp::Lt: r = x < y; break;
                case CmpOp::Le: r = x <= y; break;
                case CmpOp::Eq: r = x == y; break;
                case CmpOp::Ge: r = x >= y; break;
                case CmpOp::Gt: r = x > y; break;
            }
            v = Value::ofBool(r);
            break;
        }
        case ExprKind::And:
            v = Value::ofBool(evalRec(e->a, ctx).asBool("&&") && evalRec(e->b, ctx).asBool("&&"));
            break;
        case ExprKind::Or:
            v = Value::ofBool(evalRec(e->a, ctx).asBool("||") || evalRec(e->b, ctx).asBool("||"));
            break;
        case ExprKind::Not:
            v = Value::ofBool(!evalRec(e->a, ctx).asBool("!"));
            break;
    }
    ctx.memo.emplace(e.get(), v);
    return v;
}

}  // namespace detail

/// Exact concrete evaluation over program variables.
inline Value evalExpr(const Expr& e, const std::map<std::string, Rational>& env) {
    detail::EvalContext ctx{&env, nullptr, {}};
    return detail::evalRec(e, ctx);
}

/// Exact concrete evaluation over symbols (witness checking).
inline Value evalSym(const Expr& e, const std::map<std::string, Rational>& env) {
    detail::EvalContext ctx{nullptr, &env, {}};
    return detail::evalRec(e, ctx);
}

/// Program variables referenced by an expression.
inline void collectVars(const Expr& e, std::set<std::string>& out) {
    if (!e) return;
    if (e->kind == ExprKind::Var) out.insert(e->var);
    if (e->a) collectVars(e->a, out);
    if (e->b) collectVars(e->b, out);
}

/// Splits a conjunction tree into its top-level conjuncts.
inline void splitConjuncts(const Expr& e, std::vector<Expr>& out) {
    if (e->kind == ExprKind::And) {
        splitConjuncts(e->a, out);
        splitConjuncts(e->b, out);
    } else {
        out.push_back(e);
    }
}

/// First-occurrence-ordered list of symbols appearing in e.
inline void collectSymbols(const Expr& e, std::vector<Symbol>& out,
                           std::unordered_map<const ExprNode*, bool>& seen) {
    if (seen.count(e.get())) return;
    seen.emplace(e.get(), true);
    if (e->kind == ExprKind::Sym) {
        for (const auto& s : out)
            if (s.name == e->sym.name) return;
        out.push_back(e->sym);
        return;
    }
    if (e->a) collectSymbols(e->a, out, seen);
    if (e->b) collectSymbols(e->b, out, seen);
}

}  // namespace esmck::ir
