#pragma once

#include "esmck/symexec.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include <unistd.h>

namespace esmck::solve {

struct ReplayError : Error {
    explicit ReplayError(const std::string& msg) : Error(msg) {}
};

/// A concrete rational assignment to every symbol of an obligation, plus the
/// replay bookkeeping: havoc order along the path and the choose(...)
/// resolutions. A Witness is only ever reported after exact replay confirms
/// it violates the labeled assert.
struct Witness {
    std::map<std::string, Rational> assignment;
    std::vector<std::string> havocOrder;
    std::vector<long long> choices;
    std::string obligationLabel;
    std::map<std::string, long long> sourceBounds;
    std::optional<int> targetAssertOrdinal;
};

struct AssertOutcome {
    std::string label;
    bool holds = false;
    int ordinal = 0;
};

struct TraceEvent {
    std::string var;
    Rational value;
};

/// Record of one deterministic exact-rational execution.
struct Trace {
    std::vector<TraceEvent> events;
    std::vector<AssertOutcome> asserts;
    std::vector<std::map<std::string, Rational>> printSnapshots;
    std::map<std::string, Rational> finalStore;
};

enum class VerdictKind { Violated, HoldsProved, Unknown };

struct Verdict {
    VerdictKind kind = VerdictKind::Unknown;
    std::optional<Witness> witness;
    std::string backend;
    long long budgetSpent = 0;
    std::string diagnostic;
};

// ---- concrete replay ------------------------------------------------------------

/// Replays a witness on a lowered program with exact rational arithmetic.
/// Every assume must hold (a violated assume means the witness is bogus and
/// signals a falsifier or model-parsing bug, never user error). Execution
/// stops after the witness's target assert when one is set, otherwise runs
/// the program to the end recording every assert outcome.
inline Trace replay(const ir::Program& p, const Witness& w, const symexec::Bounds& b) {
    if (ir::containsEvolve(p))
        throw ReplayError("program contains an Evolve block; run lowerEvolve first");

    Trace trace;
    std::map<std::string, Rational> store;
    std::size_t havocIdx = 0;
    std::size_t choiceIdx = 0;
    int assertOrdinal = 0;

    auto havocValue = [&](const std::string& var) -> Rational {
        if (havocIdx >= w.havocOrder.size())
            throw ReplayError("witness incomplete: no havoc entry for " + var);
        const std::string& name = w.havocOrder[havocIdx++];
        auto it = w.assignment.find(name);
        if (it == w.assignment.end())
            throw ReplayError("witness incomplete: no value for symbol " + name);
        return it->second;
    };

    for (const auto& in : p.inputs) {
        if (in.sort == ir::VSort::Int) {
            auto it = b.intInputs.find(in.name);
            if (it == b.intInputs.end())
                throw ReplayError("no bound given for integer input " + in.name);
            store.emplace(in.name, Rational(it->second));
        } else {
            auto it = w.assignment.find(in.name);
            if (it == w.assignment.end())
                throw ReplayError("witness incomplete: no value for input " + in.name);
            store.emplace(in.name, it->second);
        }
    }
    for (const auto& in : p.inputs)
        for (const auto& a : in.assumes)
            if (!ir::evalExpr(a, store).asBool("assume"))
                throw ReplayError("assumption violated by witness: " + ir::toString(a));

    auto eval = [&](const ir::Expr& e) -> ir::Value {
        // Havoc-on-first-use, mirroring the symbolic engine.
        std::set<std::string> used;
        ir::collectVars(e, used);
        for (const auto& v : used) {
            if (store.count(v)) continue;
            if (!p.isGlobal(v)) throw ReplayError("read of unknown variable " + v);
            Rational val = havocValue(v);
            store.emplace(v, val);
            trace.events.push_back(TraceEvent{v, val});
        }
        return ir::evalExpr(e, store);
    };

    struct Frame {
        enum class Kind { Block, Loop };
        Kind kind;
        const ir::Block* block = nullptr;
        std::size_t pc = 0;
        std::string loopVar;
        long long count = 0;
        long long iter = 0;
    };
    std::vector<Frame> frames;
    frames.push_back(Frame{Frame::Kind::Block, &p.mainBlock, 0, "", 0, 0});

    long long steps = b.stmtBudget;
    bool reachedTarget = false;

    while (!frames.empty() && !reachedTarget) {
        Frame& top = frames.back();
        if (top.kind == Frame::Kind::Loop) {
            if (top.iter >= top.count) {
                store.erase(top.loopVar);
                frames.pop_back();
                continue;
            }
            store[top.loopVar] = Rational(top.iter);
            top.iter++;
            frames.push_back(Frame{Frame::Kind::Block, top.block, 0, "", 0, 0});
            continue;
        }
        if (top.pc >= top.block->size()) {
            frames.pop_back();
            continue;
        }
        const ir::Stmt stmt = (*top.block)[top.pc++];
        if (--steps < 0) throw ReplayError("replay exceeded the statement budget");

        switch (stmt->kind) {
            case ir::StmtKind::Assign: {
                Rational v = eval(stmt->expr).asRat("assignment");
                store[stmt->var] = v;
                trace.events.push_back(TraceEvent{stmt->var, v});
                break;
            }
            case ir::StmtKind::Havoc: {
                Rational v = havocValue(stmt->var);
                store[stmt->var] = v;
                trace.events.push_back(TraceEvent{stmt->var, v});
                break;
            }
            case ir::StmtKind::Assume:
                if (!eval(stmt->expr).asBool("assume"))
                    throw ReplayError("assumption violated by witness: " + ir::toString(stmt->expr));
                break;
            case ir::StmtKind::Assert: {
                bool holds = eval(stmt->expr).asBool("assert");
                std::string label = stmt->label.empty() ? ir::toString(stmt->expr) : stmt->label;
                trace.asserts.push_back(AssertOutcome{label, holds, assertOrdinal});
                if (w.targetAssertOrdinal && *w.targetAssertOrdinal == assertOrdinal)
                    reachedTarget = true;
                assertOrdinal++;
                break;
            }
            case ir::StmtKind::If:
                frames.push_back(Frame{Frame::Kind::Block,
                                       eval(stmt->expr).asBool("if") ? &stmt->body : &stmt->elseBody,
                                       0, "", 0, 0});
                break;
            case ir::StmtKind::ChooseInt: {
                Rational bound = eval(stmt->expr).asRat("choose bound");
                if (!bound.isInteger() || bound.sign() < 0)
                    throw ReplayError("choose bound is not a nonnegative integer: " + bound.str());
                if (choiceIdx >= w.choices.size())
                    throw ReplayError("witness incomplete: missing choice for " + stmt->var);
                long long c = w.choices[choiceIdx++];
                if (c < 0 || Rational(c) >= bound)
                    throw ReplayError("witness choice " + std::to_string(c) +
                                      " out of range [0, " + bound.str() + ") for " + stmt->var);
                store[stmt->var] = Rational(c);
                trace.events.push_back(TraceEvent{stmt->var, Rational(c)});
                break;
            }
            case ir::StmtKind::For: {
                Rational count = eval(stmt->expr).asRat("loop count");
                if (!count.isInteger() || count.sign() < 0)
                    throw ReplayError("loop count is not a nonnegative integer: " + count.str());
                frames.push_back(Frame{Frame::Kind::Loop, &stmt->body, 0, stmt->var,
                                       count.num().convert_to<long long>(), 0});
                break;
            }
            case ir::StmtKind::Evolve:
                throw ReplayError("program contains an Evolve block; run lowerEvolve first");
            case ir::StmtKind::Call: {
                const ir::Block* body = p.findFunction(stmt->var);
                if (!body) throw ReplayError("call to unknown function " + stmt->var);
                frames.push_back(Frame{Frame::Kind::Block, body, 0, "", 0, 0});
                break;
            }
            case ir::StmtKind::Print:
                trace.printSnapshots.push_back(store);
                break;
        }
    }

    if (w.targetAssertOrdinal && !reachedTarget)
        throw ReplayError("target assert was never reached during replay");
    trace.finalStore = store;
    return trace;
}

// ---- SMT-LIB2 emission -----------------------------------------------------------

namespace detail {

inline void smtRational(const Rational& r, std::string& out) {
    if (r.sign() < 0) {
        out += "(- ";
        smtRational(-r, out);
        out += ")";
        return;
    }
    if (r.isInteger()) {
        out += r.num().str();
    } else {
        out += "(/ " + r.num().str() + " " + r.den().str() + ")";
    }
}

inline void smtExpr(const ir::Expr& e, std::string& out) {
    using ir::ExprKind;
    switch (e->kind) {
        case ExprKind::Const: smtRational(e->value, out); return;
        case ExprKind::Sym: out += e->sym.name; return;
        case ExprKind::Var:
            throw Error("unexpected program variable in obligation: " + e->var);
        case ExprKind::Neg:
            out += "(- ";
            smtExpr(e->a, out);
            out += ")";
            return;
        case ExprKind::Pow: {
            // Power is expanded to repeated multiplication.
            if (e->exponent == 0) { out += "1"; return; }
            if (e->exponent == 1) { smtExpr(e->a, out); return; }
            out += "(*";
            for (unsigned i = 0; i < e->exponent; ++i) {
                out += " ";
                smtExpr(e->a, out);
            }
            out += ")";
            return;
        }
        case ExprKind::Not:
            out += "(not ";
            smtExpr(e->a, out);
            out += ")";
            return;
        default: break;
    }
    const char* op = nullptr;
    switch (e->kind) {
        case ExprKind::Add: op = "+"; break;
        case ExprKind::Sub: op = "-"; break;
        case ExprKind::Mul: op = "*"; break;
        case ExprKind::Div: op = "/"; break;
        case ExprKind::And: op = "and"; break;
        case ExprKind::Or: op = "or"; break;
        case ExprKind::Cmp:
            switch (e->op) {
                case ir::CmpOp::Lt: op = "<"; break;
                case ir::CmpOp::Le: op = "<="; break;
                case ir::CmpOp::Eq: op = "="; break;
                case ir::CmpOp::Ge: op = ">="; break;
                case ir::CmpOp::Gt: op = ">"; break;
            }
            break;
        default: throw Error("unhandled expression kind in SMT emission");
    }
    out += "(";
    out += op;
    out += " ";
    smtExpr(e->a, out);
    out += " ";
    smtExpr(e->b, out);
    out += ")";
}

}  // namespace detail

/// Emits a complete SMT-LIB2 script for one obligation: QF_NRA (QF_NIRA when
/// integer symbols are present), one declaration per symbol in creation
/// order, one assert per path conjunct, one for the negated assertion, then
/// (check-sat)(get-model).
inline std::string emitSmt(const symexec::AssertObligation& o) {
    bool hasInt = false;
    for (const auto& s : o.symbols)
        if (s.sort == ir::VSort::Int) hasInt = true;
    std::string out;
    out += "(set-logic ";
    out += hasInt ? "QF_NIRA" : "QF_NRA";
    out += ")\n";
    for (const auto& s : o.symbols) {
        out += "(declare-const " + s.name;
        out += s.sort == ir::VSort::Int ? " Int)\n" : " Real)\n";
    }
    for (const auto& c : o.pathCondition) {
        out += "(assert ";
        detail::smtExpr(c, out);
        out += ")\n";
    }
    out += "(assert ";
    detail::smtExpr(o.negatedAssertion, out);
    out += ")\n";
    out += "(check-sat)\n(get-model)\n";
    return out;
}

// ---- numeric falsification --------------------------------------------------------

struct FalsifyOptions {
    long long budget = 100000;
    std::uint64_t seed = 0;
    std::uint64_t maxDenominator = 1000000;
};

namespace detail {

/// Flat evaluation tape compiled from an obligation so each sample costs one
/// linear pass instead of a tree walk. Boolean slots hold 1/0 in `val` and a
/// violation margin in `res` (0 = satisfied).
struct Tape {
    enum class Op : std::uint8_t {
        Const, Load, Neg, Add, Sub, Mul, Div, Pow,
        Lt, Le, Eq, Ge, Gt, And, Or, Not,
    };
    struct Ins {
        Op op;
        int a = -1;
        int b = -1;
        unsigned k = 0;
        double c = 0;
    };
    std::vector<Ins> code;
    std::vector<int> conjuncts;  // slots that must all be satisfied
    std::vector<std::string> symNames;
    std::map<std::string, int> symIndex;
};

struct TapeBuilder {
    Tape tape;
    std::unordered_map<const ir::ExprNode*, int> memo;

    int compile(const ir::Expr& e) {
        if (auto it = memo.find(e.get()); it != memo.end()) return it->second;
        using ir::ExprKind;
        Tape::Ins ins;
        switch (e->kind) {
            case ExprKind::Const:
                ins.op = Tape::Op::Const;
                ins.c = e->value.toDouble();
                break;
            case ExprKind::Sym: {
                ins.op = Tape::Op::Load;
                auto it = tape.symIndex.find(e->sym.name);
                if (it == tape.symIndex.end()) {
                    int idx = static_cast<int>(tape.symNames.size());
                    tape.symNames.push_back(e->sym.name);
                    it = tape.symIndex.emplace(e->sym.name, idx).first;
                }
                ins.a = it->second;
                break;
            }
            case ExprKind::Var:
                throw Error("unexpected program variable in obligation: " + e->var);
            case ExprKind::Neg: ins.op = Tape::Op::Neg; ins.a = compile(e->a); break;
            case ExprKind::Not: ins.op = Tape::Op::Not; ins.a = compile(e->a); break;
            case ExprKind::Pow:
                ins.op = Tape::Op::Pow;
                ins.a = compile(e->a);
                ins.k = e->exponent;
                break;
            case ExprKind::Add: ins.op = Tape::Op::Add; ins.a = compile(e->a); ins.b = compile(e->b); break;
            case ExprKind::Sub: ins.op = Tape::Op::Sub; ins.a = compile(e->a); ins.b = compile(e->b); break;
            case ExprKind::Mul: ins.op = Tape::Op::Mul; ins.a = compile(e->a); ins.b = compile(e->b); break;
            case ExprKind::Div: ins.op = Tape::Op::Div; ins.a = compile(e->a); ins.b = compile(e->b); break;
            case ExprKind::And: ins.op = Tape::Op::And; ins.a = compile(e->a); ins.b = compile(e->b); break;
            case ExprKind::Or: ins.op = Tape::Op::Or; ins.a = compile(e->a); ins.b = compile(e->b); break;
            case ExprKind::Cmp:
                switch (e->op) {
                    case ir::CmpOp::Lt: ins.op = Tape::Op::Lt; break;
                    case ir::CmpOp::Le: ins.op = Tape::Op::Le; break;
                    case ir::CmpOp::Eq: ins.op = Tape::Op::Eq; break;
                    case ir::CmpOp::Ge: ins.op = Tape::Op::Ge; break;
                    case ir::CmpOp::Gt: ins.op = Tape::Op::Gt; break;
                }
                ins.a = compile(e->a);
                ins.b = compile(e->b);
                break;
        }
        int slot = static_cast<int>(tape.code.size());
        tape.code.push_back(ins);
        memo.emplace(e.get(), slot);
        return slot;
    }
};

inline Tape compileObligation(const symexec::AssertObligation& o) {
    TapeBuilder builder;
    for (const auto& c : o.pathCondition)
        builder.tape.conjuncts.push_back(builder.compile(c));
    builder.tape.conjuncts.push_back(builder.compile(o.negatedAssertion));
    return std::move(builder.tape);
}

/// One pass over the tape; returns the total residual (0 iff every conjunct
/// is satisfied).
inline double runTape(const Tape& t, const std::vector<double>& syms,
                      std::vector<double>& val, std::vector<double>& res) {
    constexpr double kStrictEps = 1e-12;
    val.resize(t.code.size());
    res.resize(t.code.size());
    for (std::size_t i = 0; i < t.code.size(); ++i) {
        const auto& ins = t.code[i];
        double r = 0;
        double v = 0;
        switch (ins.op) {
            case Tape::Op::Const: v = ins.c; break;
            case Tape::Op::Load: v = syms[static_cast<std::size_t>(ins.a)]; break;
            case Tape::Op::Neg: v = -val[ins.a]; break;
            case Tape::Op::Add: v = val[ins.a] + val[ins.b]; break;
            case Tape::Op::Sub: v = val[ins.a] - val[ins.b]; break;
            case Tape::Op::Mul: v = val[ins.a] * val[ins.b]; break;
            case Tape::Op::Div: v = val[ins.a] / val[ins.b]; break;
            case Tape::Op::Pow: {
                double base = val[ins.a];
                v = 1;
                for (unsigned j = 0; j < ins.k; ++j) v *= base;
                break;
            }
            case Tape::Op::Lt:
                v = val[ins.a] < val[ins.b] ? 1 : 0;
                r = v ? 0 : (val[ins.a] - val[ins.b]) + kStrictEps;
                break;
            case Tape::Op::Le:
                v = val[ins.a] <= val[ins.b] ? 1 : 0;
                r = v ? 0 : val[ins.a] - val[ins.b];
                break;
            case Tape::Op::Eq:
                v = val[ins.a] == val[ins.b] ? 1 : 0;
                r = std::fabs(val[ins.a] - val[ins.b]);
                break;
            case Tape::Op::Ge:
                v = val[ins.a] >= val[ins.b] ? 1 : 0;
                r = v ? 0 : val[ins.b] - val[ins.a];
                break;
            case Tape::Op::Gt:
                v = val[ins.a] > val[ins.b] ? 1 : 0;
                r = v ? 0 : (val[ins.b] - val[ins.a]) + kStrictEps;
                break;
            case Tape::Op::And:
                v = (val[ins.a] != 0 && val[ins.b] != 0) ? 1 : 0;
                r = res[ins.a] + res[ins.b];
                break;
            case Tape::Op::Or:
                v = (val[ins.a] != 0 || val[ins.b] != 0) ? 1 : 0;
                r = std::min(res[ins.a], res[ins.b]);
                break;
            case Tape::Op::Not:
                v = val[ins.a] != 0 ? 0 : 1;
                r = v ? 0 : 1;
                break;
        }
        if (!std::isfinite(v)) {
            v = 0;
            r = std::numeric_limits<double>::infinity();
        }
        val[i] = v;
        res[i] = r;
    }
    double total = 0;
    for (int slot : t.conjuncts) total += res[slot];
    return total;
}

/// Per-symbol sampling boxes derived from the simple conjuncts of the path
/// condition (sym-vs-constant comparisons and sym == sym aliases).
struct SampleBox {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    int aliasOf = -1;       // index of an earlier symbol this one must equal
    bool pinned = false;
    double pinnedValue = 0;
    bool integral = false;
};

inline std::vector<SampleBox> deriveBoxes(const symexec::AssertObligation& o,
                                          const std::map<std::string, int>& symIndex) {
    std::vector<SampleBox> boxes(symIndex.size());
    for (const auto& s : o.symbols) {
        auto it = symIndex.find(s.name);
        if (it != symIndex.end() && s.sort == ir::VSort::Int)
            boxes[static_cast<std::size_t>(it->second)].integral = true;
    }
    auto idxOf = [&](const ir::Expr& e) -> int {
        if (e->kind != ir::ExprKind::Sym) return -1;
        auto it = symIndex.find(e->sym.name);
        return it == symIndex.end() ? -1 : it->second;
    };
    for (const auto& c : o.pathCondition) {
        if (c->kind != ir::ExprKind::Cmp) continue;
        int ia = idxOf(c->a);
        int ib = idxOf(c->b);
        bool ca = ir::isConst(c->a);
        bool cb = ir::isConst(c->b);
        if (c->op == ir::CmpOp::Eq) {
            if (ia >= 0 && ib >= 0 && ia != ib) {
                auto& later = boxes[static_cast<std::size_t>(std::max(ia, ib))];
                if (later.aliasOf < 0) later.aliasOf = std::min(ia, ib);
            } else if (ia >= 0 && cb) {
                boxes[static_cast<std::size_t>(ia)].pinned = true;
                boxes[static_cast<std::size_t>(ia)].pinnedValue = c->b->value.toDouble();
            } else if (ib >= 0 && ca) {
                boxes[static_cast<std::size_t>(ib)].pinned = true;
                boxes[static_cast<std::size_t>(ib)].pinnedValue = c->a->value.toDouble();
            }
            continue;
        }
        // Normalize to sym OP const.
        int idx = -1;
        double bound = 0;
        bool symOnLeft = false;
        if (ia >= 0 && cb) {
            idx = ia;
            bound = c->b->value.toDouble();
            symOnLeft = true;
        } else if (ib >= 0 && ca) {
            idx = ib;
            bound = c->a->value.toDouble();
        } else {
            continue;
        }
        auto& box = boxes[static_cast<std::size_t>(idx)];
        bool upper = symOnLeft ? (c->op == ir::CmpOp::Lt || c->op == ir::CmpOp::Le)
                               : (c->op == ir::CmpOp::Gt || c->op == ir::CmpOp::Ge);
        if (upper)
            box.hi = std::min(box.hi, bound);
        else
            box.lo = std::max(box.lo, bound);
    }
    return boxes;
}

struct Sampler {
    std::mt19937_64 rng;

    explicit Sampler(std::uint64_t seed) : rng(seed) {}

    double u01() { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

    /// Log-uniform magnitude in [2^-10, 2^10].
    double logUniformMagnitude() {
        double lg = -10.0 + 20.0 * u01();
        return std::exp2(lg);
    }

    double sampleBox(const SampleBox& box) {
        constexpr double kMargin = 0x1.0p-20;
        double v;
        if (box.pinned) {
            v = box.pinnedValue;
        } else if (std::isfinite(box.lo) && std::isfinite(box.hi)) {
            double width = box.hi - box.lo;
            v = box.lo + width * (kMargin + (1.0 - 2.0 * kMargin) * u01());
        } else if (std::isfinite(box.lo)) {
            v = box.lo + logUniformMagnitude();
        } else if (std::isfinite(box.hi)) {
            v = box.hi - logUniformMagnitude();
        } else {
            double sign = (rng() & 1u) ? 1.0 : -1.0;
            v = sign * logUniformMagnitude();
        }
        if (box.integral) v = std::round(v);
        return v;
    }
};

}  // namespace detail

/// Randomized falsification: stratified sampling over the assumption boxes,
/// coordinate-wise descent on constraint residuals for the best samples, and
/// exact-rational snapping with full replay validation before any Violated
/// verdict. Incomplete by construction: never returns HoldsProved.
inline Verdict falsify(const ir::Program& lowered, const symexec::Bounds& bounds,
                       const symexec::AssertObligation& o, const FalsifyOptions& opt = {}) {
    Verdict verdict;
    verdict.backend = "builtin";

    detail::Tape tape = detail::compileObligation(o);
    std::vector<detail::SampleBox> boxes = detail::deriveBoxes(o, tape.symIndex);
    detail::Sampler sampler(opt.seed);

    const std::size_t nSyms = tape.symNames.size();
    std::vector<double> sample(nSyms, 0.0);
    std::vector<double> val;
    std::vector<double> res;
    long long spent = 0;

    auto resolveAliases = [&](std::vector<double>& s) {
        for (std::size_t i = 0; i < nSyms; ++i)
            if (boxes[i].aliasOf >= 0)
                s[i] = s[static_cast<std::size_t>(boxes[i].aliasOf)];
    };

    auto tryExact = [&](const std::vector<double>& s) -> bool {
        // Snap to small-denominator rationals; aliased symbols share the
        // representative's value so exact equalities survive snapping.
        std::map<std::string, Rational> exact;
        std::vector<Rational> snapped(nSyms);
        for (std::size_t i = 0; i < nSyms; ++i) {
            if (boxes[i].aliasOf >= 0) {
                snapped[i] = snapped[static_cast<std::size_t>(boxes[i].aliasOf)];
            } else if (boxes[i].integral) {
                snapped[i] = Rational(static_cast<long long>(std::llround(s[i])));
            } else {
                snapped[i] = snapToRational(s[i], opt.maxDenominator);
            }
            exact.emplace(tape.symNames[i], snapped[i]);
        }
        try {
            for (const auto& c : o.pathCondition)
                if (!ir::evalSym(c, exact).asBool("conjunct")) return false;
            if (!ir::evalSym(o.negatedAssertion, exact).asBool("negated assertion")) return false;
        } catch (const ir::EvalError&) {
            return false;
        }

        Witness w;
        w.obligationLabel = o.label;
        w.choices = o.choices;
        w.sourceBounds = bounds.intInputs;
        w.targetAssertOrdinal = o.assertOrdinal;
        for (const auto& sym : o.symbols) {
            auto it = exact.find(sym.name);
            w.assignment[sym.name] = it != exact.end() ? it->second : Rational(0);
            if (sym.origin == ir::Symbol::Origin::Havoc) w.havocOrder.push_back(sym.name);
        }
        try {
            Trace t = replay(lowered, w, bounds);
            if (t.asserts.empty()) return false;
            const AssertOutcome& last = t.asserts.back();
            if (last.holds || last.label != o.label) return false;
        } catch (const ReplayError&) {
            return false;
        } catch (const ir::EvalError&) {
            return false;
        }
        verdict.kind = VerdictKind::Violated;
        verdict.witness = std::move(w);
        return true;
    };

    // No free symbols: a single evaluation settles satisfiability.
    if (nSyms == 0) {
        double r = detail::runTape(tape, sample, val, res);
        verdict.budgetSpent = 1;
        if (r == 0 && tryExact(sample)) return verdict;
        verdict.diagnostic = "no satisfying assignment found";
        return verdict;
    }

    long long sampleBudget = std::max<long long>(1, (opt.budget * 7) / 10);
    double bestResidual = std::numeric_limits<double>::infinity();
    std::vector<double> bestSample = sample;
    int snapAttempts = 0;

    while (spent < sampleBudget) {
        for (std::size_t i = 0; i < nSyms; ++i) sample[i] = sampler.sampleBox(boxes[i]);
        resolveAliases(sample);
        spent++;
        double r = detail::runTape(tape, sample, val, res);
        if (r == 0) {
            if (snapAttempts++ < 1000 && tryExact(sample)) {
                verdict.budgetSpent = spent;
                return verdict;
            }
        } else if (r < bestResidual) {
            bestResidual = r;
            bestSample = sample;
        }
    }

    // Coordinate-wise local descent from the best sample.
    if (std::isfinite(bestResidual)) {
        std::vector<double> cur = bestSample;
        double curRes = bestResidual;
        bool improved = true;
        while (improved && spent < opt.budget) {
            improved = false;
            for (std::size_t i = 0; i < nSyms && spent < opt.budget; ++i) {
                if (boxes[i].pinned || boxes[i].aliasOf >= 0) continue;
                double x = cur[i];
                double step = std::max(std::fabs(x), 1.0) * 0.25;
                const double candidates[5] = {x * 0.5, x * 2.0, -x, x + step, x - step};
                for (double cand : candidates) {
                    if (spent >= opt.budget) break;
                    std::vector<double> trial = cur;
                    trial[i] = boxes[i].integral ? std::round(cand) : cand;
                    resolveAliases(trial);
                    spent++;
                    double r = detail::runTape(tape, trial, val, res);
                    if (r < curRes) {
                        cur = trial;
                        curRes = r;
                        improved = true;
                        if (r == 0 && snapAttempts++ < 1000 && tryExact(cur)) {
                            verdict.budgetSpent = spent;
                            return verdict;
                        }
                    }
                }
            }
        }
    }

    verdict.budgetSpent = spent;
    verdict.diagnostic = "no satisfying assignment found within budget";
    return verdict;
}

// ---- external solver backend -------------------------------------------------------

struct SolverConfig {
    /// Command template; "{}" is replaced by the .smt2 path, otherwise the
    /// path is appended. Answer expected on the first line of stdout.
    std::string command;
};

namespace detail {

inline std::string runCommand(const std::string& cmd, int& exitCode) {
    std::string out;
    FILE* pipe = ::popen((cmd + " 2>/dev/null").c_str(), "r");
    if (!pipe) {
        exitCode = -1;
        return out;
    }
    char buf[4096];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof(buf), pipe)) > 0) out.append(buf, n);
    int status = ::pclose(pipe);
    exitCode = status;
    return out;
}

struct SExprParser {
    const std::string& text;
    std::size_t pos = 0;

    explicit SExprParser(const std::string& t) : text(t) {}

    void skipWs() {
        while (pos < text.size() &&
               (text[pos] == ' ' || text[pos] == '\n' || text[pos] == '\t' || text[pos] == '\r'))
            pos++;
    }
    bool atEnd() {
        skipWs();
        return pos >= text.size();
    }
    // Token: "(", ")" or an atom.
    std::string next() {
        skipWs();
        if (pos >= text.size()) return "";
        char c = text[pos];
        if (c == '(' || c == ')') {
            pos++;
            return std::string(1, c);
        }
        std::size_t start = pos;
        while (pos < text.size() && text[pos] != '(' && text[pos] != ')' &&
               text[pos] != ' ' && text[pos] != '\n' && text[pos] != '\t' && text[pos] != '\r')
            pos++;
        return text.substr(start, pos - start);
    }
};

/// Parses a model value: NUMERAL, DECIMAL, (- v), (/ a b) with nesting.
inline std::optional<Rational> parseModelValue(SExprParser& p) {
    std::string tok = p.next();
    if (tok == "(") {
        std::string op = p.next();
        if (op == "-") {
            auto v = parseModelValue(p);
            if (!v || p.next() != ")") return std::nullopt;
            return -*v;
        }
        if (op == "/") {
            auto a = parseModelValue(p);
            auto b = parseModelValue(p);
            if (!a || !b || p.next() != ")") return std::nullopt;
            if (b->isZero()) return std::nullopt;
            return *a / *b;
        }
        return std::nullopt;  // root-obj and friends are not supported
    }
    if (tok.empty() || tok == ")") return std::nullopt;
    try {
        return Rational::fromDecimal(tok);
    } catch (const Error&) {
        return std::nullopt;
    }
}

/// Extracts (define-fun name () Sort value) bindings from solver output.
/// Entries with arguments or non-numeric sorts are skipped; an entry whose
/// value cannot be read as a rational (root objects etc.) fails the parse.
inline std::optional<std::map<std::string, Rational>> parseModel(const std::string& text) {
    std::map<std::string, Rational> model;
    std::size_t search = 0;
    while (true) {
        std::size_t at = text.find("define-fun", search);
        if (at == std::string::npos) break;
        search = at + 10;
        SExprParser p(text);
        p.pos = search;
        std::string name = p.next();
        if (name.empty() || name == "(" || name == ")") continue;
        if (name.size() >= 2 && name.front() == '|' && name.back() == '|')
            name = name.substr(1, name.size() - 2);
        if (p.next() != "(" || p.next() != ")") continue;  // only zero-argument entries
        std::string sort = p.next();
        if (sort != "Real" && sort != "Int") continue;
        auto value = parseModelValue(p);
        if (!value) return std::nullopt;
        model[name] = *value;
    }
    return model;
}

}  // namespace detail

enum class Backend { Builtin, Smt };

struct CheckOptions {
    Backend backend = Backend::Builtin;
    FalsifyOptions falsify;
    SolverConfig solver;
};

/// Dispatches one obligation: builtin -> numeric falsifier; smt -> emit the
/// script, run the configured external command, and on sat parse + validate
/// the model by exact replay. Solver problems are conservative Unknowns.
inline Verdict checkObligation(const ir::Program& lowered, const symexec::Bounds& bounds,
                               const symexec::AssertObligation& o, const CheckOptions& opt) {
    if (opt.backend == Backend::Builtin) return falsify(lowered, bounds, o, opt.falsify);

    Verdict v;
    v.backend = "smt";
    if (opt.solver.command.empty()) {
        v.diagnostic = "solver unavailable: no solver command configured";
        return v;
    }

    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path();
    fs::path file = dir / ("esmck_ob" + std::to_string(o.id) + "_" +
                           std::to_string(static_cast<unsigned>(::getpid())) + ".smt2");
    {
        std::string script = emitSmt(o);
        FILE* f = std::fopen(file.c_str(), "w");
        if (!f) {
            v.diagnostic = "cannot write temporary file " + file.string();
            return v;
        }
        std::fwrite(script.data(), 1, script.size(), f);
        std::fclose(f);
    }

    std::string cmd = opt.solver.command;
    if (auto ph = cmd.find("{}"); ph != std::string::npos)
        cmd.replace(ph, 2, file.string());
    else
        cmd += " " + file.string();

    int exitCode = 0;
    std::string output = detail::runCommand(cmd, exitCode);
    std::error_code ec;
    fs::remove(file, ec);

    std::string firstLine = output.substr(0, output.find('\n'));
    while (!firstLine.empty() && (firstLine.back() == '\r' || firstLine.back() == ' '))
        firstLine.pop_back();

    if (output.empty()) {
        v.diagnostic = "solver unavailable or produced no output (exit " +
                       std::to_string(exitCode) + ")";
        return v;
    }
    if (firstLine == "unsat") {
        v.kind = VerdictKind::HoldsProved;
        return v;
    }
    if (firstLine == "unknown") {
        v.diagnostic = "solver returned unknown";
        return v;
    }
    if (firstLine != "sat") {
        v.diagnostic = "unexpected solver output: " + firstLine;
        return v;
    }

    auto model = detail::parseModel(output);
    if (!model) {
        v.diagnostic = "could not parse solver model";
        return v;
    }
    Witness w;
    w.obligationLabel = o.label;
    w.choices = o.choices;
    w.sourceBounds = bounds.intInputs;
    w.targetAssertOrdinal = o.assertOrdinal;
    for (const auto& sym : o.symbols) {
        auto it = model->find(sym.name);
        w.assignment[sym.name] = it != model->end() ? it->second : Rational(0);
        if (sym.origin == ir::Symbol::Origin::Havoc) w.havocOrder.push_back(sym.name);
    }
    try {
        Trace t = replay(lowered, w, bounds);
        if (t.asserts.empty() || t.asserts.back().holds || t.asserts.back().label != o.label) {
            v.diagnostic = "solver model failed replay validation";
            return v;
        }
    } catch (const Error& e) {
        v.diagnostic = std::string("solver model failed replay validation: ") + e.what();
        return v;
    }
    v.kind = VerdictKind::Violated;
    v.witness = std::move(w);
    return v;
}

// ---- structured-text (JSON) reports -------------------------------------------------

inline nlohmann::json rationalToJson(const Rational& r) {
    return nlohmann::json{{"num", r.num().str()}, {"den", r.den().str()}};
}

inline Rational rationalFromJson(const nlohmann::json& j) {
    return Rational(Int(j.at("num").get<std::string>()), Int(j.at("den").get<std::string>()));
}

inline nlohmann::json witnessToJson(const Witness& w) {
    nlohmann::json assignment = nlohmann::json::array();
    for (const auto& [name, value] : w.assignment) {
        nlohmann::json entry = rationalToJson(value);
        entry["symbol"] = name;
        assignment.push_back(std::move(entry));
    }
    nlohmann::json j{
        {"obligation", w.obligationLabel},
        {"assignment", std::move(assignment)},
        {"havoc_order", w.havocOrder},
        {"choices", w.choices},
        {"bounds", w.sourceBounds},
    };
    if (w.targetAssertOrdinal) j["target_assert"] = *w.targetAssertOrdinal;
    return j;
}

inline Witness witnessFromJson(const nlohmann::json& j) {
    Witness w;
    w.obligationLabel = j.at("obligation").get<std::string>();
    for (const auto& entry : j.at("assignment"))
        w.assignment[entry.at("symbol").get<std::string>()] = rationalFromJson(entry);
    w.havocOrder = j.at("havoc_order").get<std::vector<std::string>>();
    w.choices = j.at("choices").get<std::vector<long long>>();
    w.sourceBounds = j.at("bounds").get<std::map<std::string, long long>>();
    if (j.contains("target_assert")) w.targetAssertOrdinal = j.at("target_assert").get<int>();
    return w;
}

inline nlohmann::json traceToJson(const Trace& t) {
    nlohmann::json events = nlohmann::json::array();
    for (const auto& e : t.events) {
        nlohmann::json entry = rationalToJson(e.value);
        entry["var"] = e.var;
        events.push_back(std::move(entry));
    }
    nlohmann::json asserts = nlohmann::json::array();
    for (const auto& a : t.asserts)
        asserts.push_back({{"label", a.label}, {"holds", a.holds}, {"ordinal", a.ordinal}});
    nlohmann::json finalStore = nlohmann::json::object();
    for (const auto& [var, value] : t.finalStore) finalStore[var] = rationalToJson(value);
    return nlohmann::json{
        {"events", std::move(events)},
        {"asserts", std::move(asserts)},
        {"final_store", std::move(finalStore)},
    };
}

}  // namespace esmck::solve
