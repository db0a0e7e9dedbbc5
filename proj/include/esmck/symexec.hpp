#pragma once

#include "esmck/ir.hpp"

#include <initializer_list>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace esmck::symexec {

struct ExploreError : Error {
    explicit ExploreError(const std::string& msg) : Error(msg) {}
};

/// Concrete values for the integer inputs plus exploration budgets.
struct Bounds {
    std::map<std::string, long long> intInputs;
    long long stmtBudget = 500000;   // statements per path
    long long pathBudget = 100000;   // completed paths per exploration

    Bounds() = default;
    Bounds(std::initializer_list<std::pair<const std::string, long long>> init)
        : intInputs(init) {}
};

struct PathEvent {
    enum class Kind { Assign, Havoc, Assume, Choice, Print, Assert };
    Kind kind;
    std::string var;      // target / havocked variable
    std::string symName;  // fresh symbol for Havoc
    long long choice = 0; // Choice
};

/// One verification condition: the conjunction of pathCondition with the
/// negated assertion is satisfiable iff a run along this path violates the
/// labeled assert. `symbols` lists every symbol created along the path
/// prefix in creation order; `choices` pins the nondeterministic integers
/// so the path can be replayed.
struct AssertObligation {
    int id = 0;
    std::string label;
    std::vector<ir::Expr> pathCondition;
    ir::Expr negatedAssertion;
    std::vector<ir::Symbol> symbols;
    std::vector<long long> choices;
    int assertOrdinal = 0;  // index of this assert among asserts on its path
};

struct ExplorationSummary {
    long long paths = 0;
    long long blockedPaths = 0;       // ended at choose(b) with b == 0
    long long obligations = 0;
    long long prunedInfeasible = 0;
    long long statements = 0;
    bool complete = true;

    std::string toText() const {
        std::string s;
        s += "paths explored: " + std::to_string(paths) + "\n";
        s += "obligations: " + std::to_string(obligations) + "\n";
        s += "pruned infeasible: " + std::to_string(prunedInfeasible) + "\n";
        if (blockedPaths) s += "blocked paths: " + std::to_string(blockedPaths) + "\n";
        if (!complete) s += "WARNING: exploration incomplete (budget exhausted)\n";
        return s;
    }
};

struct ExploreResult {
    std::vector<AssertObligation> obligations;
    ExplorationSummary summary;
};

/// Simplification entry point shared with the expression layer: constant
/// folding plus the unit rewrites, semantics-preserving for every symbol
/// assignment.
using ir::simplify;

namespace detail {

struct Frame {
    enum class Kind { Block, Loop };
    Kind kind;
    const ir::Block* block = nullptr;
    std::size_t pc = 0;
    std::string loopVar;
    long long count = 0;
    long long iter = 0;
};

/// Per-path symbolic state. Copied wholesale when execution forks.
struct SymState {
    std::map<std::string, ir::Expr> store;
    std::vector<ir::Expr> pathCondition;
    std::vector<ir::Symbol> symbols;
    std::vector<PathEvent> events;
    std::vector<long long> choices;
    std::vector<Frame> frames;
    long long stepsRemaining = 0;
    int assertOrdinal = 0;
};

struct Explorer {
    const ir::Program& program;
    const Bounds& bounds;
    ExploreResult result;
    std::map<std::string, long long> havocCounters;
    bool stopped = false;

    Explorer(const ir::Program& p, const Bounds& b) : program(p), bounds(b) {}

    ir::Symbol freshHavoc(const std::string& var) {
        long long k = havocCounters[var]++;
        return ir::Symbol{var + "!" + std::to_string(k), ir::Symbol::Origin::Havoc,
                          ir::VSort::Real};
    }

    /// Reads of never-assigned globals become fresh symbols, the
    /// havoc-on-first-use semantics.
    void materializeUninit(const ir::Expr& e, SymState& st) {
        std::set<std::string> used;
        ir::collectVars(e, used);
        for (const auto& v : used) {
            if (st.store.count(v)) continue;
            if (!program.isGlobal(v))
                throw ExploreError("read of unknown variable " + v);
            ir::Symbol s = freshHavoc(v);
            st.symbols.push_back(s);
            st.events.push_back(PathEvent{PathEvent::Kind::Havoc, v, s.name, 0});
            st.store.emplace(v, ir::symbol(s));
        }
    }

    ir::Expr evalSymbolic(const ir::Expr& e, SymState& st) {
        materializeUninit(e, st);
        return ir::substituteVars(e, st.store);
    }

    long long concreteCount(const ir::Expr& e, SymState& st, const char* what) {
        ir::Expr v = evalSymbolic(e, st);
        if (!ir::isConst(v))
            throw ExploreError(std::string(what) + " does not evaluate to a concrete value under the given bounds: " +
                               ir::toString(e));
        const Rational& r = v->value;
        if (!r.isInteger() || r.sign() < 0)
            throw ExploreError(std::string(what) + " must be a nonnegative integer, got " + r.str());
        return r.num().convert_to<long long>();
    }

    void emitObligation(const std::string& label, ir::Expr negated, const SymState& st) {
        AssertObligation o;
        o.id = static_cast<int>(result.obligations.size());
        o.label = label;
        o.pathCondition = st.pathCondition;
        o.negatedAssertion = std::move(negated);
        o.symbols = st.symbols;
        o.choices = st.choices;
        o.assertOrdinal = st.assertOrdinal;
        result.obligations.push_back(std::move(o));
        result.summary.obligations++;
    }

    void finishPath() {
        result.summary.paths++;
        if (result.summary.paths + result.summary.blockedPaths >= bounds.pathBudget) {
            stopped = true;
            result.summary.complete = false;
        }
    }

    void run(SymState st) {
        while (!st.frames.empty()) {
            if (stopped) return;
            Frame& top = st.frames.back();
            if (top.kind == Frame::Kind::Loop) {
                if (top.iter >= top.count) {
                    st.store.erase(top.loopVar);
                    st.frames.pop_back();
                    continue;
                }
                st.store[top.loopVar] = ir::constant(Rational(top.iter));
                top.iter++;
                st.frames.push_back(Frame{Frame::Kind::Block, top.block, 0, "", 0, 0});
                continue;
            }
            if (top.pc >= top.block->size()) {
                st.frames.pop_back();
                continue;
            }
            const ir::Stmt stmt = (*top.block)[top.pc++];
            if (--st.stepsRemaining < 0) {
                result.summary.complete = false;
                return;
            }
            result.summary.statements++;

            switch (stmt->kind) {
                case ir::StmtKind::Assign: {
                    ir::Expr v = evalSymbolic(stmt->expr, st);
                    st.store[stmt->var] = v;
                    st.events.push_back(PathEvent{PathEvent::Kind::Assign, stmt->var, "", 0});
                    break;
                }
                case ir::StmtKind::Havoc: {
                    ir::Symbol s = freshHavoc(stmt->var);
                    st.symbols.push_back(s);
                    st.events.push_back(PathEvent{PathEvent::Kind::Havoc, stmt->var, s.name, 0});
                    st.store[stmt->var] = ir::symbol(s);
                    break;
                }
                case ir::StmtKind::Assume: {
                    ir::Expr c = evalSymbolic(stmt->expr, st);
                    std::vector<ir::Expr> conjuncts;
                    ir::splitConjuncts(c, conjuncts);
                    bool infeasible = false;
                    for (const auto& conj : conjuncts) {
                        if (ir::isBoolConst(conj, true)) continue;
                        if (ir::isBoolConst(conj, false)) {
                            infeasible = true;
                            break;
                        }
                        st.pathCondition.push_back(conj);
                    }
                    if (infeasible) {
                        result.summary.prunedInfeasible++;
                        return;
                    }
                    st.events.push_back(PathEvent{PathEvent::Kind::Assume, "", "", 0});
                    break;
                }
                case ir::StmtKind::Assert: {
                    ir::Expr phi = evalSymbolic(stmt->expr, st);
                    std::string label =
                        stmt->label.empty() ? ir::toString(stmt->expr) : stmt->label;
                    emitObligation(label, ir::mkNot(phi), st);
                    st.events.push_back(PathEvent{PathEvent::Kind::Assert, "", "", 0});
                    st.assertOrdinal++;
                    if (ir::isBoolConst(phi, false)) {
                        // Definite violation: no run continues past this point.
                        finishPath();
                        return;
                    }
                    if (!ir::isBoolConst(phi, true)) st.pathCondition.push_back(phi);
                    break;
                }
                case ir::StmtKind::If: {
                    ir::Expr guard = evalSymbolic(stmt->expr, st);
                    if (ir::isBoolConst(guard, true)) {
                        result.summary.prunedInfeasible++;  // else branch
                        st.frames.push_back(Frame{Frame::Kind::Block, &stmt->body, 0, "", 0, 0});
                        break;
                    }
                    if (ir::isBoolConst(guard, false)) {
                        result.summary.prunedInfeasible++;  // then branch
                        st.frames.push_back(Frame{Frame::Kind::Block, &stmt->elseBody, 0, "", 0, 0});
                        break;
                    }
                    SymState thenState = st;
                    ir::splitConjuncts(guard, thenState.pathCondition);
                    thenState.events.push_back(PathEvent{PathEvent::Kind::Assume, "", "", 0});
                    thenState.frames.push_back(Frame{Frame::Kind::Block, &stmt->body, 0, "", 0, 0});
                    run(std::move(thenState));
                    if (stopped) return;
                    SymState elseState = std::move(st);
                    elseState.pathCondition.push_back(ir::mkNot(guard));
                    elseState.events.push_back(PathEvent{PathEvent::Kind::Assume, "", "", 0});
                    elseState.frames.push_back(Frame{Frame::Kind::Block, &stmt->elseBody, 0, "", 0, 0});
                    run(std::move(elseState));
                    return;
                }
                case ir::StmtKind::ChooseInt: {
                    long long boundVal = concreteCount(stmt->expr, st, "choose bound");
                    if (boundVal == 0) {
                        // No admissible choice in [0, 0): the path is blocked.
                        result.summary.blockedPaths++;
                        if (result.summary.paths + result.summary.blockedPaths >=
                            bounds.pathBudget) {
                            stopped = true;
                            result.summary.complete = false;
                        }
                        return;
                    }
                    for (long long v = 0; v < boundVal; ++v) {
                        SymState child;
                        if (v + 1 < boundVal)
                            child = st;
                        else
                            child = std::move(st);
                        child.store[stmt->var] = ir::constant(Rational(v));
                        child.choices.push_back(v);
                        child.events.push_back(PathEvent{PathEvent::Kind::Choice, stmt->var, "", v});
                        run(std::move(child));
                        if (stopped) return;
                        if (v + 1 == boundVal) return;
                    }
                    return;
                }
                case ir::StmtKind::For: {
                    long long count = concreteCount(stmt->expr, st, "loop count");
                    st.frames.push_back(
                        Frame{Frame::Kind::Loop, &stmt->body, 0, stmt->var, count, 0});
                    break;
                }
                case ir::StmtKind::Evolve:
                    throw ExploreError("program contains an Evolve block; run lowerEvolve first");
                case ir::StmtKind::Call: {
                    const ir::Block* body = program.findFunction(stmt->var);
                    if (!body) throw ExploreError("call to unknown function " + stmt->var);
                    st.frames.push_back(Frame{Frame::Kind::Block, body, 0, "", 0, 0});
                    break;
                }
                case ir::StmtKind::Print:
                    st.events.push_back(PathEvent{PathEvent::Kind::Print, "", "", 0});
                    break;
            }
        }
        finishPath();
    }
};

}  // namespace detail

/// Explores every bounded execution of a lowered program depth-first
/// (smaller choice values first, then-branch before else-branch), emitting
/// one obligation per (path, assert) pair in a deterministic order.
inline ExploreResult explore(const ir::Program& p, const Bounds& b) {
    if (ir::containsEvolve(p))
        throw ExploreError("program contains an Evolve block; run lowerEvolve first");

    detail::Explorer ex(p, b);
    detail::SymState init;
    init.stepsRemaining = b.stmtBudget;

    for (const auto& in : p.inputs) {
        if (in.sort == ir::VSort::Int) {
            auto it = b.intInputs.find(in.name);
            if (it == b.intInputs.end())
                throw ExploreError("no bound given for integer input " + in.name);
            if (it->second < 0)
                throw ExploreError("bound for " + in.name + " must be nonnegative");
            init.store.emplace(in.name, ir::constant(Rational(it->second)));
        } else {
            ir::Symbol s{in.name, ir::Symbol::Origin::Input, ir::VSort::Real};
            init.symbols.push_back(s);
            init.store.emplace(in.name, ir::symbol(s));
        }
    }
    for (const auto& in : p.inputs) {
        for (const auto& a : in.assumes) {
            ir::Expr c = ir::substituteVars(a, init.store);
            if (ir::isBoolConst(c, true)) continue;
            if (ir::isBoolConst(c, false)) {
                // The given bounds contradict an input assumption: nothing to explore.
                ex.result.summary.prunedInfeasible++;
                return std::move(ex.result);
            }
            init.pathCondition.push_back(c);
        }
    }

    init.frames.push_back(detail::Frame{detail::Frame::Kind::Block, &p.mainBlock, 0, "", 0, 0});
    ex.run(std::move(init));
    return std::move(ex.result);
}

}  // namespace esmck::symexec
