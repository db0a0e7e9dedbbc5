#pragma once

#include "esmck/ir.hpp"

#include <string>
#include <vector>

namespace esmck::kpp {

/// Model inputs of the boundary-layer mixing case study, with the model's
/// assumptions 0 < dt < 1, D > 0, D > zw, zw > 0, w > 0.
struct KppParams {
    Rational dt;  // time increment
    Rational zw;  // depth of the evaluation point
    Rational D;   // total depth
    Rational w;   // velocity scale
};

/// Full mutable state of one model iteration.
struct KppState {
    Rational t;      // elapsed time
    Rational nu;     // interior diffusivity
    Rational dnu;    // diffusivity gradient at the layer base
    Rational h;      // boundary layer thickness, D - zCr
    Rational sigma;  // nondimensional coordinate, (D - zw)/h
    Rational alpha;  // shoaling factor, 0 < alpha < 1
    Rational zCr;    // critical depth
    Rational K;      // boundary layer diffusivity
    Rational a2;     // shape coefficients
    Rational a3;
};

/// The two computeK variants: the defective one keeps the dnu/w terms in
/// both shape coefficients, the repaired one drops them.
enum class KppVariant { Defective, Repaired };

/// Cubic shape function G(sigma) = sigma + a2*sigma^2 + a3*sigma^3.
inline Rational gShape(const Rational& sigma, const Rational& a2, const Rational& a3) {
    return sigma + a2 * sigma.pow(2) + a3 * sigma.pow(3);
}

/// Boundary layer depth update: h' = D - zCr, sigma' = (D - zw)/h',
/// zCr' = alpha * zCr. Requires D != zCr (guaranteed when the model's
/// invariants hold, defended here anyway).
inline KppState computeBLD(KppState s, const KppParams& p, const Rational& alphaChoice) {
    s.h = p.D - s.zCr;
    if (s.h.isZero()) throw Error("computeBLD: D == zCr gives a zero-thickness layer");
    s.sigma = (p.D - p.zw) / s.h;
    s.alpha = alphaChoice;
    s.zCr = s.alpha * s.zCr;
    return s;
}

/// Diffusivity update K = h*w*G(sigma, a2, a3) with variant-specific shape
/// coefficients.
inline KppState computeK(KppState s, const KppParams& p, KppVariant variant) {
    Rational r = s.nu / (s.h * p.w);
    if (variant == KppVariant::Defective) {
        Rational d = s.dnu / p.w;
        s.a2 = Rational(-2) + Rational(3) * r + d;
        s.a3 = Rational(1) - r - d;
    } else {
        s.a2 = Rational(-2) + Rational(3) * r;
        s.a3 = Rational(1) - r;
    }
    s.K = s.h * p.w * gShape(s.sigma, s.a2, s.a3);
    return s;
}

/// m explicit first-order steps of zCr' = -zCr: zCr * (1 - dt)^m.
inline Rational eulerDecay(const Rational& zCr, const Rational& dt, unsigned m) {
    return zCr * (Rational(1) - dt).pow(m);
}

/// Positivity certificate for the repaired shape function, with
/// r = nu/(h*w): G(sigma, -2+3r, 1-r) = sigma * [(1-sigma)^2 + r*sigma*(3-sigma)],
/// and the bracket is positive for sigma in (0, 1], r > 0.
inline Rational gRepairedLowerBound(const Rational& sigma, const Rational& r) {
    return (Rational(1) - sigma).pow(2) + r * sigma * (Rational(3) - sigma);
}

/// Defective-variant vulnerability: for sigma in (0,1) and r > 0, any
/// d = dnu/w strictly below this bound makes K negative.
inline Rational dnuViolationBound(const Rational& sigma, const Rational& r) {
    return -(gRepairedLowerBound(sigma, r) / (sigma * (Rational(1) - sigma)));
}

/// Builds the case-study model programmatically; structurally identical to
/// the shipped corpus file for the same variant.
inline ir::Program buildKppModel(KppVariant variant) {
    using namespace ir;

    auto v = [](const char* name) { return variable(name); };
    auto c = [](long long n) { return constant(Rational(n)); };

    Program p;
    p.inputs.push_back({"N", VSort::Int, {}});
    p.inputs.push_back({"M", VSort::Int, {}});
    p.inputs.push_back({"dt", VSort::Real,
                        {mkCmp(CmpOp::Lt, c(0), v("dt")), mkCmp(CmpOp::Lt, v("dt"), c(1))}});
    p.inputs.push_back({"zw", VSort::Real, {}});
    p.inputs.push_back({"D", VSort::Real, {}});
    p.inputs.push_back({"w", VSort::Real,
                        {mkCmp(CmpOp::Gt, v("D"), c(0)), mkCmp(CmpOp::Gt, v("D"), v("zw")),
                         mkCmp(CmpOp::Gt, v("zw"), c(0)), mkCmp(CmpOp::Gt, v("w"), c(0))}});
    p.globals = {"t", "nu", "dnu", "h", "sigma", "alpha", "zCr", "K", "a2", "a3"};

    Block initialConditions;
    for (const char* g : {"nu", "dnu", "h", "sigma", "alpha", "zCr", "K", "a2", "a3"})
        initialConditions.push_back(stmtHavoc(g));
    initialConditions.push_back(stmtAssume(
        mkAnd(mkCmp(CmpOp::Lt, c(0), v("nu")), mkCmp(CmpOp::Gt, v("K"), c(0)))));
    initialConditions.push_back(stmtAssume(mkCmp(CmpOp::Eq, v("zCr"), v("zw"))));

    Block computeBLDBlock;
    computeBLDBlock.push_back(stmtAssign("h", mkSub(v("D"), v("zCr"))));
    computeBLDBlock.push_back(stmtAssign("sigma", mkDiv(mkSub(v("D"), v("zw")), v("h"))));
    computeBLDBlock.push_back(stmtHavoc("alpha"));
    computeBLDBlock.push_back(stmtAssume(
        mkAnd(mkCmp(CmpOp::Lt, c(0), v("alpha")), mkCmp(CmpOp::Lt, v("alpha"), c(1)))));
    computeBLDBlock.push_back(stmtAssign("zCr", mkMul(v("alpha"), v("zCr"))));

    Block computeNuBlock;
    computeNuBlock.push_back(stmtHavoc("nu"));
    computeNuBlock.push_back(stmtAssume(mkCmp(CmpOp::Gt, v("nu"), c(0))));
    computeNuBlock.push_back(stmtHavoc("dnu"));

    Block computeKBlock;
    Expr nuTerm = mkDiv(mkMul(c(3), v("nu")), mkMul(v("h"), v("w")));
    Expr nuTermA3 = mkDiv(v("nu"), mkMul(v("h"), v("w")));
    if (variant == KppVariant::Defective) {
        computeKBlock.push_back(stmtAssign(
            "a2", mkAdd(mkAdd(c(-2), nuTerm), mkDiv(v("dnu"), v("w")))));
        computeKBlock.push_back(stmtAssign(
            "a3", mkSub(mkSub(c(1), nuTermA3), mkDiv(v("dnu"), v("w")))));
    } else {
        computeKBlock.push_back(stmtAssign("a2", mkAdd(c(-2), nuTerm)));
        computeKBlock.push_back(stmtAssign("a3", mkSub(c(1), nuTermA3)));
    }
    computeKBlock.push_back(stmtAssign(
        "K", mkMul(mkMul(v("h"), v("w")),
                   mkAdd(mkAdd(v("sigma"), mkMul(v("a2"), mkPow(v("sigma"), 2))),
                         mkMul(v("a3"), mkPow(v("sigma"), 3))))));

    Block invariantBlock;
    invariantBlock.push_back(stmtAssert(mkCmp(CmpOp::Gt, v("K"), c(0)), "K>0"));
    invariantBlock.push_back(stmtAssert(mkCmp(CmpOp::Ge, v("zw"), v("zCr")), "zw>=zCr"));
    invariantBlock.push_back(stmtAssert(mkCmp(CmpOp::Gt, v("zCr"), c(0)), "zCr>0"));

    p.functions.emplace_back("initialConditions", std::move(initialConditions));
    p.functions.emplace_back("computeBLD", std::move(computeBLDBlock));
    p.functions.emplace_back("computeNu", std::move(computeNuBlock));
    p.functions.emplace_back("computeK", std::move(computeKBlock));
    p.functions.emplace_back("invariant", std::move(invariantBlock));

    Block loopBody;
    loopBody.push_back(stmtPrint());
    loopBody.push_back(stmtCall("invariant"));
    loopBody.push_back(stmtCall("computeBLD"));
    loopBody.push_back(stmtCall("computeNu"));
    loopBody.push_back(stmtCall("computeK"));
    loopBody.push_back(stmtEvolve({OdeEquation{"zCr", mkNeg(v("zCr"))}}, "dt", v("M")));

    Block mainBlock;
    mainBlock.push_back(stmtAssign("t", c(0)));
    mainBlock.push_back(stmtPrint());
    mainBlock.push_back(stmtCall("initialConditions"));
    mainBlock.push_back(stmtFor("i", v("N"), std::move(loopBody)));
    mainBlock.push_back(stmtPrint());
    mainBlock.push_back(stmtCall("invariant"));
    p.mainBlock = std::move(mainBlock);

    validateProgram(p);
    return p;
}

}  // namespace esmck::kpp
