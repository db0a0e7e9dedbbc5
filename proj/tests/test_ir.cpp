#include "esmck/ir.hpp"

#include <doctest.h>

#include "esmck/solve.hpp"
#include "test_util.hpp"

using namespace esmck;
using namespace esmck::ir;

TEST_CASE("parse the KPP corpus files") {
    for (const char* name : {"kpp_defective.hsl", "kpp_repaired.hsl"}) {
        Program p = parseProgram(testutil::readFile(testutil::corpusPath(name)));
        CHECK(p.inputs.size() == 6);
        CHECK(p.globals.size() == 10);
        CHECK(p.functions.size() == 5);
        CHECK(p.findFunction("computeK") != nullptr);
        CHECK(p.findInput("dt") != nullptr);
        CHECK(p.findInput("dt")->assumes.size() == 2);
    }
}

TEST_CASE("empty main parses to an empty program") {
    Program p = parseProgram("main { }");
    CHECK(p.inputs.empty());
    CHECK(p.globals.empty());
    CHECK(p.functions.empty());
    CHECK(p.mainBlock.empty());
}

TEST_CASE("undeclared variable is reported by name") {
    CHECK_THROWS_WITH_AS(parseProgram("var x; main { x = y; }"),
                         doctest::Contains("undeclared variable y"), ParseError);
    CHECK_THROWS_WITH_AS(parseProgram("main { havoc q; }"),
                         doctest::Contains("q"), ParseError);
}

TEST_CASE("parse errors carry position info") {
    try {
        parseProgram("var x;\nmain { x = ; }");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line == 2);
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
}

TEST_CASE("recursive call cycles are rejected") {
    const char* src =
        "func f { call g; }\n"
        "func g { call f; }\n"
        "main { call f; }\n";
    CHECK_THROWS_WITH_AS(parseProgram(src), doctest::Contains("recursive call cycle"),
                         ParseError);
    // Self recursion too.
    CHECK_THROWS_AS(parseProgram("func f { call f; } main { }"), ParseError);
    // Acyclic nesting is fine.
    CHECK_NOTHROW(parseProgram("func g { print; } func f { call g; } main { call f; }"));
}

TEST_CASE("misc parser rejections") {
    CHECK_THROWS_AS(parseProgram("var x; var x; main { }"), ParseError);       // duplicate
    CHECK_THROWS_AS(parseProgram("input int N; var N; main { }"), ParseError); // duplicate
    CHECK_THROWS_AS(parseProgram("input real a assume(b > 0); input real b; main { }"),
                    ParseError);  // assumption over a later input
    CHECK_THROWS_AS(parseProgram("input int N; main { N = 3; }"), ParseError); // assign to input
    CHECK_THROWS_AS(parseProgram("var x; main { x = pow(x, -1); }"), ParseError);
    CHECK_THROWS_AS(parseProgram("var x; main { x = pow(x, 0.5); }"), ParseError);
    CHECK_THROWS_AS(parseProgram("var x; main { assume(x); }"), ParseError);   // sort error
    CHECK_THROWS_AS(parseProgram("var x; main { x = 1 < 2; }"), ParseError);   // sort error
    CHECK_THROWS_AS(parseProgram("var x; main { for x in 0..3 { } }"), ParseError);  // shadow
    CHECK_THROWS_AS(parseProgram("main { call nothere; }"), ParseError);
    CHECK_THROWS_AS(parseProgram("var x; main { evolve { x' = -x; } dt q steps 3; }"),
                    ParseError);  // undeclared dt var
    CHECK_THROWS_AS(parseProgram("var x; main { evolve { x' = -x; x' = x; } dt x steps 3; }"),
                    ParseError);  // duplicate ODE
}

TEST_CASE("round trip: parse . print . parse is identity on the corpus") {
    for (const char* name : {"kpp_defective.hsl", "kpp_repaired.hsl"}) {
        Program p = parseProgram(testutil::readFile(testutil::corpusPath(name)));
        std::string printed = printProgram(p);
        Program p2 = parseProgram(printed);
        CHECK(programEq(p, p2));
        // print is a fixpoint after one round
        CHECK(printProgram(p2) == printed);
    }
}

TEST_CASE("round trip on assorted constructs") {
    const char* src =
        "input int N;\n"
        "input real u assume(0 < u && u < 1);\n"
        "var x;\n"
        "var y;\n"
        "main {\n"
        "  x = 0.5;\n"
        "  y = choose(N);\n"
        "  if (x < 1) { x = x + 1; } else { havoc x; }\n"
        "  for i in 0..N {\n"
        "    assume(x > 0 || y < 2);\n"
        "    assert(!(x == y)) : \"x!=y\";\n"
        "  }\n"
        "  print;\n"
        "}\n";
    Program p = parseProgram(src);
    CHECK(programEq(p, parseProgram(printProgram(p))));
    CHECK(printProgram(p).find("assume(0 < u && u < 1)") != std::string::npos);
}

TEST_CASE("printProgram emits the assume clause text") {
    Program p = parseProgram("input real dt assume(0 < dt && dt < 1);\nmain { }");
    std::string out = printProgram(p);
    CHECK(out.find("input real dt assume(0 < dt && dt < 1);") != std::string::npos);
    // Empty program prints a minimal empty main.
    CHECK(printProgram(parseProgram("main { }")) == "main {\n}\n");
}

TEST_CASE("var initializers run before main") {
    Program p = parseProgram("var t = 0.0;\nvar u = 2;\nmain { print; }");
    REQUIRE(p.mainBlock.size() == 3);
    CHECK(p.mainBlock[0]->kind == StmtKind::Assign);
    CHECK(p.mainBlock[0]->var == "t");
    CHECK(p.mainBlock[1]->var == "u");
    CHECK(p.mainBlock[2]->kind == StmtKind::Print);
}

TEST_CASE("lowerEvolve: no Evolve means identity") {
    Program p = parseProgram("var x;\nmain { x = 1; for i in 0..3 { x = x + 1; } }");
    Program q = lowerEvolve(p);
    CHECK(programEq(p, q));
}

TEST_CASE("lowerEvolve: single-ODE block becomes choose + Euler loop") {
    Program p = parseProgram(testutil::readFile(testutil::corpusPath("kpp_defective.hsl")));
    Program q = lowerEvolve(p);
    CHECK(!containsEvolve(q));
    std::string out = printProgram(q);
    CHECK(out.find("_m0 = choose(M);") != std::string::npos);
    CHECK(out.find("for _j0 in 0.._m0 {") != std::string::npos);
    CHECK(out.find("t = t + dt;") != std::string::npos);
    CHECK(out.find("zCr = zCr + -zCr * dt;") != std::string::npos);
    // New step-count variable is declared.
    CHECK(q.isGlobal("_m0"));

    SUBCASE("idempotent") {
        Program q2 = lowerEvolve(q);
        CHECK(programEq(q, q2));
    }
    SUBCASE("lowered program round-trips") {
        CHECK(programEq(q, parseProgram(printProgram(q))));
    }
}

TEST_CASE("lowerEvolve: no clock advance without a global t") {
    Program p = parseProgram("input int S;\ninput real d assume(0 < d && d < 1);\nvar x;\n"
                             "main { x = 1; evolve { x' = -x; } dt d steps S; }");
    Program q = lowerEvolve(p);
    std::string out = printProgram(q);
    CHECK(out.find("t = t +") == std::string::npos);
    CHECK(out.find("x = x + -x * d;") != std::string::npos);
}

TEST_CASE("lowerEvolve: two coupled ODEs update simultaneously") {
    const char* src =
        "input int S;\n"
        "input real d assume(0 < d && d < 1);\n"
        "var x = 1;\nvar y = 0;\n"
        "main { evolve { x' = -x; y' = x; } dt d steps S; }\n";
    Program q = lowerEvolve(parseProgram(src));
    CHECK(!containsEvolve(q));

    // Simultaneous-update oracle, 3 steps with dt = 1/2: each step reads
    // pre-step values, so x_{k+1} = x_k/2 and y_{k+1} = y_k + x_k/2.
    Rational x(1), y(0), dt(esmck::Int(1), esmck::Int(2));
    for (int step = 0; step < 3; ++step) {
        Rational nx = x + (-x) * dt;
        Rational ny = y + x * dt;
        x = nx;
        y = ny;
    }
    CHECK(x == Rational(esmck::Int(1), esmck::Int(8)));
    CHECK(y == Rational(esmck::Int(7), esmck::Int(8)));

    solve::Witness w;
    w.assignment = {{"d", Rational(esmck::Int(1), esmck::Int(2))}};
    w.choices = {3};
    symexec::Bounds b;
    b.intInputs = {{"S", 4}};
    solve::Trace tr = solve::replay(q, w, b);
    CHECK(tr.finalStore.at("x") == x);
    CHECK(tr.finalStore.at("y") == y);
}

TEST_CASE("property: lowered Euler loop keeps 0 < zCr' <= zCr for zCr' = -zCr") {
    testutil::Rng rng(23);
    Program q = lowerEvolve(parseProgram(
        "input int S;\ninput real d assume(0 < d && d < 1);\nvar z;\nvar z0;\n"
        "main { havoc z0; assume(z0 > 0); z = z0; evolve { z' = -z; } dt d steps S;\n"
        "  assert(0 < z) : \"pos\"; assert(z <= z0) : \"mono\"; }"));
    for (int i = 0; i < 200; ++i) {
        long long m = rng.intIn(0, 12);
        Rational dt = rng.openUnit(20);
        Rational z0 = rng.positive(100, 20);
        solve::Witness w;
        w.assignment = {{"d", dt}, {"z0!0", z0}};
        w.havocOrder = {"z0!0"};
        w.choices = {m};
        symexec::Bounds b;
        b.intInputs = {{"S", m + 1}};
        solve::Trace tr = solve::replay(q, w, b);
        REQUIRE(tr.asserts.size() == 2);
        CHECK(tr.asserts[0].holds);
        CHECK(tr.asserts[1].holds);
        // Exact closed form: z = z0 * (1 - dt)^m.
        CHECK(tr.finalStore.at("z") == z0 * (Rational(1) - dt).pow(static_cast<unsigned>(m)));
    }
}

TEST_CASE("evalExpr through a parsed program fragment") {
    Program p = parseProgram("var s;\nmain { s = 0.5; }");
    const Stmt& assign = p.mainBlock[0];
    CHECK(evalExpr(assign->expr, {}).asRat("s") == Rational(esmck::Int(1), esmck::Int(2)));
}
