#include "esmck/rational.hpp"

#include <doctest.h>

#include "test_util.hpp"

using esmck::Int;
using esmck::Rational;

TEST_CASE("rational normalization") {
    CHECK(Rational(Int(2), Int(4)) == Rational(Int(1), Int(2)));
    CHECK(Rational(Int(-2), Int(-4)) == Rational(Int(1), Int(2)));
    CHECK(Rational(Int(2), Int(-4)) == Rational(Int(-1), Int(2)));
    CHECK(Rational(Int(0), Int(17)) == Rational(0));
    CHECK(Rational(Int(0), Int(17)).den() == 1);
    CHECK_THROWS_AS(Rational(Int(1), Int(0)), esmck::Error);
}

TEST_CASE("rational arithmetic is exact") {
    Rational half{Int(1), Int(2)};
    Rational third{Int(1), Int(3)};
    CHECK((half + third) == Rational(Int(5), Int(6)));
    CHECK((half - third) == Rational(Int(1), Int(6)));
    CHECK((half * third) == Rational(Int(1), Int(6)));
    CHECK((half / third) == Rational(Int(3), Int(2)));
    CHECK_THROWS_AS(half / Rational(0), esmck::Error);
    CHECK((-half).str() == "-1/2");
}

TEST_CASE("rational comparisons") {
    CHECK(Rational(Int(1), Int(3)) < Rational(Int(1), Int(2)));
    CHECK(Rational(Int(-1), Int(2)) < Rational(Int(1), Int(3)));
    CHECK(Rational(2) >= Rational(2));
    CHECK(Rational(Int(7), Int(3)) > Rational(2));
}

TEST_CASE("rational pow") {
    CHECK(Rational(Int(2), Int(3)).pow(3) == Rational(Int(8), Int(27)));
    CHECK(Rational(Int(-1), Int(2)).pow(2) == Rational(Int(1), Int(4)));
    CHECK(Rational(0).pow(0) == Rational(1));
    CHECK(Rational(5).pow(0) == Rational(1));
    // Large exponents stay exact.
    Rational r = Rational(Int(9), Int(10)).pow(20);
    CHECK(r.den() == Int("100000000000000000000"));
}

TEST_CASE("decimal parsing") {
    CHECK(Rational::fromDecimal("0.5") == Rational(Int(1), Int(2)));
    CHECK(Rational::fromDecimal("3600") == Rational(3600));
    CHECK(Rational::fromDecimal("0.125") == Rational(Int(1), Int(8)));
    CHECK(Rational::fromDecimal("12.") == Rational(12));
    CHECK_THROWS_AS(Rational::fromDecimal("1.2.3"), esmck::Error);
    CHECK_THROWS_AS(Rational::fromDecimal(""), esmck::Error);
}

TEST_CASE("string round trip") {
    for (const char* s : {"0", "-3", "5/6", "-1/2", "123456789123456789/8"})
        CHECK(Rational::fromString(s).str() == std::string(s));
}

TEST_CASE("snapToRational recovers simple fractions") {
    CHECK(esmck::snapToRational(0.5) == Rational(Int(1), Int(2)));
    CHECK(esmck::snapToRational(-0.5) == Rational(Int(-1), Int(2)));
    CHECK(esmck::snapToRational(1.0 / 3.0) == Rational(Int(1), Int(3)));
    CHECK(esmck::snapToRational(-100.0) == Rational(-100));
    CHECK(esmck::snapToRational(0.0) == Rational(0));
    // Denominator cap respected.
    Rational r = esmck::snapToRational(3.14159265358979, 1000);
    CHECK(r.den() <= 1000);
    CHECK(r == Rational(Int(355), Int(113)));
    CHECK_THROWS_AS(esmck::snapToRational(std::nan("")), esmck::Error);
}

TEST_CASE("property: field axioms on random rationals") {
    testutil::Rng rng(7);
    for (int i = 0; i < 2000; ++i) {
        Rational a = rng.rational(1000, 60);
        Rational b = rng.rational(1000, 60);
        Rational c = rng.rational(1000, 60);
        CHECK((a + b) + c == a + (b + c));
        CHECK(a * (b + c) == a * b + a * c);
        CHECK(a - b == -(b - a));
        if (!b.isZero()) CHECK((a / b) * b == a);
    }
}
