#include <doctest.h>

#include <cmath>

#include "nearcrit/kernels.hpp"

using namespace nearcrit;

TEST_CASE("exponential kernel has analytic moments") {
    auto k1 = make_exponential_kernel(1.0);
    CHECK(k1.l1_norm == 1.0);
    CHECK(k1.m == doctest::Approx(1.0));
    CHECK(k1.m2 == doctest::Approx(2.0));

    auto k2 = make_exponential_kernel(2.0);
    CHECK(k2.m == doctest::Approx(0.5));
    CHECK(k2.m2 == doctest::Approx(0.5));
}

TEST_CASE("gamma2 kernel has analytic moments and vanishes at zero") {
    auto k1 = make_gamma2_kernel(1.0);
    CHECK(k1.m == doctest::Approx(2.0));
    CHECK(k1.m2 == doctest::Approx(6.0));
    CHECK(k1.evaluate(0.0) == 0.0);
    CHECK(k1.derivative(0.0) == doctest::Approx(1.0));  // beta^2

    auto k2 = make_gamma2_kernel(2.0);
    CHECK(k2.m == doctest::Approx(1.0));
    CHECK(k2.derivative(0.0) == doctest::Approx(4.0));
}

TEST_CASE("invalid rate is rejected") {
    CHECK_THROWS_AS(make_exponential_kernel(0.0), InvalidParameter);
    CHECK_THROWS_AS(make_exponential_kernel(-1.0), InvalidParameter);
    CHECK_THROWS_AS(make_gamma2_kernel(0.0), InvalidParameter);
}

TEST_CASE("quadrature moments match analytic ones") {
    for (double beta : {0.5, 1.0, 2.0, 3.5}) {
        for (auto kern : {make_exponential_kernel(beta), make_gamma2_kernel(beta)}) {
            Moments mom = kernel_moments(kern);
            CHECK(std::abs(mom.l1 - kern.l1_norm) < 1e-8);
            CHECK(std::abs(mom.m - kern.m) < 1e-8);
            CHECK(std::abs(mom.m2 - kern.m2) < 1e-8);
        }
    }
}

TEST_CASE("zero kernel integrates to zero and is rejected by the l1 invariant") {
    KernelSpec zero;
    zero.family = KernelFamily::Custom;
    zero.evaluate = [](double) { return 0.0; };
    zero.derivative = [](double) { return 0.0; };
    Moments mom = kernel_moments(zero);
    CHECK(mom.l1 == 0.0);
    CHECK(mom.m == 0.0);
    CHECK(mom.m2 == 0.0);
    CHECK(mom.l1 != 1.0);
}

TEST_CASE("criticality factor per regime") {
    auto base = make_exponential_kernel(1.0);
    CHECK(scale_kernel(base, Regime::Subcritical, 100.0).a_T == doctest::Approx(0.99));
    CHECK(scale_kernel(base, Regime::Critical, 100.0).a_T == 1.0);
    CHECK(scale_kernel(base, Regime::Supercritical, 100.0).a_T == doctest::Approx(1.01));
    CHECK_THROWS_AS(scale_kernel(base, Regime::Critical, 1.5), OutOfRange);
}

TEST_CASE("scaling preserves the kernel shape") {
    auto base = make_gamma2_kernel(1.3);
    auto sk = scale_kernel(base, Regime::Supercritical, 37.0);
    for (double t : {0.1, 0.5, 1.0, 3.0, 10.0}) {
        double ratio = sk.evaluate_scaled(t) / base.evaluate(t);
        CHECK(ratio == doctest::Approx(sk.a_T).epsilon(1e-14));
    }
}

TEST_CASE("criticality factor approaches one monotonically") {
    double prev_sub = 0.0, prev_sup = 2.0;
    for (double T = 2.0; T <= 65536.0; T *= 2.0) {
        double a_sub = criticality_factor(Regime::Subcritical, T);
        double a_sup = criticality_factor(Regime::Supercritical, T);
        CHECK(a_sub > prev_sub);
        CHECK(a_sub < 1.0);
        CHECK(a_sup < prev_sup);
        CHECK(a_sup > 1.0);
        CHECK(criticality_factor(Regime::Critical, T) == 1.0);
        prev_sub = a_sub;
        prev_sup = a_sup;
    }
}

TEST_CASE("regime parsing round-trips") {
    CHECK(parse_regime("sub") == Regime::Subcritical);
    CHECK(parse_regime("-") == Regime::Subcritical);
    CHECK(parse_regime("critical") == Regime::Critical);
    CHECK(parse_regime("+") == Regime::Supercritical);
    CHECK_THROWS_AS(parse_regime("bogus"), InvalidParameter);
    CHECK(regime_symbol(Regime::Critical) == '0');
}
