#include <doctest.h>

#include <cmath>
#include <random>

#include "nearcrit/resolvent.hpp"
#include "oracles.hpp"

using namespace nearcrit;

namespace {

double max_abs_error_vs_oracle(const ScaledKernel& sk, const ResolventTable& rt) {
    double err = 0.0;
    for (int i = 0; i <= rt.n; ++i) {
        double u = rt.grid[i];
        double exact = sk.base.family == KernelFamily::Exponential
                           ? oracles::psi_exponential(sk.base.beta, sk.a_T, sk.T, u)
                           : oracles::psi_gamma2(sk.base.beta, sk.a_T, sk.T, u);
        err = std::max(err, std::abs(rt.psi_values[i] - exact));
    }
    return err;
}

}  // namespace

TEST_CASE("numeric resolvent matches the closed forms") {
    for (auto base : {make_exponential_kernel(1.0), make_gamma2_kernel(1.0)}) {
        for (auto reg : {Regime::Subcritical, Regime::Critical, Regime::Supercritical}) {
            auto sk = scale_kernel(base, reg, 100.0);
            auto rt = solve_resolvent(sk, 1024);
            CHECK(max_abs_error_vs_oracle(sk, rt) < 1e-7);
        }
    }
}

TEST_CASE("resolvent value at zero") {
    auto sk = scale_kernel(make_exponential_kernel(1.0), Regime::Subcritical, 100.0);
    auto rt = solve_resolvent(sk, 512);
    CHECK(rt.psi_values[0] == doctest::Approx(0.99).epsilon(1e-10));
    CHECK_THROWS_AS(solve_resolvent(sk, 128), InvalidParameter);  // n too small
}

TEST_CASE("resolvent is nonnegative and d = psi - rho exactly") {
    auto sk = scale_kernel(make_gamma2_kernel(2.0), Regime::Supercritical, 64.0);
    auto rt = solve_resolvent(sk, 512);
    for (int i = 0; i <= rt.n; ++i) {
        CHECK(rt.psi_values[i] >= 0.0);
        CHECK(rt.d_values[i] == rt.psi_values[i] - rt.rho_values[i]);
    }
}

TEST_CASE("L2 distance matches the closed form for the exponential kernel") {
    for (double T : {100.0, 400.0}) {
        auto sk = scale_kernel(make_exponential_kernel(1.0), Regime::Subcritical, T);
        auto rt = solve_resolvent(sk, 2048);
        CHECK(l2_distance_on_unit(rt) ==
              doctest::Approx(oracles::l2_exponential_sub(1.0, T)).epsilon(1e-6));
        auto skp = scale_kernel(make_exponential_kernel(1.0), Regime::Supercritical, T);
        auto rtp = solve_resolvent(skp, 2048);
        CHECK(l2_distance_on_unit(rtp) ==
              doctest::Approx(oracles::l2_exponential_super(1.0, T)).epsilon(1e-6));
    }
}

TEST_CASE("identical psi and rho give zero distance") {
    ResolventTable rt;
    rt.T = 10.0;
    rt.regime = Regime::Critical;
    rt.n = 4;
    rt.grid = {0.0, 0.25, 0.5, 0.75, 1.0};
    rt.psi_values = {1, 1, 1, 1, 1};
    rt.rho_values = rt.psi_values;
    rt.d_values.assign(5, 0.0);
    CHECK(l2_distance_on_unit(rt) == 0.0);
}

TEST_CASE("L2 rate in T for the gamma2 kernel") {
    // quick version of the rate check; the acceptance suite runs the full ladder
    std::vector<double> Ts = {64, 128, 256, 512, 1024};
    for (auto reg : {Regime::Subcritical, Regime::Critical, Regime::Supercritical}) {
        std::vector<double> dist;
        for (double T : Ts) {
            auto rt = solve_resolvent(scale_kernel(make_gamma2_kernel(1.0), reg, T), 1024);
            dist.push_back(l2_distance_on_unit(rt));
        }
        double slope = std::log(dist.back() / dist.front()) / std::log(Ts.back() / Ts.front());
        CHECK(slope <= -0.45);
    }
}

TEST_CASE("uniform sup bound across T") {
    for (auto base : {make_exponential_kernel(1.0), make_gamma2_kernel(1.0)}) {
        for (auto reg : {Regime::Subcritical, Regime::Critical, Regime::Supercritical}) {
            double lo = 1e300, hi = 0.0;
            for (double T = 64.0; T <= 4096.0; T *= 4.0) {
                auto rt = solve_resolvent(scale_kernel(base, reg, T), 512);
                double s = rt.sup_psi();
                lo = std::min(lo, s);
                hi = std::max(hi, s);
            }
            CHECK(hi / lo < 1.05);  // bounded by one constant across the range
            CHECK(hi < 3.0 * base.beta);
        }
    }
}

TEST_CASE("increment integrals of psi are Lipschitz in t - s") {
    // discrete \int_0^s |psi(t-u) - psi(s-u)|^2 du <= C (t-s), one C across T:
    // fit on the small T, validate on the larger ones
    auto pair_ratio = [](const ResolventTable& rt, double s, double t) {
        int n = rt.n;
        int is = int(s * n), it = int(t * n);
        double acc = 0.0;
        for (int u = 0; u < is; ++u) {
            double diff = rt.psi_values[it - u] - rt.psi_values[is - u];
            acc += diff * diff / n;
        }
        return acc / (double(it - is) / n);
    };
    std::mt19937 gen(12345);
    std::uniform_real_distribution<double> unif(0.05, 0.95);
    struct Cfg {
        KernelSpec base;
        Regime regime;
    };
    for (const Cfg& cfg : {Cfg{make_exponential_kernel(1.0), Regime::Subcritical},
                           Cfg{make_gamma2_kernel(1.0), Regime::Critical},
                           Cfg{make_gamma2_kernel(1.0), Regime::Supercritical}}) {
        double fitted_C = 0.0;
        bool first = true;
        for (double T : {64.0, 512.0, 4096.0}) {
            auto rt = solve_resolvent(scale_kernel(cfg.base, cfg.regime, T), 1024);
            double worst = 0.0;
            for (int rep = 0; rep < 40; ++rep) {
                double a = unif(gen), b = unif(gen);
                double s = std::min(a, b), t = std::max(a, b);
                if (t - s < 1e-3) continue;
                worst = std::max(worst, pair_ratio(rt, s, t));
            }
            if (first) {
                fitted_C = worst;
                first = false;
            } else {
                CHECK(worst <= 1.25 * fitted_C + 1e-12);
            }
        }
    }
}

TEST_CASE("limit densities") {
    auto sub = limit_density(Regime::Subcritical, 1.0);
    CHECK(sub(0.0) == doctest::Approx(1.0));
    CHECK(sub(1.0) == doctest::Approx(std::exp(-1.0)));
    auto crit = limit_density(Regime::Critical, 2.0);
    CHECK(crit(0.0) == doctest::Approx(0.5));
    CHECK(crit(0.7) == doctest::Approx(0.5));
    auto sup = limit_density(Regime::Supercritical, 1.0);
    CHECK(sup(1.0) == doctest::Approx(std::exp(1.0)));
    for (auto reg : {Regime::Subcritical, Regime::Critical, Regime::Supercritical})
        CHECK(limit_density(reg, 2.5)(0.0) == doctest::Approx(1.0 / 2.5));
    CHECK_THROWS_AS(limit_density(Regime::Critical, 0.0), InvalidParameter);
}

TEST_CASE("malthusian parameter, exponential kernel") {
    auto sk = scale_kernel(make_exponential_kernel(1.0), Regime::Supercritical, 100.0);
    auto res = malthusian_parameter(sk);
    CHECK(std::abs(res.b_T - oracles::malthusian_exponential(1.0, sk.a_T)) < 1e-10);
    CHECK(res.b_T == doctest::Approx(0.0201).epsilon(1e-9));
    CHECK(std::abs(res.tilted_l1 - 1.0 / sk.a_T) < 1e-12);

    auto sk2 = scale_kernel(make_exponential_kernel(1.0), Regime::Supercritical, 1e4);
    auto res2 = malthusian_parameter(sk2);
    CHECK(res2.b_T * 1e4 == doctest::Approx(2.0001).epsilon(1e-6));
    CHECK(std::abs(res2.m_tilde - 1.0) < 0.01);  // m_tilde -> m
    CHECK(std::abs(res2.m_tilde - oracles::m_tilde_exponential(1.0, sk2.a_T, res2.b_T)) < 1e-10);
}

TEST_CASE("malthusian parameter, gamma2 kernel") {
    auto sk = scale_kernel(make_gamma2_kernel(1.0), Regime::Supercritical, 1e4);
    auto res = malthusian_parameter(sk);
    CHECK(std::abs(res.b_T - oracles::malthusian_gamma2(1.0, sk.a_T)) < 1e-12);
    // T b_T -> 2/m with m = 2/beta
    CHECK(std::abs(res.b_T * 1e4 - 1.0) < 1e-3);
    CHECK(std::abs(res.m_tilde - 2.0) < 0.01);
}

TEST_CASE("malthusian parameter rejects other regimes") {
    auto sk = scale_kernel(make_exponential_kernel(1.0), Regime::Subcritical, 100.0);
    CHECK_THROWS_AS(malthusian_parameter(sk), InvalidParameter);
}

TEST_CASE("fourier residual, subcritical exponential") {
    auto sk = scale_kernel(make_exponential_kernel(1.0), Regime::Subcritical, 200.0);
    std::vector<double> zs;
    for (int i = 0; i <= 40; ++i) zs.push_back(i * 0.05 * 200.0 / 40.0);
    auto diag = fourier_residual(sk, zs);
    CHECK(diag.residual[0] < 1e-9);         // residual vanishes at z = 0
    CHECK(diag.bound[0] == doctest::Approx(4.0 / 200.0));
    for (std::size_t i = 0; i < zs.size(); ++i) {
        if (!diag.flagged[i]) CHECK(diag.residual[i] <= diag.bound[i]);
    }
}

TEST_CASE("fourier residual, subcritical gamma2 stays under the envelope") {
    auto sk = scale_kernel(make_gamma2_kernel(1.0), Regime::Subcritical, 200.0);
    std::vector<double> zs;
    double alpha = 0.1 * sk.base.m / sk.base.m2;
    for (int i = 0; i <= 30; ++i) zs.push_back(i * alpha * 200.0 / 30.0);
    auto diag = fourier_residual(sk, zs);
    for (std::size_t i = 0; i < zs.size(); ++i)
        if (!diag.flagged[i]) CHECK(diag.residual[i] <= diag.bound[i]);
}

TEST_CASE("fourier residual, supercritical scales like 1/T") {
    // C fitted on the first half of the grid at T = 200 must cover the
    // second half, and the same C transported to T = 800 must still cover
    std::vector<double> zs;
    for (int i = 0; i <= 20; ++i) zs.push_back(i * 0.3);
    auto skA = scale_kernel(make_exponential_kernel(1.0), Regime::Supercritical, 200.0);
    auto dA = fourier_residual(skA, zs);
    for (std::size_t i = zs.size() / 2; i < zs.size(); ++i)
        if (!dA.flagged[i]) CHECK(dA.residual[i] <= 1.25 * dA.bound[i]);
    auto skB = scale_kernel(make_exponential_kernel(1.0), Regime::Supercritical, 800.0);
    auto dB = fourier_residual(skB, zs);
    for (std::size_t i = 0; i < zs.size(); ++i)
        if (!dB.flagged[i]) CHECK(dB.residual[i] <= 1.25 * dA.fitted_C / 800.0);
}

TEST_CASE("fourier residual flags out-of-range frequencies instead of failing") {
    auto sk = scale_kernel(make_exponential_kernel(1.0), Regime::Subcritical, 100.0);
    auto diag = fourier_residual(sk, {0.0, 1.0, 1e4});
    CHECK(diag.flagged[0] == 0);
    CHECK(diag.flagged[2] == 1);
}

TEST_CASE("fourier residual is not defined in the critical regime") {
    auto sk = scale_kernel(make_exponential_kernel(1.0), Regime::Critical, 100.0);
    CHECK_THROWS_AS(fourier_residual(sk, {0.0, 1.0}), InvalidParameter);
}
