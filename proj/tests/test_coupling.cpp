#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "nearcrit/coupling.hpp"
#include "nearcrit/parallel.hpp"
#include "oracles.hpp"

using namespace nearcrit;

TEST_CASE("field point count concentrates at T^2 theta") {
    StreamContext sc{42, 0, 0};
    auto field = sample_poisson_field(100.0, 4.0, 10, sc);
    double expected = 100.0 * 100.0 * 4.0;
    double sigma = std::sqrt(expected);
    CHECK(std::abs(double(field.points.size()) - expected) < 5.0 * sigma);

    int64_t total = 0;
    for (auto c : field.cell_counts) total += c;
    CHECK(total == int64_t(field.points.size()));

    std::vector<double> counts(200);
    for (int rep = 0; rep < 200; ++rep) {
        StreamContext s2{42, uint64_t(rep), 0};
        counts[rep] = double(sample_poisson_field(50.0, 2.0, 8, s2).points.size());
    }
    auto mv = mean_and_se(counts);
    CHECK(std::abs(mv.mean - 5000.0) < 3.0 * mv.se + 1e-9);
}

TEST_CASE("empty rectangle gives no points") {
    StreamContext sc{1, 0, 0};
    auto field = sample_poisson_field(10.0, 0.0, 4, sc);
    CHECK(field.points.empty());
}

TEST_CASE("memory cap raises a capacity error") {
    StreamContext sc{1, 0, 0};
    CHECK_THROWS_AS(sample_poisson_field(100.0, 4.0, 10, sc, 1000), CapacityError);
}

TEST_CASE("compensated increments") {
    PoissonFieldSample field;
    field.T = 10.0;
    field.grid = make_cell_grid(5, 1.0);
    field.cell_counts.assign(25, 0);
    field.cell_counts[0] = 4;  // exactly T^2/k^2
    CHECK(compensated_cell_increment(field, 0, 0) == doctest::Approx(0.0));
    CHECK(compensated_cell_increment(field, 0, 1) == doctest::Approx(-10.0 / 25.0));
    CHECK_THROWS_AS(compensated_cell_increment(field, 5, 0), OutOfRange);

    // replication variance of the increment is 1/k^2
    const double T = 40.0;
    const int k = 8;
    const double lambda = T * T / (k * k);
    std::vector<double> vals(10000);
    for (std::size_t i = 0; i < vals.size(); ++i) {
        auto eng = make_stream(7, StreamKind::PairDraw, i);
        double delta = (double(draw_poisson(eng, lambda)) - lambda) / T;
        vals[i] = delta * delta;
    }
    auto mv = mean_and_se(vals);
    CHECK(std::abs(mv.mean - 1.0 / (k * k)) < 3.0 * mv.se);
}

TEST_CASE("gaussianization hits the median exactly") {
    const double T = 4.0;
    const int k = 2;  // lattice mean 4
    // pick u so that P(X < 4) + u P(X = 4) = 1/2
    double below = 0.0, pmf = std::exp(-4.0);
    double term = pmf;
    for (int n = 1; n <= 4; ++n) {
        below += term;
        term *= 4.0 / n;
    }
    pmf = term;  // P(X = 4)
    double u = (0.5 - below) / pmf;
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
    double delta = 0.0;  // n = 4 = lattice mean
    CHECK(std::abs(comonotone_gaussianize(delta, u, k, T)) < 1e-13);
}

TEST_CASE("gaussianization is monotone in delta and u") {
    const double T = 30.0;
    const int k = 5;
    const double lambda = T * T / (k * k);
    double prev = -1e300;
    for (int n = 0; n <= 80; n += 4) {
        double delta = (n - lambda) / T;
        double xi = comonotone_gaussianize(delta, 0.37, k, T);
        CHECK(xi > prev);
        prev = xi;
    }
    double lo = comonotone_gaussianize((36.0 - lambda) / T, 0.1, k, T);
    double hi = comonotone_gaussianize((36.0 - lambda) / T, 0.9, k, T);
    CHECK(lo < hi);
}

TEST_CASE("gaussianization validates its inputs") {
    CHECK_THROWS_AS(comonotone_gaussianize(0.1234, 0.5, 5, 30.0), InvalidParameter);
    double ok_delta = (36.0 - 36.0) / 30.0;
    CHECK_THROWS_AS(comonotone_gaussianize(ok_delta, 0.0, 5, 30.0), InvalidParameter);
    CHECK_THROWS_AS(comonotone_gaussianize(ok_delta, 1.0, 5, 30.0), InvalidParameter);
}

TEST_CASE("gaussianized increments pass a KS test against N(0,1/k^2)") {
    const double T = 100.0;
    const int k = 40;
    const double lambda = T * T / (k * k);
    const int n = 100000;
    std::vector<double> xs(n);
    parallel_for(n, 4, [&](std::size_t i) {
        auto eng = make_stream(11, StreamKind::PairDraw, i);
        double delta = (double(draw_poisson(eng, lambda)) - lambda) / T;
        xs[i] = comonotone_gaussianize(delta, eng.u01(), k, T);
    });
    std::sort(xs.begin(), xs.end());
    double D = 0.0;
    for (int i = 0; i < n; ++i) {
        double F = 0.5 * std::erfc(-xs[i] * k / std::sqrt(2.0));
        D = std::max(D, std::abs(F - double(i + 1) / n));
        D = std::max(D, std::abs(F - double(i) / n));
    }
    CHECK(D < 1.63 / std::sqrt(double(n)));  // 1% critical value
}

TEST_CASE("pinned sheet vanishes at the corner and on the axes") {
    const int k = 4;
    std::vector<std::pair<double, double>> q = {
        {0.25, 0.25}, {0.0, 0.1}, {0.1, 0.0}, {0.125, 0.125}};
    auto eng = make_stream(3, StreamKind::CellBeta, 0);
    auto vals = sample_pinned_sheet(k, q, eng);
    CHECK(vals[0] == 0.0);  // corner (1/k, 1/k)
    CHECK(vals[1] == 0.0);
    CHECK(vals[2] == 0.0);
    CHECK(vals[3] != 0.0);
}

TEST_CASE("pinned sheet covariance at the cell center") {
    const int k = 4;
    const double x = 1.0 / (2 * k);
    const int reps = 10000;
    std::vector<double> sq(reps);
    for (int r = 0; r < reps; ++r) {
        std::pair<double, double> q{x, x};
        auto eng = make_stream(5, StreamKind::CellBeta, r);
        sq[r] = sample_pinned_sheet(k, std::span(&q, 1), eng)[0];
        sq[r] *= sq[r];
    }
    auto mv = mean_and_se(sq);
    CHECK(std::abs(mv.mean - 3.0 / (16.0 * k * k)) < 3.0 * mv.se);
}

TEST_CASE("pinned sheet cross covariance") {
    const int k = 5;
    const int reps = 20000;
    std::pair<double, double> a{0.05, 0.15}, b{0.12, 0.07};
    double expect = (0.05) * (0.07) - double(k) * k * 0.05 * 0.15 * 0.12 * 0.07;
    std::vector<double> prod(reps);
    for (int r = 0; r < reps; ++r) {
        std::vector<std::pair<double, double>> q{a, b};
        auto eng = make_stream(6, StreamKind::CellBeta, r);
        auto v = sample_pinned_sheet(k, q, eng);
        prod[r] = v[0] * v[1];
    }
    auto mv = mean_and_se(prod);
    CHECK(std::abs(mv.mean - expect) < 3.0 * mv.se);
}

TEST_CASE("duplicate queries are deduplicated silently") {
    const int k = 3;
    std::vector<std::pair<double, double>> q = {{0.1, 0.2}, {0.1, 0.2}};
    auto eng = make_stream(8, StreamKind::CellBeta, 0);
    auto v = sample_pinned_sheet(k, q, eng);
    CHECK(v[0] == v[1]);
}

namespace {

CoupledSheet sheet_from_field(double T, int k, double theta, uint64_t seed, uint64_t rep) {
    StreamContext sc{seed, rep, 0};
    auto field = sample_poisson_field(T, theta, k, sc);
    return build_coupled_sheet(field, sc);
}

}  // namespace

TEST_CASE("full-cell increments of the assembled sheet equal xi") {
    auto sh = sheet_from_field(64.0, 8, 1.0, 21, 0);
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < sh.grid.rows; ++j)
            CHECK(std::abs(sh.cell_increment(i, j) - sh.xi_at(i, j)) < 1e-12);
}

TEST_CASE("zeroed increments assemble to the zero sheet at nodes") {
    auto sh = sheet_from_field(16.0, 4, 1.0, 2, 0);
    std::fill(sh.xi.begin(), sh.xi.end(), 0.0);
    std::fill(sh.node.begin(), sh.node.end(), 0.0);
    std::vector<std::pair<double, double>> nodes = {{0.25, 0.5}, {1.0, 1.0}, {0.75, 0.25}};
    auto v = sh.values_at(nodes);
    for (double x : v) CHECK(x == 0.0);
}

TEST_CASE("single-cell world: W(1,1) is xi") {
    auto sh = sheet_from_field(4.0, 1, 1.0, 9, 0);
    std::vector<std::pair<double, double>> q = {{1.0, 1.0}};
    CHECK(sh.values_at(q)[0] == doctest::Approx(sh.xi_at(0, 0)).epsilon(1e-12));
}

TEST_CASE("strip increments agree with two-point assembly") {
    auto sh = sheet_from_field(16.0, 4, 2.0, 31, 5);
    for (int i : {0, 1, 3}) {
        for (double theta : {0.13, 0.5, 0.77, 1.31}) {
            std::vector<std::pair<double, double>> q = {{double(i + 1) / 4 , theta},
                                                        {double(i) / 4, theta}};
            auto v = sh.values_at(q);
            CHECK(sh.strip_increment(i, theta) == doctest::Approx(v[0] - v[1]).epsilon(1e-10));
        }
    }
}

TEST_CASE("assembled sheet has the product covariance") {
    const int reps = 4000;
    std::vector<std::pair<double, double>> pts = {{0.3, 0.7}, {0.6, 0.4}, {0.5, 0.5}};
    std::vector<double> p01(reps), p22(reps);
    parallel_for(reps, 4, [&](std::size_t r) {
        auto sh = sheet_from_field(64.0, 8, 1.0, 77, r);
        auto v = sh.values_at(pts);
        p01[r] = v[0] * v[1];
        p22[r] = v[2] * v[2];
    });
    auto mv01 = mean_and_se(p01);
    auto mv22 = mean_and_se(p22);
    CHECK(std::abs(mv01.mean - 0.3 * 0.4) < 3.0 * mv01.se);
    CHECK(std::abs(mv22.mean - 0.25) < 3.0 * mv22.se);
}

TEST_CASE("sheet law does not depend on (T,k)") {
    const int reps = 4000;
    std::vector<std::pair<double, double>> pts = {{0.4, 0.9}, {0.8, 0.3}};
    for (auto [T, k] : {std::pair<double, int>{36.0, 6}, {100.0, 12}}) {
        std::vector<double> prod(reps);
        parallel_for(reps, 4, [&](std::size_t r) {
            auto sh = sheet_from_field(T, k, 1.0, 99, r);
            auto v = sh.values_at(pts);
            prod[r] = v[0] * v[1];
        });
        auto mv = mean_and_se(prod);
        CHECK(std::abs(mv.mean - 0.4 * 0.3) < 3.0 * mv.se);
    }
}

TEST_CASE("marginal laws: moments of xi and of the compensated increment") {
    const double T = 60.0;
    const int k = 12;
    const double lambda = T * T / (double(k) * k);
    const int n = 40000;
    std::vector<double> xi(n), xi2(n), xi4(n), dl(n), dl2(n), dl4(n);
    parallel_for(n, 4, [&](std::size_t i) {
        auto eng = make_stream(140, StreamKind::PairDraw, i);
        double delta = (double(draw_poisson(eng, lambda)) - lambda) / T;
        double x = comonotone_gaussianize(delta, eng.u01(), k, T);
        xi[i] = x;
        xi2[i] = x * x;
        xi4[i] = x * x * x * x;
        dl[i] = delta;
        dl2[i] = delta * delta;
        dl4[i] = delta * delta * delta * delta;
    });
    const double v = 1.0 / (double(k) * k);  // common variance
    auto m1x = mean_and_se(xi);
    auto m2x = mean_and_se(xi2);
    auto m4x = mean_and_se(xi4);
    CHECK(std::abs(m1x.mean) < 3.0 * m1x.se);
    CHECK(std::abs(m2x.mean - v) < 3.0 * m2x.se);
    CHECK(std::abs(m4x.mean - 3.0 * v * v) < 3.0 * m4x.se);  // Gaussian kurtosis
    auto m1d = mean_and_se(dl);
    auto m2d = mean_and_se(dl2);
    auto m4d = mean_and_se(dl4);
    CHECK(std::abs(m1d.mean) < 3.0 * m1d.se);
    CHECK(std::abs(m2d.mean - v) < 3.0 * m2d.se);
    // centered Poisson fourth moment: (lambda + 3 lambda^2) / T^4
    double m4_expect = (lambda + 3.0 * lambda * lambda) / (T * T * T * T);
    CHECK(std::abs(m4d.mean - m4_expect) < 3.0 * m4d.se);
}

TEST_CASE("comonotonicity: sorting deltas sorts the gaussianized values") {
    const double T = 50.0;
    const int k = 10;
    const double lambda = T * T / (k * k);
    const double u = 0.61;
    std::vector<double> deltas, xis;
    for (int n = 0; n < 60; n += 3) deltas.push_back((n - lambda) / T);
    for (double d : deltas) xis.push_back(comonotone_gaussianize(d, u, k, T));
    CHECK(std::is_sorted(xis.begin(), xis.end()));
}

TEST_CASE("yamada function satisfies its four inequalities") {
    for (double T : {50.0, 400.0}) {
        const double m = 1.0;
        const double eps = 10.0 / std::log(T);
        const double eta = m * m / 10.0 * std::log(T);
        auto y = build_yamada(eps, eta, m);
        CHECK(y.evaluate(0.0) <= 0.0);
        CHECK(y.evaluate(0.0) >= -eps);
        for (int i = 0; i <= 10000; ++i) {
            double x = -5.0 + i * 0.001;
            double ax = std::abs(x);
            CHECK(y.evaluate(x) <= ax + 1e-12);
            CHECK(y.evaluate(x) >= ax - eps - 1e-12);
            CHECK(std::abs(y.first(x)) <= 1.0 + 1e-12);
            if (x != 0.0) {
                CHECK(y.second(x) <= 2.0 * m * m / (ax * eta) * (1.0 + 1e-12));
                CHECK(y.second(x) <=
                      2.0 * m * m * std::exp(eta / (m * m)) / (eps * eta) * (1.0 + 1e-12));
            }
        }
    }
}

TEST_CASE("yamada rejects an empty support") {
    CHECK_THROWS_AS(build_yamada(0.0, 1.0, 1.0), InvalidParameter);
    CHECK_THROWS_AS(build_yamada(1.0, 0.0, 1.0), InvalidParameter);
    CHECK_THROWS_AS(build_yamada(1.0, 1e6, 1.0), InvalidParameter);  // lower underflows
}

TEST_CASE("default cell count follows the four-fifths rule") {
    CHECK(default_cell_count(100.0) == 40);
    CHECK(default_cell_count(50.0) == 23);
    CHECK(default_cell_count(400.0) == 121);
}
