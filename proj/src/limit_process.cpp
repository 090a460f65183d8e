#include "nearcrit/limit_process.hpp"

#include <cmath>

namespace nearcrit {

double drift_sign(Regime regime) {
    switch (regime) {
        case Regime::Subcritical: return -1.0;
        case Regime::Critical: return 0.0;
        case Regime::Supercritical: return 1.0;
    }
    return 0.0;
}

LimitPath simulate_limit_coupled(Regime regime, double mu, double m, const CoupledSheet& sheet) {
    if (!(mu >= 0.0) || !(m > 0.0)) throw InvalidParameter("simulate_limit_coupled: bad mu or m");
    const int k = sheet.grid.k;
    const double h = 1.0 / k;
    const double c = drift_sign(regime);
    LimitPath lp;
    lp.regime = regime;
    lp.mu = mu;
    lp.m = m;
    lp.n = k;
    lp.driving = "coupled-sheet";
    lp.X.assign(k + 1, 0.0);
    lp.noise.assign(k, 0.0);
    double x = 0.0;
    for (int i = 0; i < k; ++i) {
        // dB over this step: the sheet mass under the current level, N(0, x/k)
        double dW = x > 0.0 ? sheet.strip_increment(i, x) : 0.0;
        double dB = x > 0.0 ? dW / std::sqrt(x) : 0.0;
        lp.noise[i] = dW;
        x = x + (mu + c * x) * h / m + std::sqrt(std::max(x, 0.0)) * dB / m;
        x = std::max(x, 0.0);
        lp.X[i + 1] = x;
    }
    return lp;
}

LimitPath simulate_limit_coupled(Regime regime, double mu, double m,
                                 const PoissonFieldSample& field, const StreamContext& sc) {
    if (!(mu >= 0.0) || !(m > 0.0)) throw InvalidParameter("simulate_limit_coupled: bad mu or m");
    const int k = field.grid.k;
    const int rows = field.grid.rows;
    const double T = field.T;
    const double h = 1.0 / k;
    const double c = drift_sign(regime);
    LimitPath lp;
    lp.regime = regime;
    lp.mu = mu;
    lp.m = m;
    lp.n = k;
    lp.driving = "coupled-sheet";
    lp.X.assign(k + 1, 0.0);
    lp.noise.assign(k, 0.0);

    std::vector<std::vector<double>> pref(k);  // xi prefix sums per column
    auto xi_of = [&](int i, int j) -> double {
        auto& p = pref[i];
        if (p.empty()) p.push_back(0.0);
        while (int(p.size()) <= j + 1) {
            int jj = int(p.size()) - 1;
            if (jj >= rows) throw CapacityError("coupled limit: row beyond the sheet extent");
            double delta = double(field.count(i, jj)) / T - T / (double(k) * k);
            auto ue = make_stream(sc.seed, StreamKind::CellUniform, sc.rep, sc.attempt, i, jj);
            p.push_back(p.back() + comonotone_gaussianize(delta, ue.u01(), k, T));
        }
        return p[j + 1] - p[j];
    };

    double x = 0.0;
    for (int i = 0; i < k; ++i) {
        double dW = 0.0;
        if (x > 0.0) {
            if (x > field.grid.theta_max + 1e-12)
                throw CapacityError("coupled limit: X beyond the sheet extent");
            int jstar = std::min(static_cast<int>(std::floor(x * k + 1e-12)), rows);
            double frac = x - double(jstar) / k;
            if (frac < 1e-12) frac = 0.0;
            if (jstar > 0) {
                xi_of(i, jstar - 1);
                dW = pref[i][jstar];
            }
            if (frac > 0.0) {
                if (jstar >= rows)
                    throw CapacityError("coupled limit: X beyond the sheet extent");
                std::pair<double, double> q{h, frac};
                auto be = make_stream(sc.seed, StreamKind::CellBeta, sc.rep, sc.attempt,
                                      uint64_t(i), uint64_t(jstar));
                dW += sample_pinned_sheet(k, std::span(&q, 1), be)[0] + k * frac * xi_of(i, jstar);
            }
        }
        lp.noise[i] = dW;
        x = x + (mu + c * x) * h / m + dW / m;
        x = std::max(x, 0.0);
        lp.X[i + 1] = x;
    }
    return lp;
}

LimitPath simulate_cir_reference(Regime regime, double mu, double m, uint64_t seed, uint64_t rep,
                                 int n) {
    if (!(mu >= 0.0) || !(m > 0.0)) throw InvalidParameter("simulate_cir_reference: bad mu or m");
    if (n < 1) throw InvalidParameter("simulate_cir_reference: n must be >= 1");
    const double h = 1.0 / n;
    const double c = drift_sign(regime);
    auto eng = make_stream(seed, StreamKind::CirReference, rep);
    std::normal_distribution<double> gauss(0.0, 1.0);
    LimitPath lp;
    lp.regime = regime;
    lp.mu = mu;
    lp.m = m;
    lp.n = n;
    lp.driving = "independent-bm";
    lp.X.assign(n + 1, 0.0);
    lp.noise.assign(n, 0.0);
    double x = 0.0;
    const double sqh = std::sqrt(h);
    for (int i = 0; i < n; ++i) {
        double dB = sqh * gauss(eng);
        lp.noise[i] = std::sqrt(std::max(x, 0.0)) * dB;
        x = x + (mu + c * x) * h / m + std::sqrt(std::max(x, 0.0)) * dB / m;
        x = std::max(x, 0.0);
        lp.X[i + 1] = x;
    }
    return lp;
}

}  // namespace nearcrit
