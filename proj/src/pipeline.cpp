#include "nearcrit/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "nearcrit/limit_process.hpp"
#include "nearcrit/resolvent.hpp"

namespace nearcrit {

namespace {

double one_minus_exp_over(double c) {
    // (1 - e^{-c}) / c, stable near 0
    if (std::abs(c) < 1e-8) return 1.0 - 0.5 * c;
    return -std::expm1(-c) / c;
}

// Streamed field + thinning sweep. Produces everything the estimators need
// without holding the field in memory: cell counts, Lambda-bar at column left
// endpoints, per-event marks, exact compensator at column ends.
struct SweepResult {
    bool capacity_hit = false;
    int k = 0;
    int rows = 0;
    double theta = 0.0;  // ceiling in Lambda units (snapped)
    std::vector<int32_t> counts;          // k x rows
    std::vector<int64_t> below_bar;       // per column: points with theta <= lambda_bar
    std::vector<double> lambda_bar;       // Lambda at column left endpoints (k entries)
    std::vector<double> col_Lambda_end;   // Lambda at column right endpoints
    std::vector<double> col_comp_end;     // compensator/T^2 = int_0^t Lambda ds at col ends
    std::vector<int64_t> col_events_end;  // H at column right endpoints
    struct EventMark {
        int col;
        double t_unit;       // t*/T
        double Lambda_pre;   // lambda(t*-)/T
        double Lambda_post;  // lambda(t*+)/T
        int64_t H_after;
        double comp;         // int_0^{t*} Lambda ds (unit-time scale)
    };
    std::vector<EventMark> events;
};

SweepResult sweep_field(const PipelineConfig& cfg, double theta0, uint64_t rep, int attempt) {
    const double T = cfg.sk.T;
    const int k = cfg.k;
    CellGrid grid = make_cell_grid(k, theta0);
    const double theta_phys = grid.theta_max * T;
    const double colw = T / k;

    SweepResult out;
    out.k = k;
    out.rows = grid.rows;
    out.theta = grid.theta_max;
    out.counts.assign(std::size_t(k) * grid.rows, 0);
    out.below_bar.assign(k, 0);
    out.lambda_bar.resize(k);
    out.col_Lambda_end.resize(k);
    out.col_comp_end.resize(k);
    out.col_events_end.resize(k);

    IntensityReplay st(cfg.sk, cfg.mu);
    int64_t H = 0;
    std::vector<std::pair<double, double>> col;
    for (int i = 0; i < k; ++i) {
        st.advance(i * colw);
        if (st.lambda() > theta_phys) {
            out.capacity_hit = true;
            return out;
        }
        out.lambda_bar[i] = st.lambda() / T;
        const double bar_phys = st.lambda();

        auto eng = make_stream(cfg.seed, StreamKind::FieldColumn, rep, attempt, i);
        int64_t cnt = draw_poisson(eng, colw * theta_phys);
        col.clear();
        col.reserve(cnt);
        for (int64_t p = 0; p < cnt; ++p) {
            double t = (i + eng.u01()) * colw;
            double th = eng.u01() * theta_phys;
            col.emplace_back(t, th);
        }
        std::sort(col.begin(), col.end());
        for (const auto& [t, th] : col) {
            int j = std::min<int>(static_cast<int>(th / theta_phys * grid.rows), grid.rows - 1);
            ++out.counts[std::size_t(i) * grid.rows + j];
            if (th <= bar_phys) ++out.below_bar[i];
            st.advance(t);
            double lam_pre = st.lambda();
            if (lam_pre > theta_phys) {
                out.capacity_hit = true;
                return out;
            }
            if (th <= lam_pre) {
                st.add_event();
                ++H;
                double lam_post = st.lambda();
                // peak_bound covers an interior rise between checks (gamma2)
                if (st.peak_bound() > theta_phys) {
                    out.capacity_hit = true;
                    return out;
                }
                out.events.push_back({i, t / T, lam_pre / T, lam_post / T, H,
                                      st.compensator() / (T * T)});
            }
        }
        st.advance((i + 1) * colw);
        if (st.lambda() > theta_phys) {
            out.capacity_hit = true;
            return out;
        }
        out.col_Lambda_end[i] = st.lambda() / T;
        out.col_comp_end[i] = st.compensator() / (T * T);
        out.col_events_end[i] = H;
    }
    return out;
}

}  // namespace

double integral_psi_unit(const ScaledKernel& sk) {
    const double T = sk.T;
    const double a = sk.a_T;
    const double beta = sk.base.beta;
    switch (sk.base.family) {
        case KernelFamily::Exponential: {
            double c = beta * (1.0 - a) * T;
            return a * beta * one_minus_exp_over(c);
        }
        case KernelFamily::Gamma2: {
            double sa = std::sqrt(a);
            double c1 = (1.0 - sa) * beta * T;
            double c2 = (1.0 + sa) * beta * T;
            return 0.5 * sa * beta * (one_minus_exp_over(c1) - one_minus_exp_over(c2));
        }
        case KernelFamily::Custom: {
            ResolventTable rt = solve_resolvent(sk, 1024);
            return rt.psi_cumulative().back();
        }
    }
    throw InvalidParameter("integral_psi_unit: bad family");
}

double auto_theta_ceiling(const ScaledKernel& sk, double mu) {
    double sup_mean = mu / sk.T + mu * integral_psi_unit(sk);
    double theta = 4.0 * (mu + sup_mean);
    return std::max(theta, 1.0);
}

WeightFunction make_weight(const std::string& name) {
    WeightFunction w;
    w.name = name;
    if (name == "one") {
        w.f = [](double) { return 1.0; };
    } else if (name == "cosine") {
        w.f = [](double s) { return std::cos(3.14159265358979323846 * s); };
    } else if (name == "expdecay") {
        w.f = [](double s) { return std::exp(-s); };
    } else if (name == "zero") {
        w.f = [](double) { return 0.0; };
    } else {
        throw InvalidParameter("unknown weight function: " + name);
    }
    return w;
}

CoupledRunResult run_coupled_replication(const PipelineConfig& cfg_in, uint64_t rep) {
    PipelineConfig cfg = cfg_in;
    if (cfg.k <= 0) cfg.k = default_cell_count(cfg.sk.T);
    double theta = cfg.theta0 > 0.0 ? cfg.theta0 : auto_theta_ceiling(cfg.sk, cfg.mu);

    CoupledRunResult res;
    for (int attempt = 0; attempt < cfg.max_attempts; ++attempt, theta *= 2.0) {
        res.attempts = attempt + 1;
        SweepResult sw = sweep_field(cfg, theta, rep, attempt);
        if (sw.capacity_hit) continue;

        const int k = sw.k;
        const double h = 1.0 / k;
        const double T = cfg.sk.T;
        const double m = cfg.sk.base.m;
        const double c = drift_sign(cfg.sk.regime);

        // X driven by the shared sheet, cells gaussianized on demand
        std::vector<double> X(k + 1, 0.0);
        std::vector<double> Wint(k + 1, 0.0);  // int 1_{theta<=X} dW up to t_i
        std::vector<double> intX(k + 1, 0.0);
        bool capacity = false;
        std::vector<std::vector<double>> pref(k);  // xi prefix sums per column
        auto xi_of = [&](int i, int j) -> double {
            auto& p = pref[i];
            if (p.empty()) p.push_back(0.0);
            while (int(p.size()) <= j + 1) {
                int jj = int(p.size()) - 1;
                if (jj >= sw.rows) throw CapacityError("sheet row beyond ceiling");
                double delta =
                    double(sw.counts[std::size_t(i) * sw.rows + jj]) / T - T / (double(k) * k);
                auto ue = make_stream(cfg.seed, StreamKind::CellUniform, rep, attempt, i, jj);
                p.push_back(p.back() + comonotone_gaussianize(delta, ue.u01(), k, T));
            }
            return p[j + 1] - p[j];
        };
        auto xi_prefix = [&](int i, int j) -> double {
            if (j <= 0) return 0.0;
            xi_of(i, j - 1);
            return pref[i][j];
        };
        try {
            double x = 0.0;
            for (int i = 0; i < k; ++i) {
                double dW = 0.0;
                if (x > 0.0) {
                    if (x >= sw.theta) throw CapacityError("X beyond ceiling");
                    int jstar = std::min(static_cast<int>(std::floor(x * k + 1e-12)),
                                         sw.rows);
                    double frac = x - double(jstar) / k;
                    if (frac < 1e-12) frac = 0.0;
                    dW = xi_prefix(i, jstar);
                    if (frac > 0.0) {
                        std::pair<double, double> q{h, frac};
                        auto be = make_stream(cfg.seed, StreamKind::CellBeta, rep, attempt,
                                              uint64_t(i), uint64_t(jstar));
                        double beta_v = sample_pinned_sheet(k, std::span(&q, 1), be)[0];
                        dW += beta_v + k * frac * xi_of(i, jstar);
                    }
                }
                Wint[i + 1] = Wint[i] + dW;
                double x_prev = x;
                x = x + (cfg.mu + c * x) * h / m + dW / m;
                x = std::max(x, 0.0);
                X[i + 1] = x;
                intX[i + 1] = intX[i] + 0.5 * h * (x_prev + x);
            }
        } catch (const CapacityError&) {
            capacity = true;
        }
        if (capacity) continue;

        // sup distances on the union of the k-grid and the event times
        const double T2 = T * T;
        double s_int = 0.0, s_ii = 0.0, s_cnt = 0.0, s_mart = 0.0, s_ms = 0.0;
        auto bump = [](double& acc, double v) {
            v = v * v;
            if (v > acc) acc = v;
        };
        bump(s_int, cfg.mu / T - 0.0);  // t = 0: Lambda_0 = mu/T, X_0 = 0
        for (int i = 0; i < k; ++i) {
            bump(s_int, sw.col_Lambda_end[i] - X[i + 1]);
            bump(s_ii, sw.col_comp_end[i] - intX[i + 1]);
            bump(s_cnt, double(sw.col_events_end[i]) / T2 - intX[i + 1]);
            bump(s_ms, double(sw.col_events_end[i]) / T2 - sw.col_comp_end[i]);
            double mart_end =
                (double(sw.col_events_end[i]) - sw.col_comp_end[i] * T2) / T;
            bump(s_mart, mart_end - Wint[i + 1]);
        }
        for (const auto& ev : sw.events) {
            double xv = X[ev.col];  // left node value of the step
            bump(s_int, ev.Lambda_pre - xv);
            bump(s_int, ev.Lambda_post - xv);
            double ix = intX[ev.col] + xv * (ev.t_unit - double(ev.col) * h);
            bump(s_cnt, double(ev.H_after) / T2 - ix);
            bump(s_ms, double(ev.H_after) / T2 - ev.comp);
            double mart = (double(ev.H_after) - ev.comp * T2) / T;
            bump(s_mart, mart - Wint[ev.col]);
        }
        res.ok = true;
        res.theta_used = sw.theta;
        res.sup_sq_intensity = s_int;
        res.sup_sq_integrated = s_ii;
        res.sup_sq_counting = s_cnt;
        res.sup_sq_martingale = s_mart;
        res.sup_sq_mart_scaled = s_ms;
        return res;
    }
    return res;  // incomplete after max_attempts
}

IntegralCouplingRun run_integral_coupling_replication(const PipelineConfig& cfg_in,
                                                      const WeightFunction& f, uint64_t rep) {
    PipelineConfig cfg = cfg_in;
    if (cfg.k <= 0) cfg.k = default_cell_count(cfg.sk.T);
    double theta = cfg.theta0 > 0.0 ? cfg.theta0 : auto_theta_ceiling(cfg.sk, cfg.mu);

    IntegralCouplingRun res;
    for (int attempt = 0; attempt < cfg.max_attempts; ++attempt, theta *= 2.0) {
        res.attempts = attempt + 1;
        SweepResult sw = sweep_field(cfg, theta, rep, attempt);
        if (sw.capacity_hit) continue;

        const int k = sw.k;
        const double h = 1.0 / k;
        const double T = cfg.sk.T;
        std::vector<std::vector<double>> pref(k);
        auto xi_of = [&](int i, int j) -> double {
            auto& p = pref[i];
            if (p.empty()) p.push_back(0.0);
            while (int(p.size()) <= j + 1) {
                int jj = int(p.size()) - 1;
                if (jj >= sw.rows) throw CapacityError("sheet row beyond ceiling");
                double delta =
                    double(sw.counts[std::size_t(i) * sw.rows + jj]) / T - T / (double(k) * k);
                auto ue = make_stream(cfg.seed, StreamKind::CellUniform, rep, attempt, i, jj);
                p.push_back(p.back() + comonotone_gaussianize(delta, ue.u01(), k, T));
            }
            return p[j + 1] - p[j];
        };
        bool capacity = false;
        double prefix = 0.0, sup_sq = 0.0;
        try {
            for (int i = 0; i < k; ++i) {
                double bar = sw.lambda_bar[i];
                double fi = f.f(double(i) * h);
                if (!std::isfinite(fi))
                    throw InvalidParameter("integral coupling: weight not finite on [0,1]");
                // Ntilde side: points under the bar minus the compensator
                double n_side = double(sw.below_bar[i]) / T - T * h * bar;
                // W side: sheet mass under the same level
                double w_side = 0.0;
                if (bar > 0.0) {
                    if (bar >= sw.theta) throw CapacityError("bar beyond ceiling");
                    int jstar = std::min(static_cast<int>(std::floor(bar * k + 1e-12)), sw.rows);
                    double frac = bar - double(jstar) / k;
                    if (frac < 1e-12) frac = 0.0;
                    if (jstar > 0) {
                        xi_of(i, jstar - 1);
                        w_side = pref[i][jstar];
                    }
                    if (frac > 0.0) {
                        std::pair<double, double> q{h, frac};
                        auto be = make_stream(cfg.seed, StreamKind::CellBeta, rep, attempt,
                                              uint64_t(i), uint64_t(jstar));
                        double beta_v = sample_pinned_sheet(k, std::span(&q, 1), be)[0];
                        w_side += beta_v + k * frac * xi_of(i, jstar);
                    }
                }
                prefix += fi * (n_side - w_side);
                double v = prefix * prefix;
                if (v > sup_sq) sup_sq = v;
            }
        } catch (const CapacityError&) {
            capacity = true;
        }
        if (capacity) continue;
        res.ok = true;
        res.sup_sq = sup_sq;
        res.final_sq = prefix * prefix;
        return res;
    }
    return res;
}

}  // namespace nearcrit
