#include "nearcrit/resolvent.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <complex>

namespace nearcrit {

namespace {

using GK = boost::math::quadrature::gauss_kronrod<double, 61>;

// ---- product-trapezoidal machinery -----------------------------------------
//
// Panel weights for the convolution with phi^T against a piecewise-linear
// unknown: for lag l >= 1,
//   P_l = (1/h) \int_0^h phi(l h - u) (h - u) du
//   Q_l = (1/h) \int_0^h phi(l h - u) u du
// evaluated with 8-point Gauss-Legendre (effectively exact for our kernels).

struct PanelWeights {
    std::vector<double> P, Q;
};

PanelWeights panel_weights(const std::function<double(double)>& phi, double a_T, double h,
                           int nlags) {
    using G8 = boost::math::quadrature::gauss<double, 8>;
    PanelWeights w;
    w.P.resize(nlags);
    w.Q.resize(nlags);
    const auto& absc = G8::abscissa();   // positive half nodes for even rule
    const auto& wts = G8::weights();
    for (int l = 1; l <= nlags; ++l) {
        double P = 0.0, Q = 0.0;
        for (std::size_t q = 0; q < absc.size(); ++q) {
            for (int sgn = -1; sgn <= 1; sgn += 2) {
                double x = 0.5 * h * (1.0 + sgn * absc[q]);   // u in [0,h]
                double f = a_T * phi(l * h - x) * (0.5 * h * wts[q]);
                P += f * (h - x) / h;
                Q += f * x / h;
            }
        }
        w.P[l - 1] = P;
        w.Q[l - 1] = Q;
    }
    return w;
}

struct TwoPhaseSolution {
    std::vector<double> coarse;  // Psi^T at i*T/n
    std::vector<double> fine;    // Psi^T at j*h/M on [0, t_split]
    double fine_step = 0.0;
};

// One two-phase solve: fine step h/M on [0, t_split], coarse step h = T/n
// after, convolution truncated past t_cut.
TwoPhaseSolution solve_two_phase(const std::function<double(double)>& phi, double a_T,
                                 double T, int n, int M, double t_split, double t_cut) {
    const double h = T / n;
    const int n_split = static_cast<int>(std::min<double>(std::ceil(t_split / h), n));
    const double hf = h / M;
    const int nf = n_split * M;
    const int lagf_max =
        static_cast<int>(std::min<double>(double(n) * M, std::ceil(t_cut / hf)));
    PanelWeights wf = panel_weights(phi, a_T, hf, lagf_max);

    std::vector<double> psif(nf + 1);
    psif[0] = a_T * phi(0.0);
    const double denf = 1.0 - wf.Q[0];
    if (denf <= 0.0) throw NumericFailure("resolvent step too coarse for the kernel");
    for (int i = 1; i <= nf; ++i) {
        double s = a_T * phi(i * hf);
        int jP = std::max(0, i - lagf_max);
        for (int j = jP; j < i; ++j) s += psif[j] * wf.P[i - 1 - j];
        int jQ = std::max(1, i - lagf_max + 1);
        for (int j = jQ; j < i; ++j) s += psif[j] * wf.Q[i - j];  // Q_{i-j+1}
        psif[i] = s / denf;
    }

    TwoPhaseSolution sol;
    sol.fine = psif;
    sol.fine_step = hf;
    std::vector<double>& psi = sol.coarse;
    psi.resize(n + 1);
    for (int i = 0; i <= n_split; ++i) psi[i] = psif[i * M];
    if (n_split == n) return sol;

    const int lagc_max = static_cast<int>(std::min<double>(n, std::ceil(t_cut / h)));
    PanelWeights wc = panel_weights(phi, a_T, h, lagc_max);
    const double denc = 1.0 - wc.Q[0];
    if (denc <= 0.0) throw NumericFailure("resolvent step too coarse for the kernel");
    for (int i = n_split + 1; i <= n; ++i) {
        double s = a_T * phi(i * h);
        const long base = static_cast<long>(i) * M;
        if (base - nf < lagf_max) {  // kernel support still reaches fine history
            int jP = static_cast<int>(std::max<long>(0, base - lagf_max));
            for (int j = jP; j < nf; ++j) s += psif[j] * wf.P[base - 1 - j];
            int jQ = static_cast<int>(std::max<long>(1, base - lagf_max + 1));
            for (int j = jQ; j <= nf; ++j) s += psif[j] * wf.Q[base - j];
        }
        int jP = std::max(n_split, i - lagc_max);
        for (int j = jP; j < i; ++j) s += psi[j] * wc.P[i - 1 - j];
        int jQ = std::max(n_split + 1, i - lagc_max + 1);
        for (int j = jQ; j < i; ++j) s += psi[j] * wc.Q[i - j];
        psi[i] = s / denc;
    }
    return sol;
}

std::complex<double> fourier_of(const std::function<double(double)>& f, double x, double t_cut) {
    // F f(x) = \int_0^inf e^{i x t} f(t) dt, truncated at t_cut
    double re = GK::integrate([&](double t) { return f(t) * std::cos(x * t); }, 0.0, t_cut, 12,
                              1e-12);
    double im = GK::integrate([&](double t) { return f(t) * std::sin(x * t); }, 0.0, t_cut, 12,
                              1e-12);
    return {re, im};
}

}  // namespace

double ResolventTable::sup_psi() const {
    double s = 0.0;
    for (double v : psi_values) s = std::max(s, v);
    for (double v : psi_fine) s = std::max(s, v);
    return s;
}

std::vector<double> ResolventTable::psi_cumulative() const {
    std::vector<double> out(psi_values.size(), 0.0);
    double hstep = 1.0 / n;
    for (std::size_t i = 1; i < psi_values.size(); ++i)
        out[i] = out[i - 1] + 0.5 * hstep * (psi_values[i - 1] + psi_values[i]);
    return out;
}

double LimitDensity::operator()(double x) const {
    switch (regime) {
        case Regime::Subcritical: return std::exp(-x / m) / m;
        case Regime::Critical: return 1.0 / m;
        case Regime::Supercritical: return std::exp(x / m) / m;
    }
    return 0.0;
}

LimitDensity limit_density(Regime regime, double m) {
    if (!(m > 0.0)) throw InvalidParameter("limit_density: m must be > 0");
    return LimitDensity{regime, m};
}

ResolventTable solve_resolvent(const ScaledKernel& sk, int n) {
    if (n < 256) throw InvalidParameter("solve_resolvent: n must be >= 256");
    if (!sk.base.evaluate) throw InvalidParameter("solve_resolvent: kernel has no evaluate");
    const double T = sk.T;
    const double tau = sk.base.fast_scale();
    const double t_cut = sk.base.tail_cut(1e-13);
    const double h = T / n;
    // startup region aligned to the coarse grid so both Richardson runs share it
    double t_split = std::min(T, std::ceil(16.0 * tau / h) * h);
    int M = 1;
    while (h / M > tau / 64.0 && M < (1 << 16)) M *= 2;

    TwoPhaseSolution coarse, fine;
    try {
        coarse = solve_two_phase(sk.base.evaluate, sk.a_T, T, n, M, t_split, t_cut);
        fine = solve_two_phase(sk.base.evaluate, sk.a_T, T, 2 * n, M, t_split, t_cut);
    } catch (const std::exception& e) {
        throw NumericFailure(std::string("solve_resolvent: time-stepping failed (") + e.what() +
                             "); increase n");
    }

    ResolventTable rt;
    rt.T = T;
    rt.regime = sk.regime;
    rt.n = n;
    rt.grid.resize(n + 1);
    rt.psi_values.resize(n + 1);
    for (int i = 0; i <= n; ++i) {
        rt.grid[i] = double(i) / n;
        double b = fine.coarse[2 * i];
        double v = b + (b - coarse.coarse[i]) / 3.0;  // Richardson in h^2
        rt.psi_values[i] = v;
        if (!std::isfinite(v))
            throw NumericFailure("solve_resolvent: divergent iteration; increase n");
    }
    rt.grid_fine.resize(fine.fine.size());
    rt.psi_fine = fine.fine;
    for (std::size_t j = 0; j < rt.grid_fine.size(); ++j)
        rt.grid_fine[j] = double(j) * fine.fine_step / T;
    LimitDensity rho = limit_density(sk.regime, sk.base.m);
    rt.rho_values.resize(n + 1);
    rt.d_values.resize(n + 1);
    for (int i = 0; i <= n; ++i) {
        rt.rho_values[i] = rho(rt.grid[i]);
        rt.d_values[i] = rt.psi_values[i] - rt.rho_values[i];
    }
    return rt;
}

double l2_distance_on_unit(const ResolventTable& rt) {
    const double hstep = 1.0 / rt.n;
    double acc = 0.0;
    int start = 0;
    if (rt.grid_fine.size() >= 2) {
        // integrate the startup layer on the solver's fine mesh, where the
        // kernel-scale transient of d is actually resolved
        double u_f = rt.grid_fine.back();
        // rho(0) = 1/m in every regime
        LimitDensity rho_f{rt.regime, 1.0 / rt.rho_values[0]};
        for (std::size_t j = 0; j + 1 < rt.grid_fine.size(); ++j) {
            double d0 = rt.psi_fine[j] - rho_f(rt.grid_fine[j]);
            double d1 = rt.psi_fine[j + 1] - rho_f(rt.grid_fine[j + 1]);
            acc += 0.5 * (rt.grid_fine[j + 1] - rt.grid_fine[j]) * (d0 * d0 + d1 * d1);
        }
        start = static_cast<int>(std::lround(u_f * rt.n));
        start = std::min(start, rt.n);
    }
    for (int i = start; i < rt.n; ++i) {
        double a = rt.d_values[i] * rt.d_values[i];
        double b = rt.d_values[i + 1] * rt.d_values[i + 1];
        acc += 0.5 * hstep * (a + b);
    }
    return std::sqrt(acc);
}

MalthusianResult malthusian_parameter(const ScaledKernel& sk) {
    if (sk.regime != Regime::Supercritical)
        throw InvalidParameter("malthusian_parameter: regime must be supercritical");
    const double a = sk.a_T;
    const double target = 1.0 / a;
    const double t_cut = sk.base.tail_cut(1e-16);
    const auto& phi = sk.base.evaluate;
    auto tilted = [&](double b) {
        return a * GK::integrate([&](double t) { return std::exp(-b * t) * phi(t); }, 0.0, t_cut,
                                 12, 1e-14);
    };
    auto g = [&](double b) { return tilted(b) - target; };
    double lo = 0.0, hi = 4.0 * (a * a - 1.0) / std::max(sk.base.m, 1e-12);
    if (hi <= 0.0) hi = 1.0;
    while (g(hi) > 0.0) hi *= 2.0;
    boost::math::tools::eps_tolerance<double> tol(52);
    std::uintmax_t iters = 200;
    auto r = boost::math::tools::toms748_solve(g, lo, hi, tol, iters);
    MalthusianResult out;
    out.b_T = 0.5 * (r.first + r.second);
    out.tilted_l1 = tilted(out.b_T);
    out.m_tilde = a * GK::integrate(
                          [&](double t) { return t * std::exp(-out.b_T * t) * phi(t); }, 0.0,
                          t_cut, 12, 1e-14);
    return out;
}

FourierDiagnostics fourier_residual(const ScaledKernel& sk, const std::vector<double>& z_grid,
                                    double alpha) {
    if (sk.regime == Regime::Critical)
        throw InvalidParameter("fourier_residual: defined for the sub/supercritical regimes");
    const double T = sk.T;
    const double m = sk.base.m;
    const double m2 = sk.base.m2;
    if (alpha <= 0.0) alpha = 0.1 * m / m2;  // inside the valid range (0, m/(8 m2))
    const double t_cut = sk.base.tail_cut(1e-15);
    const auto& phi = sk.base.evaluate;

    FourierDiagnostics out;
    out.z_grid = z_grid;
    out.alpha = alpha;
    out.residual.resize(z_grid.size());
    out.bound.assign(z_grid.size(), 0.0);
    out.flagged.resize(z_grid.size());

    const std::complex<double> I(0.0, 1.0);
    if (sk.regime == Regime::Subcritical) {
        for (std::size_t idx = 0; idx < z_grid.size(); ++idx) {
            double z = z_grid[idx];
            std::complex<double> Fphi = sk.a_T * fourier_of(phi, z / T, t_cut);
            std::complex<double> Fpsi = Fphi / (T * (1.0 - Fphi));  // = F Psi^{(T),-}
            std::complex<double> Frho = 1.0 / (1.0 - I * m * z);
            std::complex<double> eps = Fpsi - Frho + 1.0 / T;
            out.residual[idx] = std::abs(eps);
            double root = std::sqrt(z * z * m * m + 1.0);
            out.bound[idx] = 4.0 / (T * root) + 4.0 * std::abs(z) * m2 / (T * m * root);
            out.flagged[idx] = std::abs(z) > alpha * T ? 1 : 0;
        }
        return out;
    }

    // supercritical: residual of the tilted pair, envelope C/T with C fitted
    // on the first half of the grid
    MalthusianResult mal = malthusian_parameter(sk);
    const double bT = mal.b_T;
    auto tilted_phi = [&](double t) { return std::exp(-bT * t) * phi(t); };
    for (std::size_t idx = 0; idx < z_grid.size(); ++idx) {
        double z = z_grid[idx];
        std::complex<double> Fphit = sk.a_T * fourier_of(tilted_phi, z / T, t_cut);
        std::complex<double> Fpsit = Fphit / (T * (1.0 - Fphit));
        std::complex<double> Frhot = 1.0 / (m * bT * T - 1.0 - I * m * z);
        std::complex<double> eps = Fpsit - Frhot + 1.0 / T;
        out.residual[idx] = std::abs(eps);
        out.flagged[idx] = std::abs(z) > alpha * T ? 1 : 0;
    }
    double C = 0.0;
    std::size_t half = z_grid.size() / 2;
    for (std::size_t idx = 0; idx < half; ++idx)
        if (!out.flagged[idx]) C = std::max(C, T * out.residual[idx]);
    out.fitted_C = C;
    for (std::size_t idx = 0; idx < z_grid.size(); ++idx) out.bound[idx] = C / T;
    return out;
}

}  // namespace nearcrit
