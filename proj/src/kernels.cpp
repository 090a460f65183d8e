#include "nearcrit/kernels.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>

namespace nearcrit {

namespace {

using GK = boost::math::quadrature::gauss_kronrod<double, 61>;

double integrate_to(const std::function<double(double)>& f, double hi, double* err = nullptr) {
    double e = 0.0;
    double v = GK::integrate(f, 0.0, hi, 12, 1e-13, &e);
    if (err) *err = e;
    return v;
}

}  // namespace

char regime_symbol(Regime r) {
    switch (r) {
        case Regime::Subcritical: return '-';
        case Regime::Critical: return '0';
        case Regime::Supercritical: return '+';
    }
    return '?';
}

std::string regime_name(Regime r) {
    switch (r) {
        case Regime::Subcritical: return "sub";
        case Regime::Critical: return "critical";
        case Regime::Supercritical: return "super";
    }
    return "?";
}

Regime parse_regime(const std::string& s) {
    if (s == "-" || s == "sub" || s == "subcritical" || s == "nuhp") return Regime::Subcritical;
    if (s == "0" || s == "critical" || s == "wchp") return Regime::Critical;
    if (s == "+" || s == "super" || s == "supercritical" || s == "snuhp") return Regime::Supercritical;
    throw InvalidParameter("unknown regime: " + s);
}

double KernelSpec::tail_cut(double eps) const {
    switch (family) {
        case KernelFamily::Exponential:
            return -std::log(eps) / beta;
        case KernelFamily::Gamma2: {
            // tail mass (1 + beta t) e^{-beta t}; a few fixed-point rounds
            double x = -std::log(eps);
            for (int it = 0; it < 40; ++it) x = -std::log(eps) + std::log1p(x);
            return x / beta;
        }
        case KernelFamily::Custom: {
            // doubling search on segment masses
            double t = 1.0;
            for (int it = 0; it < 60; ++it) {
                double seg = GK::integrate(evaluate, t, 4.0 * t, 10, 1e-12);
                if (seg < 0.5 * eps) return 4.0 * t;
                t *= 2.0;
            }
            throw NumericFailure("tail_cut: kernel tail does not decay below eps");
        }
    }
    throw InvalidParameter("tail_cut: bad kernel family");
}

double KernelSpec::fast_scale() const {
    switch (family) {
        case KernelFamily::Exponential:
        case KernelFamily::Gamma2:
            return 1.0 / beta;
        case KernelFamily::Custom:
            return m > 0.0 ? 0.5 * m : 1.0;
    }
    return 1.0;
}

KernelSpec make_exponential_kernel(double beta) {
    if (!(beta > 0.0)) throw InvalidParameter("exponential kernel: beta must be > 0");
    KernelSpec k;
    k.family = KernelFamily::Exponential;
    k.beta = beta;
    k.evaluate = [beta](double t) { return t < 0.0 ? 0.0 : beta * std::exp(-beta * t); };
    k.derivative = [beta](double t) { return t < 0.0 ? 0.0 : -beta * beta * std::exp(-beta * t); };
    k.l1_norm = 1.0;
    k.m = 1.0 / beta;
    k.m2 = 2.0 / (beta * beta);
    k.analytic_moments_available = true;
    return k;
}

KernelSpec make_gamma2_kernel(double beta) {
    if (!(beta > 0.0)) throw InvalidParameter("gamma2 kernel: beta must be > 0");
    KernelSpec k;
    k.family = KernelFamily::Gamma2;
    k.beta = beta;
    k.evaluate = [beta](double t) { return t < 0.0 ? 0.0 : beta * beta * t * std::exp(-beta * t); };
    k.derivative = [beta](double t) {
        return t < 0.0 ? 0.0 : beta * beta * (1.0 - beta * t) * std::exp(-beta * t);
    };
    k.l1_norm = 1.0;
    k.m = 2.0 / beta;
    k.m2 = 6.0 / (beta * beta);
    k.analytic_moments_available = true;
    return k;
}

Moments kernel_moments(const KernelSpec& base) {
    if (!base.evaluate) throw InvalidParameter("kernel_moments: kernel has no evaluate");
    double tcut;
    try {
        tcut = base.tail_cut(1e-12);
    } catch (const NumericFailure&) {
        throw;
    }
    Moments out;
    double e0 = 0, e1 = 0, e2 = 0;
    const auto& f = base.evaluate;
    out.l1 = integrate_to(f, tcut, &e0);
    out.m = integrate_to([&f](double t) { return t * f(t); }, tcut, &e1);
    out.m2 = integrate_to([&f](double t) { return t * t * f(t); }, tcut, &e2);
    double scale = std::max({1.0, std::abs(out.l1), std::abs(out.m), std::abs(out.m2)});
    if (e0 + e1 + e2 > 1e-9 * scale)
        throw NumericFailure("kernel_moments: quadrature did not converge (err=" +
                             std::to_string(e0 + e1 + e2) + ")");
    return out;
}

double criticality_factor(Regime regime, double T) {
    if (!(T >= 2.0)) throw OutOfRange("criticality factor: requires T >= 2");
    switch (regime) {
        case Regime::Subcritical: return 1.0 - 1.0 / T;
        case Regime::Critical: return 1.0;
        case Regime::Supercritical: return 1.0 + 1.0 / T;
    }
    throw InvalidParameter("bad regime");
}

ScaledKernel scale_kernel(const KernelSpec& base, Regime regime, double T) {
    ScaledKernel sk;
    sk.base = base;
    sk.regime = regime;
    sk.T = T;
    sk.a_T = criticality_factor(regime, T);
    return sk;
}

}  // namespace nearcrit
