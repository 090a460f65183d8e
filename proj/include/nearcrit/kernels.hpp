#pragma once

#include <functional>
#include <string>

#include "nearcrit/errors.hpp"

namespace nearcrit {

enum class Regime { Subcritical, Critical, Supercritical };

char regime_symbol(Regime r);
Regime parse_regime(const std::string& s);
std::string regime_name(Regime r);

enum class KernelFamily { Exponential, Gamma2, Custom };

/// Base excitation kernel phi with unit L1 norm. Shipped kernels carry
/// analytic moments; custom kernels get them by quadrature.
struct KernelSpec {
    KernelFamily family = KernelFamily::Custom;
    double beta = 0.0;  // rate parameter of the shipped families
    std::function<double(double)> evaluate;
    std::function<double(double)> derivative;
    double l1_norm = 0.0;
    double m = 0.0;   // first moment
    double m2 = 0.0;  // second moment
    bool analytic_moments_available = false;

    // t beyond which the tail mass of phi is below eps.
    double tail_cut(double eps = 1e-12) const;
    // time scale of the kernel's fast structure, used for mesh grading
    double fast_scale() const;
};

struct Moments {
    double l1 = 0.0;
    double m = 0.0;
    double m2 = 0.0;
};

KernelSpec make_exponential_kernel(double beta);
KernelSpec make_gamma2_kernel(double beta);

// Adaptive quadrature on [0, tail_cut]; matches analytic moments to 1e-8
// for the shipped kernels.
Moments kernel_moments(const KernelSpec& base);

double criticality_factor(Regime regime, double T);

struct ScaledKernel {
    KernelSpec base;
    Regime regime = Regime::Critical;
    double T = 2.0;
    double a_T = 1.0;

    double evaluate_scaled(double t) const { return a_T * base.evaluate(t); }
};

/// phi^T = a_T * phi with a_T = 1 -+ 1/T per regime. Requires T >= 2.
ScaledKernel scale_kernel(const KernelSpec& base, Regime regime, double T);

}  // namespace nearcrit
