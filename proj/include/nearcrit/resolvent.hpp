#pragma once

#include <cstdint>
#include <vector>

#include "nearcrit/kernels.hpp"

namespace nearcrit {

/// Grid values of the rescaled resolvent Psi^(T) on [0,1], the limit density
/// rho, and their difference d^T. Immutable after solve; share freely.
struct ResolventTable {
    double T = 0.0;
    Regime regime = Regime::Critical;
    int n = 0;                      // n+1 uniform grid points on [0,1]
    std::vector<double> grid;
    std::vector<double> psi_values;
    std::vector<double> rho_values;
    std::vector<double> d_values;   // psi - rho, exact

    // The solver's graded startup mesh on [0, grid_fine.back()]: resolves the
    // kernel-scale transient of psi that the uniform grid undersamples.
    std::vector<double> grid_fine;
    std::vector<double> psi_fine;

    double sup_psi() const;
    /// trapezoidal \int_0^{t_i} Psi^(T)(s) ds at every grid point
    std::vector<double> psi_cumulative() const;
};

/// Limit density rho: (1/m) e^{-x/m}, 1/m, or (1/m) e^{x/m} by regime.
struct LimitDensity {
    Regime regime = Regime::Critical;
    double m = 1.0;
    double operator()(double x) const;
};

LimitDensity limit_density(Regime regime, double m);

/// Solves Psi^T = phi^T + phi^T * Psi^T on [0,T] by product-trapezoidal
/// time-stepping (piecewise-linear unknown, exact panel weights) on a mesh
/// graded near 0, with one Richardson pass; returns Psi^(T) on the unit grid.
ResolventTable solve_resolvent(const ScaledKernel& sk, int n);

/// L2(0,1) norm of d^T by the trapezoid rule on the table grid.
double l2_distance_on_unit(const ResolventTable& rt);

struct MalthusianResult {
    double b_T = 0.0;        // exponential tilt rate
    double tilted_l1 = 0.0;  // \int e^{-b_T s} phi^{T,+}(s) ds, equals 1/a_T
    double m_tilde = 0.0;    // first moment of the tilted kernel
};

/// Supercritical only: root of \int e^{-b s} phi^{T,+}(s) ds = 1/a_T.
MalthusianResult malthusian_parameter(const ScaledKernel& sk);

struct FourierDiagnostics {
    std::vector<double> z_grid;
    std::vector<double> residual;   // |eps^T(z)|
    std::vector<double> bound;      // theoretical envelope at z
    std::vector<uint8_t> flagged;   // 1 where |z| > alpha*T (outside validated range)
    double alpha = 0.0;
    double fitted_C = 0.0;          // supercritical envelope constant (0 otherwise)
};

/// Residual eps^T(z) = F d^T(z) + 1/T with its envelope: the explicit
/// subcritical bound, or C/T with C fitted on the first half of the z-grid
/// for the supercritical case. Critical regime has no such diagnostic.
FourierDiagnostics fourier_residual(const ScaledKernel& sk, const std::vector<double>& z_grid,
                                    double alpha = 0.0);

}  // namespace nearcrit
