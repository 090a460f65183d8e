#pragma once

#include <string>
#include <vector>

#include "nearcrit/coupling.hpp"
#include "nearcrit/kernels.hpp"

namespace nearcrit {

/// Path of the limit process X on the unit interval, n+1 grid points,
/// X_0 = 0 and X >= 0 by full truncation.
struct LimitPath {
    Regime regime = Regime::Critical;
    double mu = 0.0;
    double m = 1.0;
    int n = 0;
    std::vector<double> X;
    std::string driving;  // "coupled-sheet" or "independent-bm"

    /// Brownian increments consumed per step (the sheet reads for the coupled
    /// driver); empty for t=0. noise[i] drives the step over (t_i, t_{i+1}].
    std::vector<double> noise;
};

double drift_sign(Regime regime);  // -1, 0, +1

/// Euler with full truncation on the coupling grid (step 1/k); the Brownian
/// increment over (t_i, t_{i+1}] is W(I_{i,k} x (0, X_{t_i}]) read from the
/// sheet, normalized through sqrt(X) when X > 0.
LimitPath simulate_limit_coupled(Regime regime, double mu, double m, const CoupledSheet& sheet);

/// Same construction straight off the field: cells are gaussianized on
/// demand, only up to the rows the path actually reaches. Matches the
/// sheet-driven overload to roundoff for the same field and stream context.
LimitPath simulate_limit_coupled(Regime regime, double mu, double m,
                                 const PoissonFieldSample& field, const StreamContext& sc);

/// Same scheme driven by fresh N(0, 1/n) increments; law-level reference.
LimitPath simulate_cir_reference(Regime regime, double mu, double m, uint64_t seed, uint64_t rep,
                                 int n);

}  // namespace nearcrit
