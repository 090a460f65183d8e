#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "nearcrit/coupling.hpp"
#include "nearcrit/hawkes.hpp"
#include "nearcrit/kernels.hpp"

namespace nearcrit {

/// \int_0^1 Psi^(T)(s) ds; closed form for the shipped families.
double integral_psi_unit(const ScaledKernel& sk);

/// Ceiling for the rescaled-intensity range: 4 * (mu + sup_t E[Lambda_t]).
double auto_theta_ceiling(const ScaledKernel& sk, double mu);

struct WeightFunction {
    std::string name = "one";
    std::function<double(double)> f = [](double) { return 1.0; };
};

WeightFunction make_weight(const std::string& name);

struct PipelineConfig {
    ScaledKernel sk;
    double mu = 1.0;
    int k = 0;             // 0 -> floor(T^{4/5}) + 1
    double theta0 = 0.0;   // 0 -> auto ceiling
    uint64_t seed = 0;
    int max_attempts = 6;  // theta doubles per retry
};

/// One replication of the fully coupled construction: stream the field
/// column-by-column, thin it into the Hawkes path, gaussianize the cells the
/// limit process touches, and drive X off the shared sheet. Retries with a
/// doubled ceiling when the intensity or X leaves the sampled range.
struct CoupledRunResult {
    bool ok = false;
    int attempts = 0;
    double theta_used = 0.0;
    double sup_sq_intensity = 0.0;    // sup_t |Lambda^T_t - X_t|^2
    double sup_sq_integrated = 0.0;   // sup_t |int_0^t Lambda - int_0^t X|^2
    double sup_sq_counting = 0.0;     // sup_t |H_{tT}/T^2 - int_0^t X|^2
    double sup_sq_martingale = 0.0;   // sup_t |(H-int lambda)/T - int 1_{theta<=X} dW|^2
    double sup_sq_mart_scaled = 0.0;  // sup_t |H_{tT}/T^2 - int_0^t Lambda|^2
};

CoupledRunResult run_coupled_replication(const PipelineConfig& cfg, uint64_t rep);

/// One replication of the coupled stochastic-integral estimator: squared sup
/// over the k-grid of the (Ntilde^T - W) integral against
/// f(t_i^k) 1_{theta <= Lambda-bar}.
struct IntegralCouplingRun {
    bool ok = false;
    int attempts = 0;
    double sup_sq = 0.0;    // squared sup over the k-grid prefixes
    double final_sq = 0.0;  // squared value at t = 1 (the non-sup variant)
};

IntegralCouplingRun run_integral_coupling_replication(const PipelineConfig& cfg,
                                                      const WeightFunction& f, uint64_t rep);

}  // namespace nearcrit
