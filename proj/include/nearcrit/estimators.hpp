#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nearcrit/kernels.hpp"
#include "nearcrit/pipeline.hpp"

namespace nearcrit {

/// Weighted least squares of ln y on ln x; weights from the per-point
/// relative errors (delta method). Quantifies "there exists C > 0" bounds.
struct RateFit {
    std::vector<double> xs, ys, stderrs;
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

RateFit fit_rate(const std::vector<double>& xs, const std::vector<double>& ys,
                 const std::vector<double>& stderrs);

struct Estimate {
    double value = 0.0;
    double se = 0.0;
    int reps = 0;
    int incomplete = 0;  // replications dropped after retry exhaustion
};

struct McConfig {
    int reps = 1000;
    uint64_t seed = 0;
    int threads = 0;  // 0 -> hardware concurrency
};

// ---- per-cell coupling error (squared W2 of one cell) ----------------------

struct CellCouplingResult {
    int k = 0;
    std::vector<double> T_list;
    std::vector<Estimate> estimates;  // E|xi - Delta|^2 per T
    RateFit fit;                      // slope in T (theory: -2)
};

CellCouplingResult estimate_cell_coupling(const std::vector<double>& T_list, int k,
                                          const McConfig& mc);

// ---- stochastic-integral coupling error (sup over the k-grid) --------------

struct IntegralCouplingResult {
    double T = 0.0;
    std::string weight;
    std::vector<int> k_list;
    std::vector<Estimate> estimates;
    std::vector<Estimate> final_estimates;  // non-sup variant, value at t = 1
    std::vector<double> envelope;   // C * (1/k + k^2/T^2)
    double envelope_C = 0.0;        // fitted on half the k-grid
    bool envelope_ok = false;       // held-out points below envelope + 3 se
};

IntegralCouplingResult estimate_integral_coupling(const ScaledKernel& sk, double mu, double T,
                                                  const std::vector<int>& k_list,
                                                  const WeightFunction& f, const McConfig& mc);

// ---- headline convergence estimates (shared coupled pipeline) --------------

struct ConvergenceEstimates {
    Regime regime = Regime::Critical;
    std::string kernel;
    double beta = 1.0;
    double mu = 1.0;
    std::vector<double> T_list;
    std::vector<int> k_used;
    std::vector<Estimate> intensity;    // E sup |Lambda - X|^2
    std::vector<Estimate> integrated;   // E sup |int Lambda - int X|^2
    std::vector<Estimate> counting;     // E sup |H/T^2 - int X|^2
    std::vector<Estimate> martingale;   // E sup |(H - int lambda)/T - int 1 dW|^2
    std::vector<Estimate> mart_scaled;  // E sup |H/T^2 - int Lambda|^2
    // envelope C fitted at the smallest T only: C = est(T0) * ln(T0)
    double envelope_C = 0.0;
    bool envelope_ok = false;   // intensity est <= C/ln T + 3 se at held-out T
    bool monotone_ok = false;   // intensity estimates strictly decreasing in T
};

ConvergenceEstimates run_convergence(const KernelSpec& base, Regime regime, double mu,
                                     const std::vector<double>& T_list, const McConfig& mc,
                                     int k_override = 0);

/// Sup-distance of the rescaled intensity to its limit process across a T
/// ladder; the headline convergence estimate.
ConvergenceEstimates estimate_intensity_convergence(const KernelSpec& base, Regime regime,
                                                    double mu,
                                                    const std::vector<double>& T_list,
                                                    const McConfig& mc, int k_override = 0);

struct FunctionalEstimates {
    Estimate integrated_intensity;
    Estimate counting;
    Estimate martingale;
};

/// The three derived counting functionals at a single T (same coupled run).
FunctionalEstimates estimate_counting_functionals(const KernelSpec& base, Regime regime,
                                                  double mu, double T, const McConfig& mc,
                                                  int k_override = 0);

}  // namespace nearcrit
