#pragma once

#include <vector>

#include "nearcrit/coupling.hpp"
#include "nearcrit/kernels.hpp"

namespace nearcrit {

/// Exact intensity evolution for a given event list: Markovian state for the
/// shipped kernels (closed-form decay and compensator between events), event
/// summation for custom kernels. lambda(t) uses events strictly before t.
class IntensityReplay {
  public:
    IntensityReplay(const ScaledKernel& sk, double mu);

    double time() const { return t_; }
    double lambda() const { return mu_ + u_; }
    /// advance to time t > time() without any event; accumulates the exact
    /// compensator integral
    void advance(double t);
    /// register an event at the current time (jump the state)
    void add_event();
    /// \int_0^{time()} lambda_s ds
    double compensator() const { return integral_; }
    /// upper bound for lambda on the upcoming inter-event interval; exact
    /// closed form for the shipped kernels, current value for custom ones
    double peak_bound() const;

  private:
    const ScaledKernel* sk_;
    double mu_;
    double t_ = 0.0;
    double u_ = 0.0;       // lambda - mu
    double v_ = 0.0;       // gamma2 auxiliary slope state
    double integral_ = 0.0;
    // custom kernels: event times inside the kernel support window
    std::vector<double> window_;
    std::size_t window_lo_ = 0;
    double t_cut_ = 0.0;
};

struct HawkesPath {
    double T = 0.0;
    double mu = 0.0;
    ScaledKernel sk;
    int grid_n = 0;
    std::vector<double> events;       // accepted event times in [0,T]
    std::vector<double> lambda_grid;  // lambda at i*T/grid_n
    std::vector<double> Lambda_unit;  // lambda(tT)/T on the unit grid
    std::vector<double> H_unit;       // event counts at the unit grid times
};

/// Poisson imbedding on a realized field: sweep the points in time order and
/// accept (t*, theta*) iff theta* <= lambda(t*-). Deterministic given the
/// field. Throws CapacityError when lambda exceeds the field theta-ceiling.
HawkesPath simulate_hawkes(const ScaledKernel& sk, double mu, const PoissonFieldSample& field,
                           int grid_n = 512);

struct RescaledPaths {
    std::vector<double> Lambda;       // Lambda^T at the unit grid
    std::vector<double> H_scaled;     // H_{tT} / T^2
    std::vector<double> martingale;   // (H_{tT} - int_0^{tT} lambda) / T
};

/// Re-evaluates the path on an n+1-point unit grid with the exact
/// piecewise-analytic compensator.
RescaledPaths rescaled_paths(const HawkesPath& hp, int n);

/// Cag-lad step version along the 1/k subdivision: value at t is the path at
/// the left endpoint of the cell containing t.
std::vector<double> discretize_path(const std::vector<double>& values_on_unit_grid, int k);

}  // namespace nearcrit
