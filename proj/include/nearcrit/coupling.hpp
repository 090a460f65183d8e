#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "nearcrit/rng.hpp"
#include "nearcrit/errors.hpp"

namespace nearcrit {

/// Uniform 1/k cells tiling (0,1] x (0,theta_max]. Cell (i,j), 0-based,
/// covers (i/k,(i+1)/k] x (j/k,(j+1)/k].
struct CellGrid {
    int k = 1;
    int rows = 1;           // cells in the theta direction
    double theta_max = 1.0; // snapped to rows/k

    double width() const { return 1.0 / k; }
};

CellGrid make_cell_grid(int k, double theta_max);

/// k = floor(T^{4/5}) + 1, the coupling resolution used by the headline bound.
int default_cell_count(double T);

struct StreamContext {
    uint64_t seed = 0;
    uint64_t rep = 0;
    uint64_t attempt = 0;
};

/// Points of the unit-rate Poisson measure N on [0,T] x [0, theta_max*T]
/// (physical coordinates), plus raw counts over the rescaled grid cells.
struct PoissonFieldSample {
    double T = 0.0;
    CellGrid grid;
    std::vector<std::pair<double, double>> points;  // sorted by t
    std::vector<int64_t> cell_counts;               // k x rows, row-major in i

    int64_t count(int i, int j) const { return cell_counts[std::size_t(i) * grid.rows + j]; }
};

/// Unit-rate Poisson field drawn column-by-column in t (one stream per
/// column). Throws CapacityError when the expected point count exceeds the cap.
PoissonFieldSample sample_poisson_field(double T, double theta_max, int k,
                                        const StreamContext& sc,
                                        int64_t max_expected_points = (int64_t(1) << 26));

/// \tilde N^T increment of cell (i,j): count/T - T/k^2.
double compensated_cell_increment(const PoissonFieldSample& field, int i, int j);

/// h_k(delta, u): comonotone inverse-CDF map of the compensated Poisson cell
/// increment onto N(0, 1/k^2). delta must sit on the lattice {(n - T^2/k^2)/T}.
double comonotone_gaussianize(double delta, double u, int k, double T);

/// Pinned Brownian sheet on [0,1/k]^2: covariance (x^x')(y^y') - k^2 xx'yy'.
/// One engine == one realization; all queries of a realization go in a single
/// batch (the realization is materialized on the query lattice).
std::vector<double> sample_pinned_sheet(int k,
                                        std::span<const std::pair<double, double>> queries,
                                        Xoshiro256pp& eng);

/// Coupled Brownian sheet: gaussianized cell increments xi plus per-cell
/// pinned sheets, assembled by the corner recursion. Node values carry
/// W at the grid nodes; off-node queries walk the recursion inside the
/// containing cell. Immutable once built.
struct CoupledSheet {
    double T = 0.0;
    CellGrid grid;
    StreamContext sc;
    std::vector<double> xi;    // k x rows, row-major in i
    std::vector<double> node;  // (k+1) x (rows+1), W at (i/k, j/k)

    double xi_at(int i, int j) const { return xi[std::size_t(i) * grid.rows + j]; }
    double node_at(int i, int j) const {
        return node[std::size_t(i) * (grid.rows + 1) + j];
    }
    /// Full-cell increment of W over cell (i,j); equals xi_at(i,j) exactly.
    double cell_increment(int i, int j) const;

    /// W at arbitrary points of (0,1] x (0,theta_max]. One batch per sheet:
    /// per-cell pinned realizations are materialized on this query set.
    std::vector<double> values_at(std::span<const std::pair<double, double>> pts) const;

    /// W(I_{i,k} x (0,theta]): whole-cell column prefix plus the fractional
    /// boundary strip read through the cell's beta and xi. Used by the
    /// coupled limit-process driver.
    double strip_increment(int i, double theta) const;
};

/// Gaussianize every cell of the field (uniform stream per cell) and run the
/// node recursion.
CoupledSheet build_coupled_sheet(const PoissonFieldSample& field, const StreamContext& sc);

/// W at the query points; thin wrapper over CoupledSheet::values_at.
std::vector<double> assemble_sheet(const CoupledSheet& sheet,
                                   std::span<const std::pair<double, double>> queries);

/// Smooth |x| surrogate: Upsilon'' = (2 m^2/eta) / |x| on
/// [eps e^{-eta/(2m^2)}, eps], zero elsewhere, integrated twice.
struct YamadaFunction {
    double eps = 0.0;
    double eta = 0.0;
    double m = 0.0;
    double lower = 0.0;  // eps * exp(-eta / (2 m^2))
    double coeff = 0.0;  // 2 m^2 / eta

    double evaluate(double x) const;
    double first(double x) const;
    double second(double x) const;
};

YamadaFunction build_yamada(double eps, double eta, double m);

}  // namespace nearcrit
