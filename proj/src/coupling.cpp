#include "nearcrit/coupling.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/poisson.hpp>

#include <algorithm>
#include <cmath>
#include <map>

namespace nearcrit {

CellGrid make_cell_grid(int k, double theta_max) {
    if (k < 1) throw InvalidParameter("cell grid: k must be >= 1");
    if (!(theta_max > 0.0)) throw InvalidParameter("cell grid: theta_max must be > 0");
    CellGrid g;
    g.k = k;
    g.rows = static_cast<int>(std::ceil(theta_max * k - 1e-9));
    g.rows = std::max(g.rows, 1);
    g.theta_max = double(g.rows) / k;
    return g;
}

int default_cell_count(double T) {
    return static_cast<int>(std::floor(std::pow(T, 0.8))) + 1;
}

PoissonFieldSample sample_poisson_field(double T, double theta_max, int k,
                                        const StreamContext& sc, int64_t max_expected_points) {
    if (!(T >= 2.0)) throw OutOfRange("sample_poisson_field: requires T >= 2");
    if (!(theta_max >= 0.0)) throw InvalidParameter("sample_poisson_field: theta_max < 0");
    PoissonFieldSample out;
    out.T = T;
    out.grid = make_cell_grid(k, theta_max > 0.0 ? theta_max : 1.0);
    if (theta_max <= 0.0) {
        out.grid.theta_max = 0.0;
        out.grid.rows = 0;
        return out;
    }
    const double theta_hi = out.grid.theta_max * T;  // physical theta extent
    const double expected = T * theta_hi;
    if (expected > double(max_expected_points))
        throw CapacityError("sample_poisson_field: expected count " + std::to_string(expected) +
                            " exceeds the memory cap; use the slab-streaming pipeline");
    out.cell_counts.assign(std::size_t(k) * out.grid.rows, 0);
    out.points.reserve(std::size_t(expected * 1.05) + 64);
    const double colw = T / k;
    std::vector<std::pair<double, double>> col;
    for (int i = 0; i < k; ++i) {
        auto eng = make_stream(sc.seed, StreamKind::FieldColumn, sc.rep, sc.attempt, i);
        int64_t cnt = draw_poisson(eng, colw * theta_hi);
        col.clear();
        col.reserve(cnt);
        for (int64_t p = 0; p < cnt; ++p) {
            double t = (i + eng.u01()) * colw;
            double th = eng.u01() * theta_hi;
            col.emplace_back(t, th);
        }
        std::sort(col.begin(), col.end());
        for (auto& pt : col) {
            int j = std::min<int>(static_cast<int>(pt.second / theta_hi * out.grid.rows),
                                  out.grid.rows - 1);
            ++out.cell_counts[std::size_t(i) * out.grid.rows + j];
        }
        out.points.insert(out.points.end(), col.begin(), col.end());
    }
    return out;
}

double compensated_cell_increment(const PoissonFieldSample& field, int i, int j) {
    if (i < 0 || i >= field.grid.k || j < 0 || j >= field.grid.rows)
        throw OutOfRange("compensated_cell_increment: cell outside sampled region");
    const double T = field.T;
    const double k = field.grid.k;
    return double(field.count(i, j)) / T - T / (k * k);
}

double comonotone_gaussianize(double delta, double u, int k, double T) {
    if (!(u > 0.0 && u < 1.0)) throw InvalidParameter("comonotone_gaussianize: u must be in (0,1)");
    const double lambda = T * T / (double(k) * k);
    const double x = delta * T + lambda;
    const double n = std::round(x);
    if (n < 0.0 || std::abs(x - n) > 1e-9 * std::max(1.0, std::abs(x)))
        throw InvalidParameter("comonotone_gaussianize: delta off the (k,T) lattice");
    boost::math::poisson_distribution<double> pois(lambda);
    double below = n > 0.0 ? boost::math::cdf(pois, n - 1.0) : 0.0;
    double atom = boost::math::pdf(pois, n);
    double p = below + u * atom;
    p = std::min(std::max(p, 1e-300), 1.0 - 1e-16);
    boost::math::normal_distribution<double> gauss(0.0, 1.0 / k);
    return boost::math::quantile(gauss, p);
}

namespace {

struct Lattice {
    std::vector<double> xs, ys;     // sorted unique, include 1/k
    std::vector<double> B;          // sheet prefix values, xs.size() x ys.size()

    double value(double x, double y) const {
        if (x <= 0.0 || y <= 0.0) return 0.0;
        auto ix = std::lower_bound(xs.begin(), xs.end(), x) - xs.begin();
        auto iy = std::lower_bound(ys.begin(), ys.end(), y) - ys.begin();
        return B[std::size_t(ix) * ys.size() + iy];
    }
};

// Materialize an auxiliary Brownian sheet B on the query lattice by
// independent rectangle increments, row-major draw order.
Lattice build_lattice(int k, std::span<const std::pair<double, double>> queries,
                      Xoshiro256pp& eng) {
    const double cell = 1.0 / k;
    Lattice lat;
    for (auto& q : queries) {
        if (q.first < -1e-12 || q.first > cell + 1e-12 || q.second < -1e-12 ||
            q.second > cell + 1e-12)
            throw OutOfRange("pinned sheet query outside the cell square");
        if (q.first > 0.0) lat.xs.push_back(std::min(q.first, cell));
        if (q.second > 0.0) lat.ys.push_back(std::min(q.second, cell));
    }
    lat.xs.push_back(cell);
    lat.ys.push_back(cell);
    std::sort(lat.xs.begin(), lat.xs.end());
    lat.xs.erase(std::unique(lat.xs.begin(), lat.xs.end()), lat.xs.end());
    std::sort(lat.ys.begin(), lat.ys.end());
    lat.ys.erase(std::unique(lat.ys.begin(), lat.ys.end()), lat.ys.end());

    const std::size_t nx = lat.xs.size(), ny = lat.ys.size();
    lat.B.assign(nx * ny, 0.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (std::size_t a = 0; a < nx; ++a) {
        double dx = lat.xs[a] - (a == 0 ? 0.0 : lat.xs[a - 1]);
        for (std::size_t b = 0; b < ny; ++b) {
            double dy = lat.ys[b] - (b == 0 ? 0.0 : lat.ys[b - 1]);
            lat.B[a * ny + b] = std::sqrt(dx * dy) * gauss(eng);
        }
    }
    // 2D prefix sums in place
    for (std::size_t a = 0; a < nx; ++a)
        for (std::size_t b = 1; b < ny; ++b) lat.B[a * ny + b] += lat.B[a * ny + b - 1];
    for (std::size_t a = 1; a < nx; ++a)
        for (std::size_t b = 0; b < ny; ++b) lat.B[a * ny + b] += lat.B[(a - 1) * ny + b];
    return lat;
}

double pinned_from_lattice(const Lattice& lat, int k, double x, double y) {
    const double cell = 1.0 / k;
    double corner = lat.value(cell, cell);
    return lat.value(x, y) - double(k) * k * x * y * corner;
}

int containing_cell(double coord, int k, int hi) {
    // cell index i with coord in (i/k, (i+1)/k]
    double scaled = coord * k;
    int i = static_cast<int>(std::ceil(scaled - 1e-12)) - 1;
    return std::min(std::max(i, 0), hi - 1);
}

}  // namespace

std::vector<double> sample_pinned_sheet(int k,
                                        std::span<const std::pair<double, double>> queries,
                                        Xoshiro256pp& eng) {
    Lattice lat = build_lattice(k, queries, eng);
    std::vector<double> out;
    out.reserve(queries.size());
    for (auto& q : queries) out.push_back(pinned_from_lattice(lat, k, q.first, q.second));
    return out;
}

double CoupledSheet::cell_increment(int i, int j) const {
    return node_at(i + 1, j + 1) - node_at(i, j + 1) - node_at(i + 1, j) + node_at(i, j);
}

CoupledSheet build_coupled_sheet(const PoissonFieldSample& field, const StreamContext& sc) {
    CoupledSheet sh;
    sh.T = field.T;
    sh.grid = field.grid;
    sh.sc = sc;
    const int k = sh.grid.k;
    const int rows = sh.grid.rows;
    sh.xi.resize(std::size_t(k) * rows);
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < rows; ++j) {
            double delta = compensated_cell_increment(field, i, j);
            auto ue = make_stream(sc.seed, StreamKind::CellUniform, sc.rep, sc.attempt, i, j);
            sh.xi[std::size_t(i) * rows + j] = comonotone_gaussianize(delta, ue.u01(), k, field.T);
        }
    }
    sh.node.assign(std::size_t(k + 1) * (rows + 1), 0.0);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < rows; ++j)
            sh.node[std::size_t(i + 1) * (rows + 1) + (j + 1)] =
                sh.node[std::size_t(i + 1) * (rows + 1) + j] +
                sh.node[std::size_t(i) * (rows + 1) + (j + 1)] -
                sh.node[std::size_t(i) * (rows + 1) + j] + sh.xi[std::size_t(i) * rows + j];
    return sh;
}

std::vector<double> CoupledSheet::values_at(
    std::span<const std::pair<double, double>> pts) const {
    const int k = grid.k;
    const int rows = grid.rows;
    const double cell = 1.0 / k;

    // Collect the per-cell query batches the recursion needs.
    struct CellBatch {
        std::vector<std::pair<double, double>> pts;
        std::vector<double> vals;
    };
    std::map<std::pair<int, int>, CellBatch> batches;
    auto add_query = [&](int i, int j, double x, double y) {
        if (i >= k || j >= rows)
            throw DependencyError("assemble: missing cell data at (" + std::to_string(i) + "," +
                                  std::to_string(j) + ")");
        batches[{i, j}].pts.emplace_back(x, y);
    };
    for (auto& p : pts) {
        if (p.first <= 0.0 || p.second <= 0.0) continue;  // W vanishes on the axes
        if (p.first > 1.0 + 1e-12 || p.second > grid.theta_max + 1e-12)
            throw OutOfRange("assemble: query outside the gridded region");
        int ci = containing_cell(p.first, k, k);
        int cj = containing_cell(p.second, k, rows);
        double ds = p.first - ci * cell;
        double dt = p.second - cj * cell;
        for (int j = 0; j < cj; ++j) add_query(ci, j, ds, cell);
        for (int i = 0; i < ci; ++i) add_query(i, cj, cell, dt);
        add_query(ci, cj, ds, dt);
    }
    for (auto& [key, batch] : batches) {
        auto eng = make_stream(sc.seed, StreamKind::CellBeta, sc.rep, sc.attempt,
                               uint64_t(key.first), uint64_t(key.second));
        batch.vals = sample_pinned_sheet(k, batch.pts, eng);
    }
    auto beta_of = [&](int i, int j, double x, double y) {
        const CellBatch& b = batches.at({i, j});
        for (std::size_t q = 0; q < b.pts.size(); ++q)
            if (b.pts[q].first == x && b.pts[q].second == y) return b.vals[q];
        throw DependencyError("assemble: internal batch lookup failed");
    };

    std::vector<double> out;
    out.reserve(pts.size());
    for (auto& p : pts) {
        if (p.first <= 0.0 || p.second <= 0.0) {
            out.push_back(0.0);
            continue;
        }
        int ci = containing_cell(p.first, k, k);
        int cj = containing_cell(p.second, k, rows);
        double ds = p.first - ci * cell;
        double dt = p.second - cj * cell;
        double w = node_at(ci, cj);
        for (int j = 0; j < cj; ++j)
            w += beta_of(ci, j, ds, cell) + k * ds * xi_at(ci, j);
        for (int i = 0; i < ci; ++i)
            w += beta_of(i, cj, cell, dt) + k * dt * xi_at(i, cj);
        w += beta_of(ci, cj, ds, dt) + double(k) * k * ds * dt * xi_at(ci, cj);
        out.push_back(w);
    }
    return out;
}

double CoupledSheet::strip_increment(int i, double theta) const {
    const int k = grid.k;
    const int rows = grid.rows;
    if (theta <= 0.0) return 0.0;
    if (theta > grid.theta_max + 1e-12)
        throw CapacityError("strip_increment: theta exceeds the sheet extent");
    double scaled = theta * k;
    int jstar = std::min(static_cast<int>(std::floor(scaled + 1e-12)), rows);
    double frac = theta - double(jstar) / k;
    if (frac < 1e-12) frac = 0.0;
    double w = node_at(i + 1, jstar) - node_at(i, jstar);
    if (frac > 0.0) {
        if (jstar >= rows) throw CapacityError("strip_increment: theta exceeds the sheet extent");
        std::pair<double, double> q{1.0 / k, frac};
        auto eng = make_stream(sc.seed, StreamKind::CellBeta, sc.rep, sc.attempt, uint64_t(i),
                               uint64_t(jstar));
        double beta = sample_pinned_sheet(k, std::span(&q, 1), eng)[0];
        w += beta + k * frac * xi_at(i, jstar);
    }
    return w;
}

std::vector<double> assemble_sheet(const CoupledSheet& sheet,
                                   std::span<const std::pair<double, double>> queries) {
    return sheet.values_at(queries);
}

double YamadaFunction::second(double x) const {
    double ax = std::abs(x);
    if (ax < lower || ax > eps) return 0.0;
    return coeff / ax;
}

double YamadaFunction::first(double x) const {
    double ax = std::abs(x);
    double s = x < 0.0 ? -1.0 : 1.0;
    if (ax <= lower) return 0.0;
    if (ax >= eps) return s;
    return s * coeff * std::log(ax / lower);
}

double YamadaFunction::evaluate(double x) const {
    double ax = std::abs(x);
    if (ax <= lower) return 0.0;
    if (ax <= eps) return coeff * (ax * std::log(ax / lower) - (ax - lower));
    return eps - coeff * (eps - lower) + (ax - eps);
}

YamadaFunction build_yamada(double eps, double eta, double m) {
    if (!(eps > 0.0) || !(eta > 0.0) || !(m > 0.0))
        throw InvalidParameter("build_yamada: eps, eta, m must be > 0");
    YamadaFunction y;
    y.eps = eps;
    y.eta = eta;
    y.m = m;
    y.lower = eps * std::exp(-eta / (2.0 * m * m));
    y.coeff = 2.0 * m * m / eta;
    if (!(y.lower > 0.0) || !(y.lower < eps))
        throw InvalidParameter("build_yamada: parameters make the support empty");
    return y;
}

}  // namespace nearcrit
