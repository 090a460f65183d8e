#include "nearcrit/hawkes.hpp"

#include <algorithm>
#include <cmath>

namespace nearcrit {

IntensityReplay::IntensityReplay(const ScaledKernel& sk, double mu) : sk_(&sk), mu_(mu) {
    if (!(mu >= 0.0)) throw InvalidParameter("hawkes: mu must be >= 0");
    if (sk.base.family == KernelFamily::Custom && sk.base.evaluate)
        t_cut_ = sk.base.tail_cut(1e-14);
}

void IntensityReplay::advance(double t) {
    double dt = t - t_;
    if (dt < 0.0) throw InvalidParameter("IntensityReplay: time must be nondecreasing");
    if (dt == 0.0) return;
    const double beta = sk_->base.beta;
    switch (sk_->base.family) {
        case KernelFamily::Exponential: {
            double E = std::exp(-beta * dt);
            integral_ += mu_ * dt + u_ * (1.0 - E) / beta;
            u_ *= E;
            break;
        }
        case KernelFamily::Gamma2: {
            double E = std::exp(-beta * dt);
            integral_ += mu_ * dt + u_ * (1.0 - E) / beta +
                         v_ * (1.0 - E * (1.0 + beta * dt)) / (beta * beta);
            double u_new = (u_ + v_ * dt) * E;
            v_ *= E;
            u_ = u_new;
            break;
        }
        case KernelFamily::Custom: {
            // composite Simpson between events; the kernel is smooth there
            auto lam_at = [&](double s) {
                double acc = mu_;
                for (std::size_t q = window_lo_; q < window_.size(); ++q) {
                    double lag = s - window_[q];
                    if (lag > 0.0 && lag <= t_cut_) acc += sk_->a_T * sk_->base.evaluate(lag);
                }
                return acc;
            };
            int panels = std::max(2, static_cast<int>(std::ceil(dt / (0.125 * sk_->base.fast_scale()))));
            if (panels % 2) ++panels;
            double hq = dt / panels;
            double acc = lam_at(t_) + lam_at(t);
            for (int p = 1; p < panels; ++p) acc += (p % 2 ? 4.0 : 2.0) * lam_at(t_ + p * hq);
            integral_ += acc * hq / 3.0;
            while (window_lo_ < window_.size() && t - window_[window_lo_] > t_cut_) ++window_lo_;
            u_ = lam_at(t) - mu_;
            break;
        }
    }
    t_ = t;
}

void IntensityReplay::add_event() {
    const double beta = sk_->base.beta;
    switch (sk_->base.family) {
        case KernelFamily::Exponential:
            u_ += sk_->a_T * beta;  // phi^T(0)
            break;
        case KernelFamily::Gamma2:
            v_ += sk_->a_T * beta * beta;  // phi^T(0) = 0, (phi^T)'(0) = a_T beta^2
            break;
        case KernelFamily::Custom:
            window_.push_back(t_);
            u_ += sk_->a_T * sk_->base.evaluate(0.0);
            break;
    }
}

double IntensityReplay::peak_bound() const {
    switch (sk_->base.family) {
        case KernelFamily::Exponential:
            return mu_ + u_;  // decays between events
        case KernelFamily::Gamma2:
            // (u + v s) e^{-beta s} <= u + v/(beta e)
            return mu_ + u_ + v_ / (sk_->base.beta * 2.718281828459045);
        case KernelFamily::Custom:
            return mu_ + u_;
    }
    return mu_ + u_;
}

HawkesPath simulate_hawkes(const ScaledKernel& sk, double mu, const PoissonFieldSample& field,
                           int grid_n) {
    if (grid_n < 1) throw InvalidParameter("simulate_hawkes: grid_n must be >= 1");
    if (std::abs(field.T - sk.T) > 1e-9)
        throw InvalidParameter("simulate_hawkes: field horizon differs from kernel T");
    const double T = sk.T;
    const double theta_ceiling = field.grid.theta_max * T;  // physical units

    HawkesPath hp;
    hp.T = T;
    hp.mu = mu;
    hp.sk = sk;
    hp.grid_n = grid_n;
    hp.lambda_grid.assign(grid_n + 1, 0.0);

    IntensityReplay st(sk, mu);
    hp.lambda_grid[0] = st.lambda();
    int next_grid = 1;
    auto record_grid_until = [&](double t) {
        while (next_grid <= grid_n && double(next_grid) * T / grid_n <= t) {
            st.advance(double(next_grid) * T / grid_n);
            hp.lambda_grid[next_grid] = st.lambda();
            ++next_grid;
        }
    };

    std::vector<std::pair<double, double>> pts = field.points;
    if (!std::is_sorted(pts.begin(), pts.end())) std::sort(pts.begin(), pts.end());

    for (const auto& [t, theta] : pts) {
        if (t > T) break;
        record_grid_until(t);
        st.advance(t);
        if (theta <= st.lambda()) {
            st.add_event();
            hp.events.push_back(t);
            if (st.lambda() > theta_ceiling)
                throw CapacityError("simulate_hawkes: intensity exceeded the field theta-ceiling");
        }
    }
    record_grid_until(T);

    hp.Lambda_unit.resize(grid_n + 1);
    hp.H_unit.assign(grid_n + 1, 0.0);
    for (int i = 0; i <= grid_n; ++i) {
        hp.Lambda_unit[i] = hp.lambda_grid[i] / T;
        double gt = double(i) * T / grid_n;
        hp.H_unit[i] = double(std::upper_bound(hp.events.begin(), hp.events.end(), gt) -
                              hp.events.begin());
    }
    return hp;
}

RescaledPaths rescaled_paths(const HawkesPath& hp, int n) {
    if (n < 1) throw InvalidParameter("rescaled_paths: n must be >= 1");
    const double T = hp.T;
    RescaledPaths out;
    out.Lambda.assign(n + 1, 0.0);
    out.H_scaled.assign(n + 1, 0.0);
    out.martingale.assign(n + 1, 0.0);

    IntensityReplay st(hp.sk, hp.mu);
    std::size_t ev = 0;
    double events_so_far = 0.0;
    for (int i = 0; i <= n; ++i) {
        double t = double(i) * T / n;
        while (ev < hp.events.size() && hp.events[ev] < t) {
            st.advance(hp.events[ev]);
            st.add_event();
            ++ev;
            events_so_far += 1.0;
        }
        st.advance(t);
        // events exactly at t belong to H_{tT} but not to lambda(t-)
        double h_here = events_so_far;
        std::size_t ev2 = ev;
        while (ev2 < hp.events.size() && hp.events[ev2] == t) {
            h_here += 1.0;
            ++ev2;
        }
        out.Lambda[i] = st.lambda() / T;
        out.H_scaled[i] = h_here / (T * T);
        out.martingale[i] = (h_here - st.compensator()) / T;
    }
    return out;
}

std::vector<double> discretize_path(const std::vector<double>& values, int k) {
    if (values.size() < 2) throw InvalidParameter("discretize_path: need a grid path");
    if (k < 1) throw InvalidParameter("discretize_path: k must be >= 1");
    const std::size_t n = values.size() - 1;
    std::vector<double> out(values.size());
    out[0] = values[0];
    for (std::size_t i = 1; i <= n; ++i) {
        double t = double(i) / double(n);
        // cell (j/k, (j+1)/k] containing t; left endpoint j/k
        int j = static_cast<int>(std::ceil(t * k - 1e-12)) - 1;
        j = std::min(std::max(j, 0), k - 1);
        // resample internally when the grids are incommensurate
        std::size_t idx = static_cast<std::size_t>(std::floor(double(j) * n / k + 1e-9));
        out[i] = values[idx];
    }
    return out;
}

}  // namespace nearcrit
