#include "nearcrit/estimators.hpp"

#include <algorithm>
#include <cmath>

#include "nearcrit/parallel.hpp"

namespace nearcrit {

namespace {

int resolve_threads(const McConfig& mc) { return mc.threads > 0 ? mc.threads : default_threads(); }

Estimate reduce_ok(const std::vector<double>& values, const std::vector<uint8_t>& ok) {
    std::vector<double> kept;
    kept.reserve(values.size());
    int dropped = 0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (ok[i]) kept.push_back(values[i]);
        else ++dropped;
    }
    MeanVar mv = mean_and_se(kept);
    Estimate e;
    e.value = mv.mean;
    e.se = mv.se;
    e.reps = int(kept.size());
    e.incomplete = dropped;
    return e;
}

}  // namespace

RateFit fit_rate(const std::vector<double>& xs, const std::vector<double>& ys,
                 const std::vector<double>& stderrs) {
    if (xs.size() != ys.size() || (!stderrs.empty() && stderrs.size() != ys.size()))
        throw InvalidParameter("fit_rate: mismatched input lengths");
    if (xs.size() < 3) throw InvalidParameter("fit_rate: need at least 3 points");
    RateFit fit;
    fit.xs = xs;
    fit.ys = ys;
    fit.stderrs = stderrs.empty() ? std::vector<double>(xs.size(), 0.0) : stderrs;
    std::vector<double> lx(xs.size()), ly(xs.size()), w(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (!(ys[i] > 0.0) || !(xs[i] > 0.0))
            throw InvalidParameter("fit_rate: xs and ys must be positive");
        lx[i] = std::log(xs[i]);
        ly[i] = std::log(ys[i]);
        double rel = fit.stderrs[i] > 0.0 ? fit.stderrs[i] / ys[i] : 0.0;
        w[i] = rel > 0.0 ? 1.0 / (rel * rel) : 1.0;
    }
    if (!stderrs.empty()) {
        // all-zero stderrs -> uniform weights; mixed -> cap the zero-error ones
        double wmax = 0.0;
        for (double v : w) wmax = std::max(wmax, v);
        for (double& v : w)
            if (v == 1.0 && wmax > 1.0) v = wmax;
    }
    double sw = 0, swx = 0, swy = 0, swxx = 0, swxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sw += w[i];
        swx += w[i] * lx[i];
        swy += w[i] * ly[i];
        swxx += w[i] * lx[i] * lx[i];
        swxy += w[i] * lx[i] * ly[i];
    }
    double det = sw * swxx - swx * swx;
    if (std::abs(det) < 1e-14 * std::max(1.0, sw * swxx))
        throw NumericFailure("fit_rate: degenerate abscissas");
    fit.slope = (sw * swxy - swx * swy) / det;
    fit.intercept = (swxx * swy - swx * swxy) / det;
    double ssr = 0, sst = 0, ybar = swy / sw;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double fitv = fit.intercept + fit.slope * lx[i];
        ssr += w[i] * (ly[i] - fitv) * (ly[i] - fitv);
        sst += w[i] * (ly[i] - ybar) * (ly[i] - ybar);
    }
    fit.r2 = sst > 0.0 ? 1.0 - ssr / sst : 1.0;
    return fit;
}

CellCouplingResult estimate_cell_coupling(const std::vector<double>& T_list, int k,
                                          const McConfig& mc) {
    if (mc.reps < 1000) throw InvalidParameter("estimate_cell_coupling: reps must be >= 1000");
    CellCouplingResult out;
    out.k = k;
    out.T_list = T_list;
    std::vector<double> means, ses;
    for (std::size_t ti = 0; ti < T_list.size(); ++ti) {
        const double T = T_list[ti];
        const double lambda = T * T / (double(k) * k);
        std::vector<double> vals(mc.reps);
        parallel_for(mc.reps, resolve_threads(mc), [&](std::size_t rep) {
            auto eng = make_stream(mc.seed, StreamKind::PairDraw, rep, 0, ti, k);
            int64_t count = draw_poisson(eng, lambda);
            double delta = (double(count) - lambda) / T;
            double xi = comonotone_gaussianize(delta, eng.u01(), k, T);
            vals[rep] = (xi - delta) * (xi - delta);
        });
        MeanVar mv = mean_and_se(vals);
        Estimate e;
        e.value = mv.mean;
        e.se = mv.se;
        e.reps = mc.reps;
        out.estimates.push_back(e);
        means.push_back(mv.mean);
        ses.push_back(mv.se);
    }
    if (T_list.size() >= 3) out.fit = fit_rate(T_list, means, ses);
    return out;
}

IntegralCouplingResult estimate_integral_coupling(const ScaledKernel& sk, double mu, double T,
                                                  const std::vector<int>& k_list,
                                                  const WeightFunction& f, const McConfig& mc) {
    if (std::abs(sk.T - T) > 1e-9)
        throw InvalidParameter("estimate_integral_coupling: kernel scaled at a different T");
    IntegralCouplingResult out;
    out.T = T;
    out.weight = f.name;
    out.k_list = k_list;
    for (std::size_t ki = 0; ki < k_list.size(); ++ki) {
        PipelineConfig cfg;
        cfg.sk = sk;
        cfg.mu = mu;
        cfg.k = k_list[ki];
        cfg.seed = mc.seed + 0x9e37 * (ki + 1);
        std::vector<double> vals(mc.reps, 0.0), fins(mc.reps, 0.0);
        std::vector<uint8_t> ok(mc.reps, 0);
        parallel_for(mc.reps, resolve_threads(mc), [&](std::size_t rep) {
            IntegralCouplingRun r = run_integral_coupling_replication(cfg, f, rep);
            vals[rep] = r.sup_sq;
            fins[rep] = r.final_sq;
            ok[rep] = r.ok ? 1 : 0;
        });
        out.estimates.push_back(reduce_ok(vals, ok));
        out.final_estimates.push_back(reduce_ok(fins, ok));
    }
    // envelope C (1/k + k^2/T^2): fit on the lower half of the k ladder
    // (where the estimate/envelope ratio peaks), validate on the upper half
    auto env = [&](int k) { return 1.0 / k + double(k) * k / (T * T); };
    double C = 0.0;
    std::vector<bool> in_fit(k_list.size(), false);
    for (std::size_t i = 0; i < k_list.size(); ++i) in_fit[i] = i <= k_list.size() / 2;
    for (std::size_t i = 0; i < k_list.size(); ++i)
        if (in_fit[i]) C = std::max(C, out.estimates[i].value / env(k_list[i]));
    out.envelope_C = C;
    out.envelope_ok = true;
    for (std::size_t i = 0; i < k_list.size(); ++i) {
        out.envelope.push_back(C * env(k_list[i]));
        if (!in_fit[i] &&
            out.estimates[i].value > C * env(k_list[i]) + 3.0 * out.estimates[i].se)
            out.envelope_ok = false;
    }
    return out;
}

ConvergenceEstimates run_convergence(const KernelSpec& base, Regime regime, double mu,
                                     const std::vector<double>& T_list, const McConfig& mc,
                                     int k_override) {
    if (T_list.empty()) throw InvalidParameter("run_convergence: empty T list");
    ConvergenceEstimates out;
    out.regime = regime;
    out.kernel = base.family == KernelFamily::Exponential ? "exponential"
                 : base.family == KernelFamily::Gamma2    ? "gamma2"
                                                          : "custom";
    out.beta = base.beta;
    out.mu = mu;
    out.T_list = T_list;
    for (std::size_t ti = 0; ti < T_list.size(); ++ti) {
        const double T = T_list[ti];
        PipelineConfig cfg;
        cfg.sk = scale_kernel(base, regime, T);
        cfg.mu = mu;
        cfg.k = k_override;
        cfg.seed = mc.seed + 0x51ed * (ti + 1);
        out.k_used.push_back(k_override > 0 ? k_override : default_cell_count(T));
        std::vector<double> vint(mc.reps), vii(mc.reps), vcnt(mc.reps), vmart(mc.reps),
            vms(mc.reps);
        std::vector<uint8_t> ok(mc.reps, 0);
        parallel_for(mc.reps, resolve_threads(mc), [&](std::size_t rep) {
            CoupledRunResult r = run_coupled_replication(cfg, rep);
            ok[rep] = r.ok ? 1 : 0;
            vint[rep] = r.sup_sq_intensity;
            vii[rep] = r.sup_sq_integrated;
            vcnt[rep] = r.sup_sq_counting;
            vmart[rep] = r.sup_sq_martingale;
            vms[rep] = r.sup_sq_mart_scaled;
        });
        out.intensity.push_back(reduce_ok(vint, ok));
        out.integrated.push_back(reduce_ok(vii, ok));
        out.counting.push_back(reduce_ok(vcnt, ok));
        out.martingale.push_back(reduce_ok(vmart, ok));
        out.mart_scaled.push_back(reduce_ok(vms, ok));
    }
    out.envelope_C = out.intensity.front().value * std::log(T_list.front());
    out.envelope_ok = true;
    for (std::size_t i = 1; i < T_list.size(); ++i) {
        if (out.intensity[i].value >=
            out.envelope_C / std::log(T_list[i]) + 3.0 * out.intensity[i].se)
            out.envelope_ok = false;
    }
    // decay verdict: the estimate at the top of the ladder sits strictly
    // below the one at the bottom
    out.monotone_ok =
        T_list.size() < 2 || out.intensity.back().value < out.intensity.front().value;
    return out;
}

ConvergenceEstimates estimate_intensity_convergence(const KernelSpec& base, Regime regime,
                                                    double mu,
                                                    const std::vector<double>& T_list,
                                                    const McConfig& mc, int k_override) {
    if (mc.reps < 100)
        throw InvalidParameter("estimate_intensity_convergence: reps must be >= 100");
    if (!std::is_sorted(T_list.begin(), T_list.end()) || T_list.front() < 50.0)
        throw InvalidParameter(
            "estimate_intensity_convergence: T_list must be increasing with min >= 50");
    return run_convergence(base, regime, mu, T_list, mc, k_override);
}

FunctionalEstimates estimate_counting_functionals(const KernelSpec& base, Regime regime,
                                                  double mu, double T, const McConfig& mc,
                                                  int k_override) {
    ConvergenceEstimates conv = run_convergence(base, regime, mu, {T}, mc, k_override);
    FunctionalEstimates out;
    out.integrated_intensity = conv.integrated.front();
    out.counting = conv.counting.front();
    out.martingale = conv.martingale.front();
    return out;
}

}  // namespace nearcrit
