// nearcrit: stochastic experiments on near-critical self-exciting processes
// and their diffusion limits, driven by one shared Poisson field.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "nearcrit/estimators.hpp"
#include "nearcrit/hawkes.hpp"
#include "nearcrit/limit_process.hpp"
#include "nearcrit/parallel.hpp"
#include "nearcrit/report.hpp"
#include "nearcrit/resolvent.hpp"

using namespace nearcrit;
namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitRuleFailed = 2;

std::vector<double> parse_ladder(const std::string& text) {
    // "50,100,200" or "64..4096" (doubling), or a mix
    std::vector<double> out;
    std::string token;
    std::stringstream ss(text);
    while (std::getline(ss, token, ',')) {
        auto dots = token.find("..");
        if (dots == std::string::npos) {
            out.push_back(std::stod(token));
        } else {
            double lo = std::stod(token.substr(0, dots));
            double hi = std::stod(token.substr(dots + 2));
            for (double v = lo; v <= hi * (1.0 + 1e-12); v *= 2.0) out.push_back(v);
        }
    }
    if (out.empty()) throw InvalidParameter("empty ladder: " + text);
    return out;
}

KernelSpec kernel_from(const std::string& family, double beta) {
    if (family == "exponential" || family == "exp") return make_exponential_kernel(beta);
    if (family == "gamma2") return make_gamma2_kernel(beta);
    throw InvalidParameter("unknown kernel family: " + family);
}

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

nlohmann::json config_echo(std::initializer_list<std::pair<std::string, nlohmann::json>> kv) {
    nlohmann::json j;
    for (auto& [k, v] : kv) j[k] = v;
    return j;
}

struct CommonArgs {
    uint64_t seed = 0;
    int threads = 0;
    std::string out = ".";
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--seed", args.seed, "master seed")->envname("NEARCRIT_SEED");
    cmd->add_option("--threads", args.threads, "worker threads (0 = machine parallelism)");
    cmd->add_option("--out", args.out, "output directory");
}

int cmd_simulate(const std::string& regime_s, const std::string& kernel_s, double beta,
                 double mu, double T, int grid, const CommonArgs& common) {
    Timer timer;
    Regime regime = parse_regime(regime_s);
    auto sk = scale_kernel(kernel_from(kernel_s, beta), regime, T);
    double theta = auto_theta_ceiling(sk, mu);
    int k = default_cell_count(T);
    RescaledPaths rp;
    int attempt = 0;
    for (;; theta *= 2.0, ++attempt) {
        if (attempt >= 8) throw CapacityError("simulate: ceiling retries exhausted");
        try {
            StreamContext sc{common.seed, 0, uint64_t(attempt)};
            auto field = sample_poisson_field(T, theta, k, sc);
            auto hp = simulate_hawkes(sk, mu, field, grid);
            rp = rescaled_paths(hp, grid);
            break;
        } catch (const CapacityError&) {
            continue;
        }
    }
    fs::create_directories(common.out);
    std::vector<std::vector<std::string>> rows;
    for (int i = 0; i <= grid; ++i)
        rows.push_back({format_float(double(i) / grid), format_float(rp.Lambda[i]),
                        format_float(rp.H_scaled[i]), format_float(rp.martingale[i])});
    write_csv((fs::path(common.out) / "path.csv").string(), "simulate v1",
              {"t", "Lambda", "H_scaled", "martingale_scaled"}, rows);
    ExperimentReport rep;
    rep.payload = {{"command", "simulate"},
                   {"config", config_echo({{"regime", regime_s},
                                           {"kernel", kernel_s},
                                           {"beta", beta},
                                           {"mu", mu},
                                           {"T", T},
                                           {"grid", grid},
                                           {"seed", common.seed}})},
                   {"theta_ceiling", theta},
                   {"attempts", attempt + 1}};
    rep.wall_clock_seconds = timer.seconds();
    rep.threads = 1;
    rep.save(common.out);
    return kExitOk;
}

int cmd_resolvent(const std::string& kernel_s, double beta, const std::string& regime_s,
                  const std::string& T_text, int n, const CommonArgs& common) {
    Timer timer;
    Regime regime = parse_regime(regime_s);
    auto T_list = parse_ladder(T_text);
    auto base = kernel_from(kernel_s, beta);
    std::vector<double> dist, sups;
    fs::create_directories(common.out);
    for (double T : T_list) {
        auto rt = solve_resolvent(scale_kernel(base, regime, T), n);
        dist.push_back(l2_distance_on_unit(rt));
        sups.push_back(rt.sup_psi());
        std::vector<std::vector<double>> plot;
        for (int i = 0; i <= rt.n; ++i)
            plot.push_back({rt.grid[i], rt.psi_values[i], rt.rho_values[i], rt.d_values[i]});
        char name[64];
        std::snprintf(name, sizeof(name), "resolvent_T%g.dat", T);
        write_plot_data((fs::path(common.out) / name).string(), {"t", "psi", "rho", "d"}, plot);
    }
    bool exact_match = true;
    for (double d : dist) exact_match = exact_match && d < 1e-8;
    double slope = 0.0;
    if (T_list.size() >= 3 && !exact_match)
        slope = fit_rate(T_list, dist, {}).slope;
    bool pass = exact_match || T_list.size() < 3 || slope <= -0.45;

    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < T_list.size(); ++i)
        rows.push_back({format_float(T_list[i]), std::string(1, regime_symbol(regime)),
                        format_float(dist[i]), format_float(sups[i]), format_float(slope)});
    write_csv((fs::path(common.out) / "resolvent.csv").string(), "resolvent v1",
              {"T", "regime", "l2_distance", "sup_psi", "fitted_slope"}, rows);
    ExperimentReport rep;
    rep.payload = {{"command", "resolvent"},
                   {"config", config_echo({{"kernel", kernel_s},
                                           {"beta", beta},
                                           {"regime", regime_s},
                                           {"T", T_text},
                                           {"n", n}})},
                   {"fitted_slope", slope},
                   {"distances", dist},
                   {"pass", pass}};
    rep.wall_clock_seconds = timer.seconds();
    rep.save(common.out);
    return pass ? kExitOk : kExitRuleFailed;
}

int cmd_couple_diagnostics(const std::string& T_text, int k, int reps,
                           const CommonArgs& common) {
    Timer timer;
    McConfig mc{reps, common.seed, common.threads};
    auto T_list = parse_ladder(T_text);
    auto res = estimate_cell_coupling(T_list, k, mc);
    fs::create_directories(common.out);
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < T_list.size(); ++i)
        rows.push_back({format_float(T_list[i]), std::to_string(k),
                        format_float(res.estimates[i].value),
                        format_float(res.estimates[i].se)});
    write_csv((fs::path(common.out) / "cell_coupling.csv").string(), "couple-diagnostics v1",
              {"T", "k", "mean_sq_cell_diff", "stderr"}, rows);
    ExperimentReport rep;
    rep.payload = {{"command", "couple-diagnostics"},
                   {"config", config_echo({{"T", T_text},
                                           {"k", k},
                                           {"reps", reps},
                                           {"seed", common.seed}})},
                   {"result", to_json(res)}};
    rep.wall_clock_seconds = timer.seconds();
    rep.threads = mc.threads;
    rep.save(common.out);
    bool pass = T_list.size() < 3 || (res.fit.slope <= -1.7 && res.fit.slope >= -2.3);
    return pass ? kExitOk : kExitRuleFailed;
}

int cmd_limit(const std::string& regime_s, double mu, double m, int k, int reps,
              const std::string& driver, double T, const CommonArgs& common) {
    Timer timer;
    Regime regime = parse_regime(regime_s);
    if (driver == "coupled" && T <= 0.0) T = std::pow(double(k), 1.25);
    fs::create_directories(common.out);
    std::vector<std::vector<std::string>> rows;
    for (int rep = 0; rep < reps; ++rep) {
        LimitPath lp;
        if (driver == "coupled") {
            double theta = 4.0 * (mu + mu * std::exp(1.0 / m));
            for (int attempt = 0;; theta *= 2.0, ++attempt) {
                if (attempt >= 8) throw CapacityError("limit: ceiling retries exhausted");
                try {
                    StreamContext sc{common.seed, uint64_t(rep), uint64_t(attempt)};
                    auto field = sample_poisson_field(T, theta, k, sc);
                    auto sheet = build_coupled_sheet(field, sc);
                    lp = simulate_limit_coupled(regime, mu, m, sheet);
                    break;
                } catch (const CapacityError&) {
                    continue;
                }
            }
        } else if (driver == "reference") {
            lp = simulate_cir_reference(regime, mu, m, common.seed, rep, k);
        } else {
            throw InvalidParameter("driver must be 'coupled' or 'reference'");
        }
        for (int i = 0; i <= lp.n; ++i)
            rows.push_back({std::to_string(rep), format_float(double(i) / lp.n),
                            format_float(lp.X[i])});
    }
    write_csv((fs::path(common.out) / "limit_paths.csv").string(), "limit v1",
              {"rep", "t", "X"}, rows);
    ExperimentReport rep;
    rep.payload = {{"command", "limit"},
                   {"config", config_echo({{"regime", regime_s},
                                           {"mu", mu},
                                           {"m", m},
                                           {"k", k},
                                           {"reps", reps},
                                           {"driver", driver},
                                           {"T", T},
                                           {"seed", common.seed}})}};
    rep.wall_clock_seconds = timer.seconds();
    rep.save(common.out);
    return kExitOk;
}

int cmd_rates(const std::string& cell_T_text, int cell_k, const std::string& k_list_text,
              double integral_T, const std::string& weight, int reps,
              const CommonArgs& common) {
    Timer timer;
    McConfig mc{reps, common.seed, common.threads};
    fs::create_directories(common.out);

    auto cell = estimate_cell_coupling(parse_ladder(cell_T_text), cell_k,
                                       McConfig{std::max(reps, 1000), common.seed,
                                                common.threads});
    std::vector<std::vector<std::string>> cell_rows;
    std::vector<std::vector<double>> cell_plot;
    for (std::size_t i = 0; i < cell.T_list.size(); ++i) {
        cell_rows.push_back({format_float(cell.T_list[i]), std::to_string(cell_k),
                             format_float(cell.estimates[i].value),
                             format_float(cell.estimates[i].se)});
        double envelope = std::exp(cell.fit.intercept) *
                          std::pow(cell.T_list[i], cell.fit.slope);
        cell_plot.push_back({cell.T_list[i], cell.estimates[i].value, cell.estimates[i].se,
                             envelope});
    }
    write_csv((fs::path(common.out) / "rates_cells.csv").string(), "rates-cells v1",
              {"T", "k", "mean_sq_cell_diff", "stderr"}, cell_rows);
    write_plot_data((fs::path(common.out) / "rates_cells.dat").string(),
                    {"x", "y", "stderr", "envelope"}, cell_plot);

    std::vector<int> k_list;
    for (double v : parse_ladder(k_list_text)) k_list.push_back(int(v));
    auto sk = scale_kernel(make_exponential_kernel(1.0), Regime::Subcritical, integral_T);
    auto integ = estimate_integral_coupling(sk, 1.0, integral_T, k_list, make_weight(weight), mc);
    std::vector<std::vector<std::string>> int_rows;
    std::vector<std::vector<double>> int_plot;
    for (std::size_t i = 0; i < k_list.size(); ++i) {
        int_rows.push_back({std::to_string(k_list[i]), format_float(integ.estimates[i].value),
                            format_float(integ.estimates[i].se),
                            format_float(integ.envelope[i])});
        int_plot.push_back({double(k_list[i]), integ.estimates[i].value, integ.estimates[i].se,
                            integ.envelope[i]});
    }
    write_csv((fs::path(common.out) / "rates_integral.csv").string(), "rates-integral v1",
              {"k", "sup_sq_estimate", "stderr", "envelope"}, int_rows);
    write_plot_data((fs::path(common.out) / "rates_integral.dat").string(),
                    {"x", "y", "stderr", "envelope"}, int_plot);

    bool slope_ok = cell.fit.slope <= -1.7 && cell.fit.slope >= -2.3;
    ExperimentReport rep;
    rep.payload = {{"command", "rates"},
                   {"config", config_echo({{"cell_T", cell_T_text},
                                           {"cell_k", cell_k},
                                           {"k_list", k_list_text},
                                           {"integral_T", integral_T},
                                           {"weight", weight},
                                           {"reps", reps},
                                           {"seed", common.seed}})},
                   {"cells", to_json(cell)},
                   {"integral", to_json(integ)},
                   {"pass", slope_ok && integ.envelope_ok}};
    rep.wall_clock_seconds = timer.seconds();
    rep.threads = mc.threads;
    rep.save(common.out);
    return (slope_ok && integ.envelope_ok) ? kExitOk : kExitRuleFailed;
}

int cmd_converge(const std::string& regime_s, const std::string& kernel_s, double beta,
                 double mu, const std::string& T_text, int reps, int k_override,
                 const CommonArgs& common) {
    Timer timer;
    Regime regime = parse_regime(regime_s);
    auto T_list = parse_ladder(T_text);
    McConfig mc{reps, common.seed, common.threads};
    auto base = kernel_from(kernel_s, beta);
    auto conv = estimate_intensity_convergence(base, regime, mu, T_list, mc, k_override);

    fs::create_directories(common.out);
    std::vector<std::vector<std::string>> rows;
    std::vector<std::vector<double>> plot;
    for (std::size_t i = 0; i < T_list.size(); ++i) {
        double env = conv.envelope_C / std::log(T_list[i]);
        rows.push_back({format_float(T_list[i]), std::to_string(conv.k_used[i]),
                        format_float(conv.intensity[i].value),
                        format_float(conv.intensity[i].se),
                        format_float(conv.integrated[i].value),
                        format_float(conv.integrated[i].se),
                        format_float(conv.counting[i].value),
                        format_float(conv.counting[i].se),
                        format_float(conv.martingale[i].value),
                        format_float(conv.martingale[i].se),
                        std::to_string(conv.intensity[i].incomplete), format_float(env)});
        plot.push_back({T_list[i], conv.intensity[i].value, conv.intensity[i].se, env});
    }
    write_csv((fs::path(common.out) / "estimates.csv").string(), "converge v1",
              {"T", "k", "intensity", "intensity_se", "integrated", "integrated_se",
               "counting", "counting_se", "martingale", "martingale_se", "incomplete",
               "envelope"},
              rows);
    write_plot_data((fs::path(common.out) / "converge.dat").string(),
                    {"x", "y", "stderr", "envelope"}, plot);

    bool pass = conv.envelope_ok && conv.monotone_ok;
    ExperimentReport rep;
    rep.payload = {{"command", "converge"},
                   {"config", config_echo({{"regime", regime_s},
                                           {"kernel", kernel_s},
                                           {"beta", beta},
                                           {"mu", mu},
                                           {"T", T_text},
                                           {"reps", reps},
                                           {"k", k_override},
                                           {"seed", common.seed}})},
                   {"result", to_json(conv)},
                   {"pass", pass}};
    rep.wall_clock_seconds = timer.seconds();
    rep.threads = mc.threads;
    rep.save(common.out);
    return pass ? kExitOk : kExitRuleFailed;
}

int cmd_report(const std::string& input) {
    fs::path p(input);
    if (fs::is_directory(p)) p /= "report.json";
    auto j = nlohmann::json::parse(read_text(p.string()));
    std::printf("command: %s\n", j.value("command", std::string("?")).c_str());
    if (j.contains("config")) std::printf("config: %s\n", j["config"].dump().c_str());
    bool pass = true;
    if (j.contains("pass")) {
        pass = j["pass"].get<bool>();
        std::printf("pass: %s\n", pass ? "true" : "false");
    }
    if (j.contains("result")) {
        const auto& r = j["result"];
        for (auto& key : {"envelope_ok", "monotone_ok"})
            if (r.contains(key))
                std::printf("%s: %s\n", key, r[key].get<bool>() ? "true" : "false");
    }
    return pass ? kExitOk : kExitRuleFailed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"near-critical self-exciting process experiments"};
    app.require_subcommand(1);
    app.set_config("--config", "", "key=value config file (flags take precedence)");
    app.allow_config_extras(false);

    CommonArgs common;

    auto* sim = app.add_subcommand("simulate", "one rescaled path of the process");
    std::string sim_regime = "critical", sim_kernel = "exponential";
    double sim_beta = 1.0, sim_mu = 1.0, sim_T = 100.0;
    int sim_grid = 512;
    sim->add_option("--regime", sim_regime);
    sim->add_option("--kernel", sim_kernel);
    sim->add_option("--beta", sim_beta);
    sim->add_option("--mu", sim_mu);
    sim->add_option("--T", sim_T);
    sim->add_option("--grid", sim_grid);
    add_common(sim, common);

    auto* res = app.add_subcommand("resolvent", "renewal-equation tables and L2 rates");
    std::string res_kernel = "exponential", res_regime = "critical", res_T = "64..4096";
    double res_beta = 1.0;
    int res_n = 2048;
    res->add_option("--kernel", res_kernel);
    res->add_option("--beta", res_beta);
    res->add_option("--regime", res_regime);
    res->add_option("--T", res_T);
    res->add_option("--n", res_n);
    add_common(res, common);

    auto* cpl = app.add_subcommand("couple-diagnostics", "per-cell coupling error in T");
    std::string cpl_T = "25,50,100,200";
    int cpl_k = 10, cpl_reps = 10000;
    cpl->add_option("--T", cpl_T);
    cpl->add_option("--k", cpl_k);
    cpl->add_option("--reps", cpl_reps);
    add_common(cpl, common);

    auto* lim = app.add_subcommand("limit", "limit-process paths");
    std::string lim_regime = "critical", lim_driver = "reference";
    double lim_mu = 1.0, lim_m = 1.0, lim_T = 0.0;
    int lim_k = 64, lim_reps = 1;
    lim->add_option("--regime", lim_regime);
    lim->add_option("--mu", lim_mu);
    lim->add_option("--m", lim_m);
    lim->add_option("--k", lim_k);
    lim->add_option("--reps", lim_reps);
    lim->add_option("--driver", lim_driver)->check(CLI::IsMember({"coupled", "reference"}));
    lim->add_option("--T", lim_T);
    add_common(lim, common);

    auto* rat = app.add_subcommand("rates", "cell and integral coupling rates");
    std::string rat_cell_T = "25,50,100,200", rat_k_list = "5,34,200", rat_weight = "cosine";
    int rat_cell_k = 10, rat_reps = 500;
    double rat_T = 200.0;
    rat->add_option("--T", rat_cell_T, "T ladder for the cell error");
    rat->add_option("--k", rat_cell_k, "cell resolution for the cell error");
    rat->add_option("--k-list", rat_k_list, "k ladder for the integral error");
    rat->add_option("--integral-T", rat_T);
    rat->add_option("--weight", rat_weight);
    rat->add_option("--reps", rat_reps);
    add_common(rat, common);

    auto* cnv = app.add_subcommand("converge", "sup-distance to the limit across T");
    std::string cnv_regime = "sub", cnv_kernel = "exponential", cnv_T = "50,100,200,400";
    double cnv_beta = 1.0, cnv_mu = 1.0;
    int cnv_reps = 200, cnv_k = 0;
    cnv->add_option("--regime", cnv_regime);
    cnv->add_option("--kernel", cnv_kernel);
    cnv->add_option("--beta", cnv_beta);
    cnv->add_option("--mu", cnv_mu);
    cnv->add_option("--T", cnv_T);
    cnv->add_option("--reps", cnv_reps);
    cnv->add_option("--k", cnv_k, "override the cell count (0 = floor(T^0.8)+1)");
    add_common(cnv, common);

    auto* repc = app.add_subcommand("report", "summarize a saved report");
    std::string rep_input = ".";
    repc->add_option("--input", rep_input, "report.json or its directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed())
            return cmd_simulate(sim_regime, sim_kernel, sim_beta, sim_mu, sim_T, sim_grid,
                                common);
        if (res->parsed())
            return cmd_resolvent(res_kernel, res_beta, res_regime, res_T, res_n, common);
        if (cpl->parsed()) return cmd_couple_diagnostics(cpl_T, cpl_k, cpl_reps, common);
        if (lim->parsed())
            return cmd_limit(lim_regime, lim_mu, lim_m, lim_k, lim_reps, lim_driver, lim_T,
                             common);
        if (rat->parsed())
            return cmd_rates(rat_cell_T, rat_cell_k, rat_k_list, rat_T, rat_weight, rat_reps,
                             common);
        if (cnv->parsed())
            return cmd_converge(cnv_regime, cnv_kernel, cnv_beta, cnv_mu, cnv_T, cnv_reps,
                                cnv_k, common);
        if (repc->parsed()) return cmd_report(rep_input);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitError;
    }
    return kExitError;
}
