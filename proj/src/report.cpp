#include "nearcrit/report.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace nearcrit {

std::string format_float(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += "\"";
    return out;
}

void write_csv(const std::string& path, const std::string& schema,
               const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path);
    f << "# schema: " << schema << "\n";
    for (std::size_t i = 0; i < header.size(); ++i)
        f << (i ? "," : "") << csv_field(header[i]);
    f << "\n";
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) f << (i ? "," : "") << csv_field(row[i]);
        f << "\n";
    }
}

void write_plot_data(const std::string& path, const std::vector<std::string>& columns,
                     const std::vector<std::vector<double>>& rows) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path);
    f << "#";
    for (const auto& c : columns) f << " " << c;
    f << "\n";
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) f << (i ? " " : "") << format_float(row[i]);
        f << "\n";
    }
}

void write_text(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path);
    f << content;
}

std::string read_text(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

nlohmann::json to_json(const Estimate& e) {
    return {{"value", e.value}, {"stderr", e.se}, {"reps", e.reps}, {"incomplete", e.incomplete}};
}

nlohmann::json to_json(const RateFit& f) {
    return {{"slope", f.slope}, {"intercept", f.intercept}, {"r2", f.r2}};
}

nlohmann::json to_json(const CellCouplingResult& r) {
    nlohmann::json est = nlohmann::json::array();
    for (std::size_t i = 0; i < r.T_list.size(); ++i) {
        auto e = to_json(r.estimates[i]);
        e["T"] = r.T_list[i];
        est.push_back(e);
    }
    return {{"k", r.k}, {"estimates", est}, {"fit", to_json(r.fit)}};
}

nlohmann::json to_json(const IntegralCouplingResult& r) {
    nlohmann::json est = nlohmann::json::array();
    for (std::size_t i = 0; i < r.k_list.size(); ++i) {
        auto e = to_json(r.estimates[i]);
        e["k"] = r.k_list[i];
        e["envelope"] = r.envelope[i];
        est.push_back(e);
    }
    return {{"T", r.T},
            {"weight", r.weight},
            {"estimates", est},
            {"envelope_C", r.envelope_C},
            {"envelope_ok", r.envelope_ok}};
}

nlohmann::json to_json(const ConvergenceEstimates& r) {
    nlohmann::json est = nlohmann::json::array();
    for (std::size_t i = 0; i < r.T_list.size(); ++i) {
        est.push_back({{"T", r.T_list[i]},
                       {"k", r.k_used[i]},
                       {"intensity", to_json(r.intensity[i])},
                       {"integrated_intensity", to_json(r.integrated[i])},
                       {"counting", to_json(r.counting[i])},
                       {"martingale", to_json(r.martingale[i])}});
    }
    return {{"regime", std::string(1, regime_symbol(r.regime))},
            {"kernel", r.kernel},
            {"beta", r.beta},
            {"mu", r.mu},
            {"estimates", est},
            {"envelope_C", r.envelope_C},
            {"envelope_ok", r.envelope_ok},
            {"monotone_ok", r.monotone_ok}};
}

void ExperimentReport::save(const std::string& out_dir) const {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    write_text((fs::path(out_dir) / "report.json").string(), payload.dump(2) + "\n");
    nlohmann::json meta = {{"wall_clock_seconds", wall_clock_seconds}, {"threads", threads}};
    write_text((fs::path(out_dir) / "meta.json").string(), meta.dump(2) + "\n");
}

}  // namespace nearcrit
