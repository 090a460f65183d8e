#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "nearcrit/estimators.hpp"

namespace nearcrit {

/// 17 significant digits, round-trip exact.
std::string format_float(double v);

/// RFC-4180 quoting: fields with commas, quotes or newlines get quoted.
std::string csv_field(const std::string& s);

/// CSV with a "# schema: <name> v<n>" comment line, then header, then rows.
void write_csv(const std::string& path, const std::string& schema,
               const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

/// Plain-text plot data: space-separated columns under a '#' header.
void write_plot_data(const std::string& path, const std::vector<std::string>& columns,
                     const std::vector<std::vector<double>>& rows);

void write_text(const std::string& path, const std::string& content);
std::string read_text(const std::string& path);

nlohmann::json to_json(const Estimate& e);
nlohmann::json to_json(const RateFit& f);
nlohmann::json to_json(const CellCouplingResult& r);
nlohmann::json to_json(const IntegralCouplingResult& r);
nlohmann::json to_json(const ConvergenceEstimates& r);

/// Deterministic payload (report.json) + timing sidecar (meta.json). The
/// payload is a pure function of (config, seed); wall-clock lives only in
/// the sidecar.
struct ExperimentReport {
    nlohmann::json payload;
    double wall_clock_seconds = 0.0;
    int threads = 0;

    void save(const std::string& out_dir) const;
};

}  // namespace nearcrit
