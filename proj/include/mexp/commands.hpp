#pragma once

#include "mexp/cev.hpp"
#include "mexp/fixedpoint.hpp"
#include "mexp/io.hpp"
#include "mexp/legendre.hpp"
#include "mexp/models.hpp"

#include <string>

#include <json.hpp>

namespace mexp {

/// Result of one front-end command: a CSV table, optional JSON diagnostics and optional plain text.
struct CommandOutput {
    nlohmann::json manifest;
    io::Table table;
    nlohmann::json diagnostics;
    std::string text;

    bool has_table() const { return !table.columns.empty(); }
    std::string csv() const { return io::format_csv(manifest, table); }
};

/// Runs a request {"command": name, "model": {...}, "args": {...}}. The returned manifest is the
/// request plus the tool version, so running the manifest again reproduces the output exactly.
CommandOutput run_command(const nlohmann::json& request);

/// Reads the "# manifest:" line of a CSV produced by run_command.
nlohmann::json read_manifest(const std::string& csv_path);

CevParams cev_params(const ModelSpec& m);
/// Square-root diffusion for a "custom" model: B(y) = -b y + c y^beta.
SdeSpec custom_spec(const ModelSpec& m);

/// Log-MGF of a custom model in the gap variable, sampled from the fixed-point solution.
LogMgf custom_log_mgf(const ModelSpec& m, const FixedPointConfig& config);

/// ln E exp(mu X_t) from a fixed-point solution via Gamma(t, x) with mu = mu*_t - 1/(xi_t (x + mu*_t)).
double log_mgf_from_gamma(const GammaSolution& sol, double t, double mu);

}  // namespace mexp
