#pragma once

#include "mexp/models.hpp"

#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace mexp::io {

/// Malformed input (CLI exit code 1); the message names the offending field.
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

std::string tool_version();

/// Parses {"type": "cir"|"cev"|"custom", "a", "b", "sigma", "p", "x0", "t", "beta", "M", "c"}.
ModelSpec parse_model_spec(const nlohmann::json& j);
ModelSpec load_model_spec(const std::string& path);
nlohmann::json to_json(const ModelSpec& m);

/// Fixed-column numeric table.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    void add(std::vector<double> row);
};

/// "# manifest: {json}" followed by the header and rows; values use round-trip precision.
std::string format_csv(const nlohmann::json& manifest, const Table& table);

/// Writes through a temporary file in the same directory and renames it into place.
void write_atomic(const std::string& path, const std::string& content);

/// Comma-separated list of numbers.
std::vector<double> parse_list(const std::string& s);

}  // namespace mexp::io
