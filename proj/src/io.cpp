#include "mexp/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

namespace mexp::io {

namespace {

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double number_field(const nlohmann::json& j, const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    const auto& v = j.at(key);
    if (!v.is_number()) throw UsageError(std::string("model spec field '") + key + "' must be a number");
    return v.get<double>();
}

}  // namespace

std::string tool_version() { return "1.0.0"; }

ModelSpec parse_model_spec(const nlohmann::json& j) {
    if (!j.is_object()) throw UsageError("model spec must be a JSON object");
    static const char* known[] = {"type", "a", "b", "sigma", "p", "x0", "t", "beta", "M", "c"};
    for (const auto& item : j.items()) {
        bool ok = false;
        for (const char* k : known) ok = ok || item.key() == k;
        if (!ok) throw UsageError("unknown model spec field '" + item.key() + "'");
    }
    ModelSpec m;
    if (j.contains("type")) {
        if (!j.at("type").is_string()) throw UsageError("model spec field 'type' must be a string");
        m.type = j.at("type").get<std::string>();
    }
    if (m.type != "cir" && m.type != "cev" && m.type != "custom") {
        throw UsageError("model spec field 'type' must be one of cir, cev, custom");
    }
    m.a = number_field(j, "a", m.a);
    m.b = number_field(j, "b", m.b);
    m.sigma = number_field(j, "sigma", m.sigma);
    m.p = number_field(j, "p", m.type == "cev" ? 0.75 : m.p);
    m.x0 = number_field(j, "x0", m.x0);
    m.t = number_field(j, "t", m.t);
    m.beta = number_field(j, "beta", m.beta);
    m.M = number_field(j, "M", m.M);
    m.c = number_field(j, "c", m.c);
    return m;
}

ModelSpec load_model_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open model spec '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw UsageError("model spec '" + path + "' is not valid JSON: " + e.what());
    }
    return parse_model_spec(j);
}

nlohmann::json to_json(const ModelSpec& m) {
    return nlohmann::json{{"type", m.type}, {"a", m.a}, {"b", m.b},       {"sigma", m.sigma}, {"p", m.p},
                          {"x0", m.x0},     {"t", m.t}, {"beta", m.beta}, {"M", m.M},         {"c", m.c}};
}

void Table::add(std::vector<double> row) {
    if (row.size() != columns.size()) throw std::logic_error("row width does not match the header");
    rows.push_back(std::move(row));
}

std::string format_csv(const nlohmann::json& manifest, const Table& table) {
    std::ostringstream os;
    os << "# manifest: " << manifest.dump() << '\n';
    for (std::size_t i = 0; i < table.columns.size(); ++i) os << (i ? "," : "") << table.columns[i];
    os << '\n';
    for (const auto& r : table.rows) {
        for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << format_number(r[i]);
        os << '\n';
    }
    return os.str();
}

void write_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    const fs::path dir = target.has_parent_path() ? target.parent_path() : fs::path(".");
    const fs::path tmp = dir / ("." + target.filename().string() + ".tmp." + std::to_string(::getpid()));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
        out << content;
        out.flush();
        if (!out) throw std::runtime_error("write to '" + tmp.string() + "' failed");
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp);
        throw std::runtime_error("cannot move output into '" + path + "': " + ec.message());
    }
}

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) throw UsageError("empty entry in number list '" + s + "'");
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            throw UsageError("'" + item + "' is not a number");
        }
        if (used != item.size()) throw UsageError("'" + item + "' is not a number");
        out.push_back(v);
    }
    if (out.empty()) throw UsageError("empty number list");
    return out;
}

}  // namespace mexp::io
