#include "mexp/acceptance.hpp"
#include "mexp/commands.hpp"
#include "mexp/errors.hpp"
#include "mexp/io.hpp"

#include <chrono>
#include <cstdlib>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

namespace {

using nlohmann::json;

enum class Kind { number, integer, text, list };

struct Flag {
    std::string name;  // CLI flag without dashes
    std::string key;   // argument key in the request
    Kind kind;
    std::string help;
};

const std::map<std::string, Flag> kFlags = {
    {"b", {"b", "b", Kind::number, "mean-reversion rate"}},
    {"sigma", {"sigma", "sigma", Kind::number, "diffusion scale"}},
    {"t", {"t", "t", Kind::number, "horizon"}},
    {"mu", {"mu", "mu", Kind::list, "comma-separated moments"}},
    {"x", {"x", "x", Kind::list, "comma-separated levels"}},
    {"order", {"order", "order", Kind::text, "leading or refined"}},
    {"weight", {"weight", "weight", Kind::text, "one, identity or power:r"}},
    {"n-terms", {"n-terms", "n_terms", Kind::integer, "omega-series terms (at most 30)"}},
    {"fp-M", {"fp-M", "M", Kind::number, "lower edge of the fixed-point x-grid (0 = automatic)"}},
    {"x-max", {"x-max", "X_max", Kind::number, "upper edge of the fixed-point x-grid"}},
    {"nx", {"nx", "nx", Kind::integer, "fixed-point x-grid size"}},
    {"tol", {"tol", "tol", Kind::number, "fixed-point tolerance"}},
    {"max-iter", {"max-iter", "max_iter", Kind::integer, "fixed-point iteration cap"}},
    {"fp-order", {"fp-order", "fp_order", Kind::text, "drift expectation order in the fixed point"}},
    {"mode", {"mode", "mode", Kind::text, "ccdf or mgf"}},
    {"paths", {"paths", "paths", Kind::integer, "number of paths"}},
    {"steps", {"steps", "steps", Kind::integer, "time steps per path"}},
    {"seed", {"seed", "seed", Kind::integer, "64-bit seed"}},
    {"scheme", {"scheme", "scheme", Kind::text, "euler_full_truncation or euler_reflection"}},
    {"level", {"level", "x", Kind::number, "tilt level that sets Z(x)"}},
    {"sandwich-source", {"sandwich-source", "sandwich_source", Kind::text, "fixed-point or empirical"}},
};

const std::vector<std::pair<std::string, std::string>> kModelFlags = {
    {"type", "cir, cev or custom"}, {"a", "drift level"},           {"model-b", "mean-reversion rate"},
    {"model-sigma", "diffusion scale"}, {"p", "CEV exponent"},     {"x0", "initial state"},
    {"v0", "initial CEV state"},    {"model-t", "horizon"},         {"beta", "drift-perturbation exponent"},
    {"M", "regularity threshold"},  {"c", "drift-perturbation scale"},
};

struct Sub {
    CLI::App* app = nullptr;
    std::string command;
    bool model = false;
    std::map<std::string, std::string> values;
    std::map<std::string, std::string> model_values;
    std::string model_path;
    std::string out;
};

void add_flags(Sub& s, const std::vector<std::string>& names) {
    for (const auto& n : names) {
        const Flag& f = kFlags.at(n);
        std::string spec = "--" + f.name;
        if (n == "x") spec += ",--x-grid";
        s.app->add_option(spec, s.values[n], f.help);
    }
}

std::string model_flag(const std::string& name) { return name.rfind("model-", 0) == 0 ? name.substr(6) : name; }

void add_model(Sub& s) {
    s.model = true;
    s.app->add_option("--model", s.model_path, "JSON model spec file");
    for (const auto& [name, help] : kModelFlags) {
        s.app->add_option("--" + model_flag(name), s.model_values[name], help);
    }
}

json convert(const Flag& f, const std::string& v) {
    try {
        switch (f.kind) {
            case Kind::number: {
                std::size_t used = 0;
                const double d = std::stod(v, &used);
                if (used != v.size()) throw std::invalid_argument(v);
                return d;
            }
            case Kind::integer: {
                std::size_t used = 0;
                const long long i = std::stoll(v, &used);
                if (used != v.size()) throw std::invalid_argument(v);
                return i;
            }
            case Kind::text:
                return v;
            case Kind::list:
                return mexp::io::parse_list(v);
        }
    } catch (const mexp::io::UsageError&) {
        throw mexp::io::UsageError("--" + f.name + ": '" + v + "' is not a valid number list");
    } catch (const std::exception&) {
        throw mexp::io::UsageError("--" + f.name + ": '" + v + "' is not a valid value");
    }
    return nullptr;
}

json build_request(const Sub& s) {
    json args = json::object();
    for (const auto& [name, value] : s.values) {
        if (s.app->count("--" + kFlags.at(name).name) == 0) continue;
        args[kFlags.at(name).key] = convert(kFlags.at(name), value);
    }
    json req = {{"command", s.command}, {"args", args}};
    if (!s.model) return req;
    json model = json::object();
    if (!s.model_path.empty()) model = mexp::io::to_json(mexp::io::load_model_spec(s.model_path));
    for (const auto& [name, value] : s.model_values) {
        const std::string flag = model_flag(name);
        if (s.app->count("--" + flag) == 0) continue;
        const std::string key = flag == "v0" ? "x0" : flag;
        if (key == "type") {
            model[key] = value;
        } else {
            model[key] = convert(Flag{flag, key, Kind::number, ""}, value);
        }
    }
    req["model"] = model;
    return req;
}

void emit(const mexp::CommandOutput& out, const std::string& path, double seconds) {
    if (!out.text.empty() && path.empty()) {
        std::cout << out.text << '\n';
        return;
    }
    const std::string csv = out.csv();
    if (path.empty()) {
        std::cout << csv;
        return;
    }
    mexp::io::write_atomic(path, csv);
    json side = {{"manifest", out.manifest},
                 {"outputs", {path}},
                 {"timing_seconds", seconds},
                 {"diagnostics", out.diagnostics.is_null() ? json::object() : out.diagnostics}};
    mexp::io::write_atomic(path + ".manifest.json", side.dump(2) + "\n");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Moment explosion, tail asymptotics and verification tools"};
    app.require_subcommand(1);
    int threads = 0;
    app.add_option("--threads", threads, "worker threads (default: MEXP_THREADS or hardware)");

    std::vector<Sub> subs;
    subs.reserve(16);
    auto make = [&](const std::string& name, const std::string& help) -> Sub& {
        subs.push_back(Sub{});
        Sub& s = subs.back();
        s.command = name;
        s.app = app.add_subcommand(name, help);
        s.app->add_option("--out", s.out, "CSV output path (stdout when omitted)");
        return s;
    };

    {
        Sub& s = make("critical-moment", "critical moment of a CIR process");
        add_flags(s, {"b", "sigma", "t"});
    }
    {
        Sub& s = make("cir-mgf", "closed-form CIR log-MGF");
        add_model(s);
        add_flags(s, {"mu"});
    }
    {
        Sub& s = make("cir-ccdf", "exact CIR tail probability");
        add_model(s);
        add_flags(s, {"x"});
    }
    {
        Sub& s = make("legendre", "conjugate tilt, its derivative and the rate function");
        add_model(s);
        add_flags(s, {"x", "n-terms", "fp-M", "x-max", "nx", "tol", "max-iter", "fp-order"});
    }
    {
        Sub& s = make("tail", "tail probability expansion");
        add_model(s);
        add_flags(s, {"x", "order", "n-terms", "fp-M", "x-max", "nx", "tol", "max-iter", "fp-order"});
    }
    {
        Sub& s = make("tilt-ratio", "tilted expectation of a weight function");
        add_model(s);
        add_flags(s, {"x", "order", "weight", "n-terms", "fp-M", "x-max", "nx", "tol", "max-iter", "fp-order"});
    }
    {
        Sub& s = make("fixed-point", "Picard solution of the remainder equation");
        add_model(s);
        add_flags(s, {"fp-M", "x-max", "nx", "tol", "max-iter", "fp-order"});
    }
    {
        Sub& s = make("cev", "CEV log-MGF expansion and tail");
        add_model(s);
        add_flags(s, {"x", "n-terms"});
    }
    {
        Sub& s = make("mc", "Monte Carlo estimates with standard errors");
        add_model(s);
        add_flags(s, {"mode", "x", "mu", "paths", "steps", "seed", "scheme"});
    }
    {
        Sub& s = make("squeeze", "comparison with the bounding CIR processes");
        add_model(s);
        add_flags(s, {"level", "paths", "steps", "seed", "scheme", "sandwich-source", "fp-M", "x-max", "nx", "tol",
                      "max-iter", "fp-order"});
    }

    std::string replay_path, replay_out;
    CLI::App* replay = app.add_subcommand("replay", "rerun the manifest stored in a CSV");
    replay->add_option("manifest", replay_path, "CSV produced by an earlier run")->required();
    replay->add_option("--out", replay_out, "CSV output path (stdout when omitted)");

    std::string suite = "primary";
    std::vector<int> criteria;
    CLI::App* accept = app.add_subcommand("accept", "run the acceptance suite");
    accept->add_option("--suite", suite, "suite name (primary)");
    accept->add_option("--criterion", criteria, "run only these criteria");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    if (threads > 0) ::setenv("MEXP_THREADS", std::to_string(threads).c_str(), 1);

    try {
        if (accept->parsed()) {
            if (suite != "primary") throw mexp::io::UsageError("--suite: only 'primary' is available");
            if (criteria.empty()) criteria = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
            bool all = true;
            for (int id : criteria) {
                const auto r = mexp::run_criterion(id);
                std::cout << mexp::format_result(r) << std::endl;
                all = all && r.pass;
            }
            return all ? 0 : 4;
        }
        const auto start = std::chrono::steady_clock::now();
        mexp::CommandOutput out;
        std::string path;
        if (replay->parsed()) {
            out = mexp::run_command(mexp::read_manifest(replay_path));
            path = replay_out;
        } else {
            for (auto& s : subs) {
                if (!s.app->parsed()) continue;
                out = mexp::run_command(build_request(s));
                path = s.out;
            }
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        emit(out, path, secs);
        return 0;
    } catch (const mexp::io::UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 1;
    } catch (const mexp::DomainError& e) {
        std::cerr << "domain error: " << e.what() << '\n';
        return 2;
    } catch (const mexp::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return 3;
    } catch (const mexp::ResourceError& e) {
        std::cerr << "resource error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
}
