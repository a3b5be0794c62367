#include "mfl/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "mfl/csv.hpp"
#include "mfl/equilibrium.hpp"
#include "mfl/error.hpp"
#include "mfl/experiments.hpp"
#include "mfl/riccati.hpp"
#include "mfl/strategies.hpp"

namespace mfl::cli {

namespace {

namespace pt = boost::property_tree;
namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

const std::vector<std::string> kCommands{"riccati", "solve-mfg", "solve-nplayer", "baseline",
                                         "compare", "converge",  "paths"};

const std::map<std::string, std::vector<std::string>> kKeys{
    {"coefficients", {"eta", "kappa", "lambda", "T", "file"}},
    {"distribution", {"kind", "mean", "w_sell", "mean_sell", "w_buy", "mean_buy", "positions", "positions_file"}},
    {"solver", {"M", "delta", "N", "tol", "x_nodes", "Ns"}},
    {"output", {"dir", "x_samples"}},
};

// Short spellings accepted on the command line.
const std::map<std::string, std::string> kAliases{
    {"solver.M", "M"}, {"solver.Ns", "Ns"}, {"solver.N", "N"}, {"solver.delta", "delta"}, {"output.dir", "out"}};

struct HelpRequested {
    std::string text;
};

bool known_key(const std::string& section, const std::string& key) {
    const auto it = kKeys.find(section);
    return it != kKeys.end() && std::find(it->second.begin(), it->second.end(), key) != it->second.end();
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::string item;
    for (char ch : text + ",") {
        if (ch == ',' || ch == ';' || std::isspace(static_cast<unsigned char>(ch))) {
            if (!item.empty()) out.push_back(item);
            item.clear();
        } else {
            item += ch;
        }
    }
    return out;
}

double to_double(const std::string& key, const std::string& text) {
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used == text.size()) return v;
    } catch (const std::exception&) {
    }
    throw ConfigError(key + ": expected a number, got '" + text + "'");
}

std::size_t to_size(const std::string& key, const std::string& text) {
    const bool digits = !text.empty() && std::all_of(text.begin(), text.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
    if (digits) {
        try {
            return static_cast<std::size_t>(std::stoull(text));
        } catch (const std::exception&) {
        }
    }
    throw ConfigError(key + ": expected a non-negative integer, got '" + text + "'");
}

class Values {
public:
    explicit Values(const pt::ptree& tree) : tree_(tree) {}

    std::optional<std::string> text(const std::string& key) const {
        const auto v = tree_.get_optional<std::string>(pt::ptree::path_type(key, '.'));
        if (!v) return std::nullopt;
        std::string s = *v;
        s.erase(0, s.find_first_not_of(" \t\"'"));
        s.erase(s.find_last_not_of(" \t\"'") + 1);
        return s;
    }
    std::optional<double> number(const std::string& key) const {
        const auto t = text(key);
        return t ? std::optional<double>(to_double(key, *t)) : std::nullopt;
    }
    std::optional<std::size_t> count(const std::string& key) const {
        const auto t = text(key);
        return t ? std::optional<std::size_t>(to_size(key, *t)) : std::nullopt;
    }
    std::optional<std::vector<double>> numbers(const std::string& key) const {
        const auto t = text(key);
        if (!t) return std::nullopt;
        std::vector<double> out;
        for (const auto& item : split_list(*t)) out.push_back(to_double(key, item));
        return out;
    }
    std::optional<std::vector<std::size_t>> counts(const std::string& key) const {
        const auto t = text(key);
        if (!t) return std::nullopt;
        std::vector<std::size_t> out;
        for (const auto& item : split_list(*t)) out.push_back(to_size(key, item));
        return out;
    }

private:
    const pt::ptree& tree_;
};

void check_structure(const pt::ptree& tree) {
    for (const auto& [section, body] : tree) {
        if (!kKeys.count(section)) {
            if (body.empty() && !body.data().empty()) throw ConfigError("unknown key " + section);
            throw ConfigError("unknown section [" + section + "]");
        }
        for (const auto& [key, value] : body)
            if (!known_key(section, key)) throw ConfigError("unknown key " + section + "." + key);
    }
}

std::string list_text(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + csv::number(v[i]);
    return s;
}

std::map<std::string, std::string> make_echo(const RunConfig& c) {
    std::map<std::string, std::string> e;
    auto put = [&](const std::string& k, const std::optional<double>& v) {
        if (v) e[k] = csv::number(*v);
    };
    put("coefficients.eta", c.coefficients.eta);
    put("coefficients.kappa", c.coefficients.kappa);
    put("coefficients.lambda", c.coefficients.lambda);
    e["coefficients.T"] = csv::number(c.coefficients.T);
    if (!c.coefficients.file.empty()) e["coefficients.file"] = c.coefficients.file;
    if (!c.distribution.kind.empty()) e["distribution.kind"] = c.distribution.kind;
    put("distribution.mean", c.distribution.mean);
    put("distribution.w_sell", c.distribution.w_sell);
    put("distribution.mean_sell", c.distribution.mean_sell);
    put("distribution.w_buy", c.distribution.w_buy);
    put("distribution.mean_buy", c.distribution.mean_buy);
    if (!c.distribution.positions.empty()) e["distribution.positions"] = list_text(c.distribution.positions);
    if (!c.distribution.positions_file.empty()) e["distribution.positions_file"] = c.distribution.positions_file;
    e["solver.M"] = std::to_string(c.solver.M);
    put("solver.delta", c.solver.delta);
    if (c.solver.N) e["solver.N"] = std::to_string(*c.solver.N);
    e["solver.tol"] = csv::number(c.solver.tol);
    e["solver.x_nodes"] = std::to_string(c.solver.x_nodes);
    std::string ns;
    for (std::size_t i = 0; i < c.solver.Ns.size(); ++i) ns += (i ? "," : "") + std::to_string(c.solver.Ns[i]);
    e["solver.Ns"] = ns;
    e["output.dir"] = c.output.dir;
    e["output.x_samples"] = list_text(c.output.x_samples);
    return e;
}

std::vector<double> read_numbers_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read positions file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    std::vector<double> out;
    for (const auto& item : split_list(buf.str())) out.push_back(to_double("distribution.positions_file", item));
    return out;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ConfigError("cannot write '" + path.string() + "'");
    os << content;
}

template <class F>
void write_with(const fs::path& path, F&& writer) {
    std::ostringstream os;
    writer(os);
    write_file(path, os.str());
}

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json solution_summary(const EquilibriumSolution& eq) {
    json j;
    j["delta"] = num(eq.delta);
    j["x_hat"] = num(eq.x_hat);
    j["mu_T"] = num(eq.mu_T);
    j["alpha_T"] = num(eq.alpha_T);
    j["K1"] = num(eq.K1);
    j["K2"] = num(eq.K2);
    j["residual"] = eq.residual ? num(*eq.residual) : json(nullptr);
    j["model"] = eq.model == MarketModel::dropout ? "dropout" : "no_dropout";
    j["bisection_steps"] = eq.bisection_steps;
    return j;
}

void print_solution(std::ostream& out, const EquilibriumSolution& eq) {
    out << "x_hat = " << csv::number(eq.x_hat) << "\n"
        << "mu_T = " << csv::number(eq.mu_T) << "\n"
        << "alpha_T = " << csv::number(eq.alpha_T) << "\n"
        << "residual = " << (eq.residual ? csv::number(*eq.residual) : "n/a") << "\n";
}

json echo_json(const RunConfig& cfg) {
    json j;
    j["command"] = cfg.command;
    for (const auto& [k, v] : cfg.echo) j[k] = v;
    return j;
}

void write_summary(const fs::path& dir, const RunConfig& cfg, json body) {
    body["config"] = echo_json(cfg);
    write_file(dir / "summary.json", body.dump(2) + "\n");
}

std::vector<PlayerPath> sample_paths(const std::vector<double>& xs, const EquilibriumSolution& eq) {
    std::vector<PlayerPath> paths;
    for (double x : xs) paths.push_back(player_path(x, eq));
    return paths;
}

void write_paths(const fs::path& dir, const std::string& stem, const std::vector<PlayerPath>& paths,
                 const EquilibriumSolution& eq) {
    write_with(dir / (stem + ".csv"), [&](std::ostream& os) { write_paths_csv(os, paths, eq.grid); });
    write_with(dir / ("players" + stem.substr(5) + ".csv"), [&](std::ostream& os) { write_players_csv(os, paths); });
}

double resolved_delta(const RunConfig& cfg) {
    if (cfg.solver.delta) return *cfg.solver.delta;
    if (cfg.solver.N) {
        if (*cfg.solver.N == 0) throw ConfigError("solver.N must be positive");
        return 1.0 / static_cast<double>(*cfg.solver.N);
    }
    return 0.0;
}

std::vector<double> nplayer_positions(const RunConfig& cfg, const InitialDistribution& dist) {
    if (const auto* atoms = dist.empirical()) {
        if (cfg.solver.N && *cfg.solver.N != atoms->positions.size())
            throw ConfigError("solver.N disagrees with the number of distribution positions");
        return atoms->positions;
    }
    if (!cfg.solver.N) throw ConfigError("solve-nplayer needs solver.N or an empirical distribution");
    return quantile_positions(dist, *cfg.solver.N);
}

}  // namespace

RunConfig resolve_config(const std::string& command, const std::string& ini_text,
                         const std::map<std::string, std::string>& overrides) {
    if (std::find(kCommands.begin(), kCommands.end(), command) == kCommands.end())
        throw ConfigError("unknown command '" + command + "'");
    pt::ptree tree;
    if (!ini_text.empty()) {
        std::istringstream in(ini_text);
        try {
            pt::read_ini(in, tree);
        } catch (const pt::ini_parser_error& e) {
            throw ConfigError(std::string("malformed config: ") + e.message() + " (line " + std::to_string(e.line()) + ")");
        }
    }
    check_structure(tree);
    for (const auto& [key, value] : overrides) {
        const auto dot = key.find('.');
        if (dot == std::string::npos || !known_key(key.substr(0, dot), key.substr(dot + 1)))
            throw ConfigError("unknown key " + key);
        tree.put(pt::ptree::path_type(key, '.'), value);
    }

    const Values v(tree);
    RunConfig c;
    c.command = command;
    c.coefficients.eta = v.number("coefficients.eta");
    c.coefficients.kappa = v.number("coefficients.kappa");
    c.coefficients.lambda = v.number("coefficients.lambda");
    c.coefficients.T = v.number("coefficients.T").value_or(c.coefficients.T);
    c.coefficients.file = v.text("coefficients.file").value_or("");
    if (c.coefficients.file.empty()) {
        for (const char* k : {"eta", "kappa", "lambda"})
            if (!v.text(std::string("coefficients.") + k)) throw ConfigError(std::string("missing required key coefficients.") + k);
    }

    auto& d = c.distribution;
    d.kind = v.text("distribution.kind").value_or("");
    d.mean = v.number("distribution.mean");
    d.w_sell = v.number("distribution.w_sell");
    d.mean_sell = v.number("distribution.mean_sell");
    d.w_buy = v.number("distribution.w_buy");
    d.mean_buy = v.number("distribution.mean_buy");
    d.positions = v.numbers("distribution.positions").value_or(std::vector<double>{});
    d.positions_file = v.text("distribution.positions_file").value_or("");
    if (command != "riccati") {
        if (d.kind.empty()) throw ConfigError("missing required key distribution.kind");
        if (d.kind == "exponential") {
            if (!d.mean) throw ConfigError("missing required key distribution.mean");
        } else if (d.kind == "two_sided") {
            for (const char* k : {"w_sell", "mean_sell", "w_buy", "mean_buy"})
                if (!v.text(std::string("distribution.") + k)) throw ConfigError(std::string("missing required key distribution.") + k);
        } else if (d.kind == "empirical") {
            if (d.positions.empty() && d.positions_file.empty())
                throw ConfigError("missing required key distribution.positions");
        } else {
            throw ConfigError("unsupported distribution kind '" + d.kind + "'");
        }
    }

    c.solver.M = v.count("solver.M").value_or(c.solver.M);
    c.solver.delta = v.number("solver.delta");
    c.solver.N = v.count("solver.N");
    c.solver.tol = v.number("solver.tol").value_or(c.solver.tol);
    c.solver.x_nodes = v.count("solver.x_nodes").value_or(c.solver.x_nodes);
    c.solver.Ns = v.counts("solver.Ns").value_or(c.solver.Ns);
    if (c.solver.M < 2) throw ConfigError("solver.M must be at least 2");
    if (!(c.solver.tol > 0.0)) throw ConfigError("solver.tol must be positive");
    if (c.solver.Ns.empty()) throw ConfigError("solver.Ns must list at least one N");

    c.output.dir = v.text("output.dir").value_or(c.output.dir);
    c.output.x_samples = v.numbers("output.x_samples").value_or(c.output.x_samples);
    c.echo = make_echo(c);
    return c;
}

RunConfig parse_config(const std::vector<std::string>& args) {
    CLI::App app{"Equilibria of liquidation games with market drop-out", "mfl-solve"};
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path, "INI file with [coefficients], [distribution], [solver], [output]");

    std::map<std::string, std::string> values;
    std::map<std::string, CLI::Option*> options;
    for (const auto& [section, keys] : kKeys) {
        for (const auto& key : keys) {
            const std::string full = section + "." + key;
            std::string names = "--" + full;
            if (const auto a = kAliases.find(full); a != kAliases.end()) names += ",--" + a->second;
            options[full] = app.add_option(names, values[full]);
        }
    }
    for (const auto& name : kCommands) app.add_subcommand(name)->fallthrough();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        throw HelpRequested{app.help()};
    } catch (const CLI::ParseError& e) {
        throw ConfigError(e.what());
    }

    std::string command;
    for (const auto* sub : app.get_subcommands()) command = sub->get_name();

    std::map<std::string, std::string> overrides;
    for (const auto& [key, opt] : options)
        if (opt->count() > 0) overrides[key] = values[key];

    std::string ini;
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) throw ConfigError("cannot read config file '" + config_path + "'");
        std::stringstream buf;
        buf << in.rdbuf();
        ini = buf.str();
    }
    RunConfig cfg = resolve_config(command, ini, overrides);
    cfg.config_path = config_path;
    return cfg;
}

CoefficientSet build_coefficients(const RunConfig& cfg) {
    const auto& c = cfg.coefficients;
    if (c.file.empty()) return make_constant_coefficients(*c.eta, *c.kappa, *c.lambda, c.T, cfg.solver.M);

    std::ifstream in(c.file);
    if (!in) throw ConfigError("cannot read coefficient file '" + c.file + "'");
    std::string line;
    std::vector<double> t, eta, kappa, lambda;
    bool header = true;
    while (std::getline(in, line)) {
        const auto cells = split_list(line);
        if (cells.empty()) continue;
        if (header) {
            header = false;
            if (cells != std::vector<std::string>{"t", "eta", "kappa", "lambda"})
                throw ConfigError("coefficients.file: header must be t,eta,kappa,lambda");
            continue;
        }
        if (cells.size() != 4) throw ConfigError("coefficients.file: expected 4 columns in '" + line + "'");
        t.push_back(to_double("coefficients.file", cells[0]));
        eta.push_back(to_double("coefficients.file", cells[1]));
        kappa.push_back(to_double("coefficients.file", cells[2]));
        lambda.push_back(to_double("coefficients.file", cells[3]));
    }
    return make_sampled_coefficients(std::move(t), std::move(eta), std::move(kappa), std::move(lambda));
}

InitialDistribution build_distribution(const RunConfig& cfg) {
    const auto& d = cfg.distribution;
    if (d.kind == "exponential") return make_exponential_sellers(*d.mean);
    if (d.kind == "two_sided") return make_two_sided(*d.w_sell, *d.mean_sell, *d.w_buy, *d.mean_buy);
    if (d.kind == "empirical") {
        std::vector<double> positions = d.positions;
        if (!d.positions_file.empty()) {
            const auto extra = read_numbers_file(d.positions_file);
            positions.insert(positions.end(), extra.begin(), extra.end());
        }
        return make_empirical(std::move(positions));
    }
    throw ConfigError("unsupported distribution kind '" + d.kind + "'");
}

int run(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    try {
        const CoefficientSet coeffs = build_coefficients(cfg);
        const fs::path dir(cfg.output.dir);
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (ec) throw ConfigError("cannot create output directory '" + cfg.output.dir + "': " + ec.message());

        SolverOptions options;
        options.tolerance = cfg.solver.tol;
        const std::string& cmd = cfg.command;

        if (cmd == "riccati") {
            const double delta = resolved_delta(cfg);
            const AssumptionReport report = validate_assumptions(coeffs, delta);
            if (!report.passes()) throw InvalidInput("coefficient assumptions violated\n" + report.describe());
            const RiccatiBundle b = solve_riccati(coeffs, delta);
            write_with(dir / "riccati.csv", [&](std::ostream& os) { write_bundle_csv(os, b); });
            const auto [K1, K2] = sign_bound_constants(coeffs, delta);
            json s;
            s["delta"] = num(delta);
            s["alpha_T"] = num(b.alpha_T);
            s["A_0"] = num(b.A0());
            s["h_T"] = num(b.h_T);
            s["K1"] = num(K1);
            s["K2"] = num(K2);
            write_summary(dir, cfg, s);
            out << "alpha_T = " << csv::number(b.alpha_T) << "\nA_0 = " << csv::number(b.A0())
                << "\nh_T = " << csv::number(b.h_T) << "\n";
            return ok;
        }

        const InitialDistribution dist = build_distribution(cfg);

        if (cmd == "solve-nplayer") {
            const auto positions = nplayer_positions(cfg, dist);
            EquilibriumSolution eq = solve_nplayer(coeffs, positions, options);
            eq.residual = fixed_point_residual(eq);
            const auto paths = sample_paths(positions, eq);
            const NashReport nash = nash_check(positions, eq);
            write_with(dir / "mu.csv", [&](std::ostream& os) { write_mu_csv(os, eq); });
            write_paths(dir, "paths", paths, eq);
            json s = solution_summary(eq);
            s["N"] = positions.size();
            s["nash_violations"] = nash.violations;
            s["nash_min_margin"] = num(nash.min_margin);
            write_summary(dir, cfg, s);
            print_solution(out, eq);
            return ok;
        }

        if (cmd == "solve-mfg" || cmd == "baseline" || cmd == "paths") {
            const double delta = resolved_delta(cfg);
            const MarketModel model = cmd == "baseline" ? MarketModel::no_dropout : MarketModel::dropout;
            const AssumptionReport report = validate_assumptions(coeffs, delta);
            if (!report.passes()) throw InvalidInput("coefficient assumptions violated\n" + report.describe());
            EquilibriumSolution eq = solve_equilibrium(coeffs, dist, delta, model, options);
            if (cmd != "paths") eq.residual = fixed_point_residual(eq, cfg.solver.x_nodes);
            const auto paths = sample_paths(cfg.output.x_samples, eq);
            if (cmd != "paths") write_with(dir / "mu.csv", [&](std::ostream& os) { write_mu_csv(os, eq); });
            write_paths(dir, "paths", paths, eq);
            write_summary(dir, cfg, solution_summary(eq));
            print_solution(out, eq);
            return ok;
        }

        if (cmd == "compare") {
            const AssumptionReport report = validate_assumptions(coeffs, 0.0);
            if (!report.passes()) throw InvalidInput("coefficient assumptions violated\n" + report.describe());
            ScenarioSpec spec;
            spec.name = "custom";
            spec.coeffs = coeffs;
            spec.dist = dist;
            spec.M = coeffs.intervals();
            spec.x_samples = cfg.output.x_samples;
            ScenarioResult r = run_scenario(spec, options);
            r.dropout.residual = fixed_point_residual(r.dropout, cfg.solver.x_nodes);
            r.baseline.residual = fixed_point_residual(r.baseline, cfg.solver.x_nodes);
            write_with(dir / "mu_dropout.csv", [&](std::ostream& os) { write_mu_csv(os, r.dropout); });
            write_with(dir / "mu_baseline.csv", [&](std::ostream& os) { write_mu_csv(os, r.baseline); });
            write_paths(dir, "paths_dropout", r.dropout_paths, r.dropout);
            write_paths(dir, "paths_baseline", r.baseline_paths, r.baseline);
            json s;
            s["dropout"] = solution_summary(r.dropout);
            s["baseline"] = solution_summary(r.baseline);
            write_summary(dir, cfg, s);
            out << "[dropout]\n";
            print_solution(out, r.dropout);
            out << "[baseline]\n";
            print_solution(out, r.baseline);
            return ok;
        }

        if (cmd == "converge") {
            ScenarioSpec spec;
            spec.coeffs = coeffs;
            spec.dist = dist;
            spec.M = coeffs.intervals();
            const auto rows = convergence_study(spec, cfg.solver.Ns, options);
            write_with(dir / "convergence.csv", [&](std::ostream& os) {
                csv::header(os, {"N", "sup_error", "x_hat_N"});
                for (const auto& r : rows) csv::row(os, {static_cast<double>(r.N), r.sup_error, r.x_hat_N});
            });
            json s;
            s["rows"] = json::array();
            for (const auto& r : rows) s["rows"].push_back({{"N", r.N}, {"sup_error", num(r.sup_error)}, {"x_hat_N", num(r.x_hat_N)}});
            write_summary(dir, cfg, s);
            for (const auto& r : rows)
                out << "N = " << r.N << "  sup_error = " << csv::number(r.sup_error) << "  x_hat_N = "
                    << csv::number(r.x_hat_N) << "  runtime_s = " << r.runtime << "\n";
            return ok;
        }
        throw ConfigError("unknown command '" + cmd + "'");
    } catch (const ConfigError& e) {
        err << "error[config]: " << e.what() << "\n";
        return config_error;
    } catch (const NumericalFailure& e) {
        err << "error[numerical]: " << e.what() << "\n";
        return numerical_error;
    } catch (const Error& e) {
        err << "error[assumptions]: " << e.what() << "\n";
        return assumption_error;
    }
}

int main_entry(int argc, char** argv, std::ostream& out, std::ostream& err) {
    std::vector<std::string> args(argv + 1, argv + argc);
    RunConfig cfg;
    try {
        cfg = parse_config(args);
    } catch (const HelpRequested& h) {
        out << h.text;
        return ok;
    } catch (const ConfigError& e) {
        err << "error[config]: " << e.what() << "\n";
        return config_error;
    }
    return run(cfg, out, err);
}

}  // namespace mfl::cli
