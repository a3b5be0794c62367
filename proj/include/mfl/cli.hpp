#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mfl/model.hpp"

namespace mfl::cli {

struct RunConfig {
    std::string command;
    std::string config_path;

    struct {
        std::optional<double> eta, kappa, lambda;
        double T = 1.0;
        std::string file;  // CSV with columns t, eta, kappa, lambda
    } coefficients;

    struct {
        std::string kind;  // exponential, two_sided, empirical
        std::optional<double> mean;
        std::optional<double> w_sell, mean_sell, w_buy, mean_buy;
        std::vector<double> positions;
        std::string positions_file;
    } distribution;

    struct {
        std::size_t M = 2000;
        std::optional<double> delta;
        std::optional<std::size_t> N;
        double tol = 1e-10;
        std::size_t x_nodes = 400;
        std::vector<std::size_t> Ns{7, 15, 100};
    } solver;

    struct {
        std::string dir = "./out";
        std::vector<double> x_samples{0.25, 0.75, 1.5, 3.0};
    } output;

    /// Every resolved key as section.key -> text, for the summary echo.
    std::map<std::string, std::string> echo;
};

/// Exit codes of `run`.
enum ExitCode { ok = 0, config_error = 1, assumption_error = 2, numerical_error = 3 };

/// Parses `args` (without the program name). Flags override values read from --config.
RunConfig parse_config(const std::vector<std::string>& args);

/// Resolves a config from INI text plus section.key overrides; used by parse_config.
RunConfig resolve_config(const std::string& command, const std::string& ini_text,
                         const std::map<std::string, std::string>& overrides);

CoefficientSet build_coefficients(const RunConfig& cfg);
InitialDistribution build_distribution(const RunConfig& cfg);

/// Runs the configured command, writing artifacts to cfg.output.dir; returns an ExitCode.
int run(const RunConfig& cfg, std::ostream& out, std::ostream& err);

/// Full entry point: parse, run, map failures to exit codes.
int main_entry(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace mfl::cli
