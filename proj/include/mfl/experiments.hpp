#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "mfl/equilibrium.hpp"
#include "mfl/strategies.hpp"

namespace mfl {

struct ScenarioSpec {
    std::string name = "custom";
    CoefficientSet coeffs;
    InitialDistribution dist = make_exponential_sellers(1.0);
    std::size_t M = 2000;
    std::vector<double> x_samples;
};

/// eta = 5, kappa = 10, lambda = 5, T = 1 with exponential sellers of mean 1.5.
ScenarioSpec one_sided_preset(std::size_t M = 2000);
/// Same coefficients; sellers of weight 0.8 and mean 1.5, buyers of weight 0.2 and mean 1.
ScenarioSpec two_sided_preset(std::size_t M = 2000);

struct ScenarioResult {
    EquilibriumSolution dropout;
    EquilibriumSolution baseline;
    std::vector<PlayerPath> dropout_paths;
    std::vector<PlayerPath> baseline_paths;
};

ScenarioResult run_scenario(const ScenarioSpec& spec, const SolverOptions& options = {});

/**
 * Deterministic N-atom approximation of an analytic measure. Atoms are split between sellers,
 * buyers and the zero atom in proportion to their mass; within each exponential side the
 * j-th atom is the quantile at level (j - 1/2)/n. Returned sorted.
 */
std::vector<double> quantile_positions(const InitialDistribution& dist, std::size_t N);

/// sup over x >= 0 of |q0^N(x) - q0(x)|, evaluated at the atoms (where the supremum is attained).
double seller_tail_error(const InitialDistribution& dist, const std::vector<double>& positions);

struct ConvergenceRow {
    std::size_t N = 0;
    double sup_error = 0.0;
    double x_hat_N = 0.0;
    double runtime = 0.0;  // seconds
};

std::vector<ConvergenceRow> convergence_study(const ScenarioSpec& spec, std::vector<std::size_t> Ns,
                                              const SolverOptions& options = {});

/// Times where the one-sided difference quotient of mu jumps by more than factor x the local median jump.
std::vector<double> detect_kinks(const std::vector<double>& grid, const std::vector<double>& mu, double factor = 5.0,
                                 std::size_t half_window = 50);

}  // namespace mfl
