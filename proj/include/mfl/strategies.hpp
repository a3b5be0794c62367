#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "mfl/equilibrium.hpp"

namespace mfl {

struct FCurve {
    std::vector<double> f;
    std::vector<double> f_max;
    std::vector<double> f_min;
};

/// f(t) = int_0^t kappa*h*mu by the trapezoid rule, with running extrema starting at zero.
FCurve f_curve(const std::vector<double>& mu, const CoefficientSet& coeffs, const RiccatiBundle& bundle);

/**
 * Drop-out time of a player starting at x. x = 0 leaves at once (returns 0). Positions strictly
 * between f_min(T) and f_max(T) leave at the first crossing of f with level x; all others trade
 * until T. Under no_dropout every player trades until T.
 */
double liquidation_time(double x, const std::vector<double>& grid, const std::vector<double>& f,
                        const std::vector<double>& f_max, const std::vector<double>& f_min,
                        MarketModel model = MarketModel::dropout);

/**
 * An inventory path sampled on the equilibrium grid. Values at nodes after tau are zero;
 * xi_tau is the left limit of the rate at tau, which closes the last partial cell.
 */
struct Trajectory {
    double x = 0.0;
    double tau = 0.0;
    std::vector<double> X;
    std::vector<double> xi;
    double xi_tau = 0.0;
};

struct PlayerPath : Trajectory {
    std::vector<double> Y;
    std::vector<double> B;
    /// Cost against the aggregate rate mu.
    double cost = 0.0;
};

PlayerPath player_path(double x, const EquilibriumSolution& eq);

/// int_0^tau of a grid function whose left limit at tau is value_tau.
double integrate_to_tau(const std::vector<double>& grid, const std::vector<double>& values, double tau,
                        double value_tau);

/// Trapezoid cost of 0.5*eta*xi^2 + kappa*mu*X + 0.5*lambda*X^2.
double cost_mfg(const Trajectory& path, const EquilibriumSolution& eq);

/// Cost of player i using `own` while every other player j follows others[j].
double cost_nplayer(const Trajectory& own, std::size_t i, const std::vector<PlayerPath>& others,
                    const EquilibriumSolution& eq);

enum class CompetitorKind { twap_full_horizon, twap_to_tau, scaled_equilibrium, early_stop, equilibrium };

struct CompetitorSpec {
    CompetitorKind kind = CompetitorKind::twap_full_horizon;
    double parameter = 1.0;  // scale factor or stopping fraction

    std::string label() const;
};

/// twap_full_horizon, twap_to_tau, scaled(1.1), scaled(0.9), early_stop(0.8), early_stop(0.5).
std::vector<CompetitorSpec> default_competitor_battery();

Trajectory competitor_trajectory(const CompetitorSpec& spec, const PlayerPath& equilibrium_path,
                                 const std::vector<double>& grid);

/// F(mu)_t = int xi_t(x) nu_0(dx) at every grid node.
std::vector<double> fixed_point_map(const EquilibriumSolution& eq, std::size_t x_nodes = 400);

/// sup_t |mu_t - F(mu)_t|; also stored in eq.residual by the caller.
double fixed_point_residual(const EquilibriumSolution& eq, std::size_t x_nodes = 400);

/// Same equilibrium data with mu replaced and f recomputed.
EquilibriumSolution with_mu(const EquilibriumSolution& eq, std::vector<double> mu);

struct NashEntry {
    std::size_t player = 0;
    double x = 0.0;
    std::string competitor;
    double equilibrium_cost = 0.0;
    double competitor_cost = 0.0;
    double margin = 0.0;  // competitor_cost - equilibrium_cost
    bool violation = false;
};

struct NashReport {
    std::vector<NashEntry> entries;
    std::size_t violations = 0;
    double min_margin = 0.0;
};

/// Unilateral deviations of every player against the battery in an N-player equilibrium.
NashReport nash_check(const std::vector<double>& positions, const EquilibriumSolution& eq,
                      const std::vector<CompetitorSpec>& battery = default_competitor_battery(),
                      double tolerance = 1e-8);

/// Deviations of a representative player in the mean-field game.
NashReport mfg_optimality_check(const std::vector<double>& xs, const EquilibriumSolution& eq,
                                const std::vector<CompetitorSpec>& battery = default_competitor_battery(),
                                double tolerance = 1e-8);

/// Columns player_id, t, X, Y, xi.
void write_paths_csv(std::ostream& os, const std::vector<PlayerPath>& paths, const std::vector<double>& grid);
/// Columns player_id, x, tau, cost.
void write_players_csv(std::ostream& os, const std::vector<PlayerPath>& paths);

}  // namespace mfl
