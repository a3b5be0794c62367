#pragma once

#include <cstddef>
#include <iosfwd>
#include <memory>
#include <optional>
#include <vector>

#include "mfl/model.hpp"
#include "mfl/riccati.hpp"

namespace mfl {

/// Whether players are absorbed when their inventory reaches zero.
enum class MarketModel { dropout, no_dropout };

struct SolverOptions {
    double tolerance = 1e-10;  // relative bisection tolerance on psi
    int max_doublings = 60;
    int max_bisections = 200;
};

/// Terminal state of the backward system: v = int_t^T mu, g = int_t^T kappa*h*mu.
struct BackwardState {
    double mu = 0.0;
    double v = 0.0;
    double g = 0.0;
};

struct MuTrajectory {
    std::vector<double> mu;
    std::vector<double> v;
    std::vector<double> g;
    double g0 = 0.0;  // = f_{mu^c}(T)
};

struct EquilibriumSolution {
    double delta = 0.0;
    MarketModel model = MarketModel::dropout;
    std::vector<double> grid;
    std::vector<double> mu;
    /// f(t) = int_0^t kappa*h*mu, with its running maximum and minimum.
    std::vector<double> f;
    std::vector<double> f_max;
    std::vector<double> f_min;
    double x_hat = 0.0;
    double mu_T = 0.0;
    double alpha_T = 0.0;
    double K1 = 0.0;
    double K2 = 0.0;
    double psi_at_root = 0.0;
    int bisection_steps = 0;
    bool reflected = false;
    std::optional<double> residual;

    std::shared_ptr<const CoefficientSet> coeffs;
    std::shared_ptr<const InitialDistribution> dist;
    std::shared_ptr<const RiccatiBundle> bundle;
};

/**
 * Tail view of nu_0 as seen by the equilibrium equation. Under no_dropout every player stays
 * in the market, which replaces the seller tail by total mass (q0 = 1, p0 = 0).
 */
class MarketTails {
public:
    MarketTails(const InitialDistribution& dist, MarketModel model);

    double mean() const { return mean_; }
    double q0(double x) const;
    double Q0(double c) const;
    /// Mass of strictly negative positions, 1 - q0(0).
    double buyer_mass() const { return buyer_mass_; }
    double supp_upper() const;
    /// Sorted atom locations, where q0 jumps.
    const std::vector<double>& jumps() const { return jumps_; }
    /// q0 is constant between jumps.
    bool piecewise_constant() const { return piecewise_constant_; }

private:
    const InitialDistribution* dist_;
    MarketModel model_;
    double mean_;
    double buyer_mass_;
    std::vector<double> jumps_;
    bool piecewise_constant_ = false;
};

/// (alpha_T/eta_T) * (mean - (1 - q0(0))*c - Q0(c)); strictly decreasing in c when q0(0) < 1.
double terminal_rate(double c, const InitialDistribution& dist, double alpha_T, double eta_T,
                     MarketModel model = MarketModel::dropout);

MuTrajectory solve_mu_for_c(double c, const CoefficientSet& coeffs, const InitialDistribution& dist,
                            const RiccatiBundle& bundle, MarketModel model = MarketModel::dropout);

/// c - f_{mu^c}(T)
double psi(double c, const CoefficientSet& coeffs, const InitialDistribution& dist, const RiccatiBundle& bundle,
           MarketModel model = MarketModel::dropout);

/// Bracket [0, c_upper] with psi(0) < 0 < psi(c_upper); requires mean > 0.
double psi_upper_bound(const CoefficientSet& coeffs, const InitialDistribution& dist, const RiccatiBundle& bundle,
                       MarketModel model = MarketModel::dropout, const SolverOptions& options = {});

/// Root of psi for a measure with positive mean; mean == 0 yields the zero solution.
EquilibriumSolution find_x_hat(const CoefficientSet& coeffs, const InitialDistribution& dist,
                               const RiccatiBundle& bundle, MarketModel model = MarketModel::dropout,
                               const SolverOptions& options = {});

/// Full pipeline for any sign of the mean (negative means are solved on the reflected measure).
EquilibriumSolution solve_equilibrium(const CoefficientSet& coeffs, const InitialDistribution& dist, double delta,
                                      MarketModel model = MarketModel::dropout, const SolverOptions& options = {});

EquilibriumSolution solve_mfg(const CoefficientSet& coeffs, const InitialDistribution& dist,
                              const SolverOptions& options = {});

/// Empirical measure of the positions solved with delta = 1/N; enforces the N-player cost assumptions.
EquilibriumSolution solve_nplayer(const CoefficientSet& coeffs, const std::vector<double>& positions,
                                  const SolverOptions& options = {});

EquilibriumSolution solve_no_dropout_baseline(const CoefficientSet& coeffs, const InitialDistribution& dist,
                                              const SolverOptions& options = {});

/// A priori constants of the two-sided bound exp(-K1(T-t)) eta_T/eta_t |mu_T| <= |mu_t| <= |mu_T| exp(K2(T-t)).
std::pair<double, double> sign_bound_constants(const CoefficientSet& coeffs, double delta);

/// Columns t, mu, f.
void write_mu_csv(std::ostream& os, const EquilibriumSolution& sol);

}  // namespace mfl
