#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace mfl {

/**
 * Time-dependent cost coefficients sampled on a shared grid 0 = t_0 < ... < t_M = T.
 *
 * eta is the instantaneous impact, kappa the permanent impact and lambda the
 * urgency penalty on remaining inventory. Between nodes every field is read by
 * linear interpolation. Analytic presets carry exact derivative samples.
 */
struct CoefficientSet {
    double T = 1.0;
    std::vector<double> grid;
    std::vector<double> eta;
    std::vector<double> kappa;
    std::vector<double> lambda;
    std::vector<double> eta_dot;
    std::vector<double> kappa_dot;

    std::size_t intervals() const { return grid.size() - 1; }
    std::size_t nodes() const { return grid.size(); }

    /// Linear interpolation of one coefficient column at time t.
    double at(std::span<const double> column, double t) const;

    double eta_sup() const;
    double inv_eta_sup() const;
    double kappa_sup() const;
    double lambda_sup() const;
    double eta_dot_sup() const;
    double kappa_dot_sup() const;
};

/// Uniform grid with M intervals and constant coefficients.
CoefficientSet make_constant_coefficients(double eta, double kappa, double lambda, double T, std::size_t M);

/// Coefficients sampled at arbitrary increasing times; derivatives by finite differences.
CoefficientSet make_sampled_coefficients(std::vector<double> grid, std::vector<double> eta,
                                         std::vector<double> kappa, std::vector<double> lambda);

/// Mixture of exponential sellers, exponential buyers and an atom at zero holding the remaining mass.
struct ExponentialTails {
    double w_sell = 1.0;
    double mean_sell = 1.0;
    double w_buy = 0.0;
    double mean_buy = 1.0;

    double atom_at_zero() const;
};

struct EmpiricalAtoms {
    std::vector<double> positions;  // sorted ascending
};

enum class DistributionKind { analytic, empirical };

/**
 * Initial-position measure nu_0.
 *
 * q0(x) = nu_0([x, inf)) and p0(x) = nu_0((-inf, x]) are closed-interval tails, so an
 * atom at zero is counted by both q0(0) and p0(0). Both are defined on the whole line;
 * the solvers only rely on q0 being non-increasing and bounded by one.
 */
class InitialDistribution {
public:
    explicit InitialDistribution(ExponentialTails tails);
    explicit InitialDistribution(EmpiricalAtoms atoms);

    DistributionKind kind() const;
    double q0(double x) const;
    double p0(double x) const;
    /// Integrated seller tail, int_0^x q0 for x >= 0.
    double Q0(double x) const;
    double mean() const { return mean_; }
    double supp_upper() const;
    double supp_lower() const;

    /// Mirror image x -> -x.
    InitialDistribution reflected() const;

    const ExponentialTails* exponential() const { return std::get_if<ExponentialTails>(&repr_); }
    const EmpiricalAtoms* empirical() const { return std::get_if<EmpiricalAtoms>(&repr_); }

    /// Density of the continuous part; zero for empirical measures.
    double density(double x) const;

    /// Position beyond which the seller tail drops below `cutoff` (0 if there are no sellers).
    double seller_truncation(double cutoff = 1e-12) const;
    /// Position below which the buyer tail drops below `cutoff` (0 if there are no buyers).
    double buyer_truncation(double cutoff = 1e-12) const;

private:
    std::variant<ExponentialTails, EmpiricalAtoms> repr_;
    double mean_ = 0.0;
};

InitialDistribution make_exponential_sellers(double mean_pos);
InitialDistribution make_two_sided(double w_sell, double mean_sell, double w_buy, double mean_buy);
InitialDistribution make_empirical(std::vector<double> positions);

struct AssumptionReport {
    double delta = 0.0;
    bool standing = true;   // eta > 0, kappa >= 0, lambda >= 0
    bool mean_field = true; // lambda + delta * kappa_dot >= 0
    bool n_player = true;   // eta - delta * kappa > 0, lambda - delta * kappa >= 0
    std::vector<std::size_t> standing_violations;
    std::vector<std::size_t> mean_field_violations;
    std::vector<std::size_t> n_player_violations;

    bool passes(bool require_n_player = false) const {
        return standing && mean_field && (!require_n_player || n_player);
    }
    std::string describe() const;
};

AssumptionReport validate_assumptions(const CoefficientSet& coeffs, double delta);

}  // namespace mfl
