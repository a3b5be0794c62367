#include "mfl/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <limits>
#include <ostream>
#include <string>
#include <tuple>

#include "mfl/csv.hpp"
#include "mfl/error.hpp"

namespace mfl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct StepCoefficients {
    double eta, kappa, lambda, eta_dot, kappa_dot, h;
};

StepCoefficients at_node(const CoefficientSet& c, const RiccatiBundle& b, std::size_t i) {
    return {c.eta[i], c.kappa[i], c.lambda[i], c.eta_dot[i], c.kappa_dot[i], b.h[i]};
}

// Coefficients at t_i + theta * (t_{i+1} - t_i); h by cubic Hermite interpolation.
StepCoefficients in_cell(const CoefficientSet& c, const RiccatiBundle& b, std::size_t i, double theta) {
    const double dt = c.grid[i + 1] - c.grid[i];
    const double u = 1.0 - theta;
    const auto lin = [&](const std::vector<double>& v) { return u * v[i] + theta * v[i + 1]; };
    const double h = (1 + 2 * theta) * u * u * b.h[i] + theta * u * u * dt * b.h_dot[i] +
                     theta * theta * (3 - 2 * theta) * b.h[i + 1] - theta * theta * u * dt * b.h_dot[i + 1];
    return {lin(c.eta), lin(c.kappa), lin(c.lambda), lin(c.eta_dot), lin(c.kappa_dot), h};
}

StepCoefficients at_midpoint(const CoefficientSet& c, const RiccatiBundle& b, std::size_t i) {
    return in_cell(c, b, i, 0.5);
}

BackwardState backward_rhs(const StepCoefficients& k, double delta, double active, const BackwardState& s) {
    BackwardState d;
    d.mu = -(k.kappa / k.eta) * active * s.mu - ((k.lambda + delta * k.kappa_dot) / k.eta) * s.v -
           ((k.eta_dot - delta * k.kappa) / k.eta) * s.mu;
    d.v = -s.mu;
    d.g = -k.kappa * k.h * s.mu;
    return d;
}

BackwardState backward_rhs(const StepCoefficients& k, double delta, double c, const MarketTails& tails,
                           const BackwardState& s) {
    return backward_rhs(k, delta, tails.q0(c - s.g) + tails.buyer_mass(), s);
}

BackwardState axpy(const BackwardState& s, double a, const BackwardState& k) {
    return {s.mu + a * k.mu, s.v + a * k.v, s.g + a * k.g};
}

BackwardState rk4(const BackwardState& s, double h, const BackwardState& k1, const BackwardState& k2,
                  const BackwardState& k3, const BackwardState& k4) {
    return {s.mu + h * (k1.mu + 2.0 * k2.mu + 2.0 * k3.mu + k4.mu) / 6.0,
            s.v + h * (k1.v + 2.0 * k2.v + 2.0 * k3.v + k4.v) / 6.0,
            s.g + h * (k1.g + 2.0 * k2.g + 2.0 * k3.g + k4.g) / 6.0};
}

// RK4 inside cell i from fraction a down to fraction b with q0 held fixed.
BackwardState frozen_step(const CoefficientSet& c, const RiccatiBundle& bundle, std::size_t i, double a, double b,
                          double active, const BackwardState& s) {
    const double h = (b - a) * (c.grid[i + 1] - c.grid[i]);
    const auto ka = in_cell(c, bundle, i, a), km = in_cell(c, bundle, i, 0.5 * (a + b)), kb = in_cell(c, bundle, i, b);
    const auto k1 = backward_rhs(ka, bundle.delta, active, s);
    const auto k2 = backward_rhs(km, bundle.delta, active, axpy(s, 0.5 * h, k1));
    const auto k3 = backward_rhs(km, bundle.delta, active, axpy(s, 0.5 * h, k2));
    const auto k4 = backward_rhs(kb, bundle.delta, active, axpy(s, h, k3));
    return rk4(s, h, k1, k2, k3, k4);
}

// Value of q0 between x and the next jump in direction dir.
double active_toward(const MarketTails& tails, double x, double dir) {
    const auto& j = tails.jumps();
    double next = x + dir;
    if (dir > 0) {
        const auto it = std::upper_bound(j.begin(), j.end(), x);
        if (it != j.end()) next = *it;
    } else {
        const auto it = std::lower_bound(j.begin(), j.end(), x);
        if (it != j.begin()) next = *std::prev(it);
    }
    return tails.q0(0.5 * (x + next)) + tails.buyer_mass();
}

bool jump_between(const MarketTails& tails, double x0, double x1) {
    const auto& j = tails.jumps();
    const double lo = std::min(x0, x1), hi = std::max(x0, x1);
    const auto it = std::upper_bound(j.begin(), j.end(), lo);
    return it != j.end() && *it < hi;
}

// Cell i integrated piecewise, splitting at every time where c - g crosses a jump of q0.
BackwardState split_step(const CoefficientSet& coeffs, const RiccatiBundle& bundle, std::size_t i, double c,
                         const MarketTails& tails, BackwardState s, double x_end) {
    const auto& j = tails.jumps();
    double a = 1.0;
    double x0 = c - s.g;  // position used to pick the active value; pinned to a jump once crossed
    const double dir = x_end > x0 ? 1.0 : -1.0;
    for (std::size_t pieces = 0;; ++pieces) {
        if (pieces > j.size()) throw NumericalFailure("jump splitting did not terminate");
        const double active = active_toward(tails, x0, dir);
        const BackwardState full = frozen_step(coeffs, bundle, i, a, 0.0, active, s);
        if (!jump_between(tails, x0, c - full.g)) return full;
        const double level = dir > 0 ? *std::upper_bound(j.begin(), j.end(), x0)
                                     : *std::prev(std::lower_bound(j.begin(), j.end(), x0));
        double lo = a, hi = 0.0;  // crossing lies between fractions lo (before) and hi (after)
        for (int k = 0; k < 60; ++k) {
            const double m = 0.5 * (lo + hi);
            const double xm = c - frozen_step(coeffs, bundle, i, a, m, active, s).g;
            ((xm - level) * dir < 0 ? lo : hi) = m;
        }
        s = frozen_step(coeffs, bundle, i, a, hi, active, s);
        a = hi;
        x0 = level;
    }
}

void check_grids(const CoefficientSet& coeffs, const RiccatiBundle& bundle) {
    if (coeffs.grid != bundle.grid) throw InvalidInput("coefficient grid and Riccati bundle grid differ");
}

double terminal_rate_for(double c, const MarketTails& tails, double alpha_T, double eta_T) {
    return alpha_T / eta_T * (tails.mean() - tails.buyer_mass() * c - tails.Q0(c));
}

void fill_running_extrema(EquilibriumSolution& sol) {
    const std::size_t n = sol.f.size();
    sol.f_max.resize(n);
    sol.f_min.resize(n);
    double hi = 0.0, lo = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        hi = std::max(hi, sol.f[i]);
        lo = std::min(lo, sol.f[i]);
        sol.f_max[i] = hi;
        sol.f_min[i] = lo;
    }
}

EquilibriumSolution zero_solution(std::shared_ptr<const CoefficientSet> coeffs,
                                  std::shared_ptr<const InitialDistribution> dist,
                                  std::shared_ptr<const RiccatiBundle> bundle, MarketModel model) {
    EquilibriumSolution sol;
    sol.delta = bundle->delta;
    sol.model = model;
    sol.grid = coeffs->grid;
    sol.mu.assign(sol.grid.size(), 0.0);
    sol.f.assign(sol.grid.size(), 0.0);
    fill_running_extrema(sol);
    sol.alpha_T = bundle->alpha_T;
    std::tie(sol.K1, sol.K2) = sign_bound_constants(*coeffs, bundle->delta);
    sol.coeffs = std::move(coeffs);
    sol.dist = std::move(dist);
    sol.bundle = std::move(bundle);
    return sol;
}

EquilibriumSolution solve_positive(std::shared_ptr<const CoefficientSet> coeffs,
                                   std::shared_ptr<const InitialDistribution> dist,
                                   std::shared_ptr<const RiccatiBundle> bundle, MarketModel model,
                                   const SolverOptions& options) {
    check_grids(*coeffs, *bundle);
    const double mean = dist->mean();
    if (mean < 0.0) throw InvalidInput("root search expects a measure with non-negative mean");
    if (mean == 0.0) return zero_solution(std::move(coeffs), std::move(dist), std::move(bundle), model);

    const auto eval = [&](double c) { return psi(c, *coeffs, *dist, *bundle, model); };
    const double c_upper = psi_upper_bound(*coeffs, *dist, *bundle, model, options);
    const double tol = options.tolerance * (1.0 + c_upper);

    double lo = 0.0, hi = c_upper;
    double root = 0.0;
    double psi_root = eval(0.0);
    int steps = 0;
    if (std::abs(psi_root) > tol) {
        if (psi_root > 0.0) throw NumericalFailure("psi(0) is positive; bracket is invalid");
        bool converged = false;
        for (; steps < options.max_bisections; ++steps) {
            const double mid = 0.5 * (lo + hi);
            const double p = eval(mid);
            root = mid;
            psi_root = p;
            if (std::abs(p) <= tol) {
                converged = true;
                ++steps;
                break;
            }
            (p < 0.0 ? lo : hi) = mid;
            if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * (1.0 + hi)) break;
        }
        if (!converged) throw NumericalFailure("bisection on psi did not reach the tolerance");
    }

    const MuTrajectory traj = solve_mu_for_c(root, *coeffs, *dist, *bundle, model);
    EquilibriumSolution sol;
    sol.delta = bundle->delta;
    sol.model = model;
    sol.grid = coeffs->grid;
    sol.mu = traj.mu;
    sol.f.resize(traj.g.size());
    for (std::size_t i = 0; i < traj.g.size(); ++i) sol.f[i] = traj.g0 - traj.g[i];
    fill_running_extrema(sol);
    sol.x_hat = root;
    sol.mu_T = traj.mu.back();
    sol.alpha_T = bundle->alpha_T;
    sol.psi_at_root = psi_root;
    sol.bisection_steps = steps;
    std::tie(sol.K1, sol.K2) = sign_bound_constants(*coeffs, bundle->delta);
    sol.coeffs = std::move(coeffs);
    sol.dist = std::move(dist);
    sol.bundle = std::move(bundle);
    return sol;
}

EquilibriumSolution solve_shared(std::shared_ptr<const CoefficientSet> coeffs,
                                 std::shared_ptr<const InitialDistribution> dist, double delta, MarketModel model,
                                 const SolverOptions& options) {
    auto bundle = std::make_shared<const RiccatiBundle>(solve_riccati(*coeffs, delta));
    if (dist->mean() >= 0.0) return solve_positive(std::move(coeffs), std::move(dist), std::move(bundle), model, options);

    // Negative mean: solve the mirrored market and flip every signed quantity back.
    auto mirrored = std::make_shared<const InitialDistribution>(dist->reflected());
    EquilibriumSolution sol = solve_positive(std::move(coeffs), std::move(mirrored), std::move(bundle), model, options);
    for (double& m : sol.mu) m = -m;
    for (double& f : sol.f) f = -f;
    fill_running_extrema(sol);
    sol.x_hat = -sol.x_hat;
    sol.mu_T = -sol.mu_T;
    sol.psi_at_root = -sol.psi_at_root;
    sol.reflected = true;
    sol.dist = std::move(dist);
    return sol;
}

}  // namespace

MarketTails::MarketTails(const InitialDistribution& dist, MarketModel model)
    : dist_(&dist), model_(model), mean_(dist.mean()) {
    buyer_mass_ = model == MarketModel::dropout ? std::max(0.0, 1.0 - dist.q0(0.0)) : 0.0;
    if (model != MarketModel::dropout) return;
    if (const auto* e = dist.empirical()) {
        piecewise_constant_ = true;
        jumps_ = e->positions;
        jumps_.erase(std::unique(jumps_.begin(), jumps_.end()), jumps_.end());
    } else if (dist.exponential()->atom_at_zero() > 0.0) {
        jumps_ = {0.0};
    }
}

double MarketTails::q0(double x) const { return model_ == MarketModel::dropout ? dist_->q0(x) : 1.0; }

double MarketTails::Q0(double c) const {
    if (model_ == MarketModel::dropout) return dist_->Q0(c);
    return std::max(c, 0.0);
}

double MarketTails::supp_upper() const { return model_ == MarketModel::dropout ? dist_->supp_upper() : kInf; }

double terminal_rate(double c, const InitialDistribution& dist, double alpha_T, double eta_T, MarketModel model) {
    if (!(c >= 0.0)) throw InvalidInput("terminal_rate requires c >= 0");
    return terminal_rate_for(c, MarketTails(dist, model), alpha_T, eta_T);
}

MuTrajectory solve_mu_for_c(double c, const CoefficientSet& coeffs, const InitialDistribution& dist,
                            const RiccatiBundle& bundle, MarketModel model) {
    check_grids(coeffs, bundle);
    const MarketTails tails(dist, model);
    const std::size_t M = coeffs.intervals();
    const double delta = bundle.delta;
    const auto& t = coeffs.grid;

    MuTrajectory out;
    out.mu.resize(M + 1);
    out.v.resize(M + 1);
    out.g.resize(M + 1);

    BackwardState s{terminal_rate_for(c, tails, bundle.alpha_T, coeffs.eta[M]), 0.0, 0.0};
    out.mu[M] = s.mu;
    out.v[M] = 0.0;
    out.g[M] = 0.0;
    for (std::size_t i = M; i-- > 0;) {
        const double h = t[i] - t[i + 1];
        const auto right = at_node(coeffs, bundle, i + 1);
        const auto mid = at_midpoint(coeffs, bundle, i);
        const auto left = at_node(coeffs, bundle, i);
        const auto k1 = backward_rhs(right, delta, c, tails, s);
        const auto k2 = backward_rhs(mid, delta, c, tails, axpy(s, 0.5 * h, k1));
        const auto k3 = backward_rhs(mid, delta, c, tails, axpy(s, 0.5 * h, k2));
        const auto k4 = backward_rhs(left, delta, c, tails, axpy(s, h, k3));
        const BackwardState next = rk4(s, h, k1, k2, k3, k4);
        const bool split = tails.piecewise_constant() || jump_between(tails, c - s.g, c - next.g);
        s = split ? split_step(coeffs, bundle, i, c, tails, s, c - next.g) : next;
        if (!std::isfinite(s.mu) || !std::isfinite(s.g))
            throw NumericalFailure("backward equation diverged at node " + std::to_string(i));
        out.mu[i] = s.mu;
        out.v[i] = s.v;
        out.g[i] = s.g;
    }
    out.g0 = out.g[0];
    return out;
}

double psi(double c, const CoefficientSet& coeffs, const InitialDistribution& dist, const RiccatiBundle& bundle,
           MarketModel model) {
    if (!(c >= 0.0)) throw InvalidInput("psi requires c >= 0");
    return c - solve_mu_for_c(c, coeffs, dist, bundle, model).g0;
}

double psi_upper_bound(const CoefficientSet& coeffs, const InitialDistribution& dist, const RiccatiBundle& bundle,
                       MarketModel model, const SolverOptions& options) {
    const MarketTails tails(dist, model);
    if (!(tails.mean() > 0.0)) throw InvalidInput("upper bracket requires a positive mean");
    const double eta_T = coeffs.eta.back();
    const auto terminal = [&](double c) { return terminal_rate_for(c, tails, bundle.alpha_T, eta_T); };

    if (tails.buyer_mass() > 0.0) {
        // Root of the terminal rate: mu^{c0} vanishes identically there, so psi(c0) = c0 > 0.
        double lo = 0.0, hi = tails.mean();
        for (int k = 0; terminal(hi) > 0.0; ++k) {
            if (k >= options.max_doublings) throw NumericalFailure("terminal rate has no root within the doubling budget");
            lo = hi;
            hi *= 2.0;
        }
        for (int k = 0; k < options.max_bisections && hi - lo > options.tolerance * (1.0 + hi); ++k) {
            const double mid = 0.5 * (lo + hi);
            (terminal(mid) > 0.0 ? lo : hi) = mid;
        }
        return hi;
    }

    const double cap = tails.supp_upper();
    double c = std::min(tails.mean(), cap);
    for (int k = 0; k <= options.max_doublings; ++k) {
        if (psi(c, coeffs, dist, bundle, model) > 0.0) return c;
        if (c >= cap) break;
        c = std::min(2.0 * c, cap);
    }
    throw NumericalFailure("no positive psi found within the doubling budget");
}

EquilibriumSolution find_x_hat(const CoefficientSet& coeffs, const InitialDistribution& dist,
                               const RiccatiBundle& bundle, MarketModel model, const SolverOptions& options) {
    return solve_positive(std::make_shared<const CoefficientSet>(coeffs),
                          std::make_shared<const InitialDistribution>(dist),
                          std::make_shared<const RiccatiBundle>(bundle), model, options);
}

EquilibriumSolution solve_equilibrium(const CoefficientSet& coeffs, const InitialDistribution& dist, double delta,
                                      MarketModel model, const SolverOptions& options) {
    return solve_shared(std::make_shared<const CoefficientSet>(coeffs),
                        std::make_shared<const InitialDistribution>(dist), delta, model, options);
}

EquilibriumSolution solve_mfg(const CoefficientSet& coeffs, const InitialDistribution& dist,
                              const SolverOptions& options) {
    return solve_equilibrium(coeffs, dist, 0.0, MarketModel::dropout, options);
}

EquilibriumSolution solve_nplayer(const CoefficientSet& coeffs, const std::vector<double>& positions,
                                  const SolverOptions& options) {
    if (positions.empty()) throw InvalidInput("N-player game needs at least one player");
    const double delta = 1.0 / static_cast<double>(positions.size());
    const AssumptionReport report = validate_assumptions(coeffs, delta);
    if (!report.passes(true))
        throw InvalidInput("N-player cost assumptions violated for N = " + std::to_string(positions.size()) + "\n" +
                           report.describe());
    return solve_equilibrium(coeffs, make_empirical(positions), delta, MarketModel::dropout, options);
}

EquilibriumSolution solve_no_dropout_baseline(const CoefficientSet& coeffs, const InitialDistribution& dist,
                                              const SolverOptions& options) {
    return solve_equilibrium(coeffs, dist, 0.0, MarketModel::no_dropout, options);
}

std::pair<double, double> sign_bound_constants(const CoefficientSet& c, double delta) {
    const double inv_eta = c.inv_eta_sup();
    const double K1 = delta * c.kappa_sup() * inv_eta;
    const double K2 = inv_eta * ((1.0 + delta) * c.kappa_sup() + delta * c.T * c.kappa_dot_sup() +
                                 c.T * c.lambda_sup() + c.eta_dot_sup());
    return {K1, K2};
}

void write_mu_csv(std::ostream& os, const EquilibriumSolution& sol) {
    csv::header(os, {"t", "mu", "f"});
    for (std::size_t i = 0; i < sol.grid.size(); ++i) csv::row(os, {sol.grid[i], sol.mu[i], sol.f[i]});
}

}  // namespace mfl
