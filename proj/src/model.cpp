#include "mfl/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "mfl/error.hpp"

namespace mfl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double sup_abs(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

void check_positive_coefficients(const CoefficientSet& c) {
    for (std::size_t i = 0; i < c.nodes(); ++i) {
        if (!(c.eta[i] > 0.0) || !std::isfinite(c.eta[i]))
            throw InvalidCoefficients("eta must be positive and finite (node " + std::to_string(i) + ")");
        if (!(c.kappa[i] >= 0.0) || !std::isfinite(c.kappa[i]))
            throw InvalidCoefficients("kappa must be non-negative and finite (node " + std::to_string(i) + ")");
        if (!(c.lambda[i] >= 0.0) || !std::isfinite(c.lambda[i]))
            throw InvalidCoefficients("lambda must be non-negative and finite (node " + std::to_string(i) + ")");
    }
}

// Second-order finite differences: central inside, one-sided three-point stencils at the ends.
std::vector<double> differentiate(const std::vector<double>& t, const std::vector<double>& v) {
    const std::size_t n = t.size();
    std::vector<double> d(n, 0.0);
    if (n == 2) {
        d[0] = d[1] = (v[1] - v[0]) / (t[1] - t[0]);
        return d;
    }
    auto three_point = [&](std::size_t a, std::size_t b, std::size_t c, double at) {
        // derivative of the quadratic through (t_a, v_a), (t_b, v_b), (t_c, v_c) evaluated at `at`
        const double la = ((at - t[b]) + (at - t[c])) / ((t[a] - t[b]) * (t[a] - t[c]));
        const double lb = ((at - t[a]) + (at - t[c])) / ((t[b] - t[a]) * (t[b] - t[c]));
        const double lc = ((at - t[a]) + (at - t[b])) / ((t[c] - t[a]) * (t[c] - t[b]));
        return la * v[a] + lb * v[b] + lc * v[c];
    };
    d[0] = three_point(0, 1, 2, t[0]);
    for (std::size_t i = 1; i + 1 < n; ++i) d[i] = three_point(i - 1, i, i + 1, t[i]);
    d[n - 1] = three_point(n - 3, n - 2, n - 1, t[n - 1]);
    return d;
}

}  // namespace

double CoefficientSet::at(std::span<const double> column, double t) const {
    if (t <= grid.front()) return column.front();
    if (t >= grid.back()) return column.back();
    const auto it = std::upper_bound(grid.begin(), grid.end(), t);
    const std::size_t j = static_cast<std::size_t>(it - grid.begin());
    const double w = (t - grid[j - 1]) / (grid[j] - grid[j - 1]);
    return (1.0 - w) * column[j - 1] + w * column[j];
}

double CoefficientSet::eta_sup() const { return sup_abs(eta); }
double CoefficientSet::kappa_sup() const { return sup_abs(kappa); }
double CoefficientSet::lambda_sup() const { return sup_abs(lambda); }
double CoefficientSet::eta_dot_sup() const { return sup_abs(eta_dot); }
double CoefficientSet::kappa_dot_sup() const { return sup_abs(kappa_dot); }

double CoefficientSet::inv_eta_sup() const {
    double m = 0.0;
    for (double e : eta) m = std::max(m, 1.0 / e);
    return m;
}

CoefficientSet make_constant_coefficients(double eta, double kappa, double lambda, double T, std::size_t M) {
    if (!(T > 0.0)) throw InvalidCoefficients("horizon T must be positive");
    if (M < 2) throw InvalidCoefficients("grid needs at least 2 intervals");
    CoefficientSet c;
    c.T = T;
    c.grid.resize(M + 1);
    for (std::size_t i = 0; i <= M; ++i) c.grid[i] = T * static_cast<double>(i) / static_cast<double>(M);
    c.grid[M] = T;
    c.eta.assign(M + 1, eta);
    c.kappa.assign(M + 1, kappa);
    c.lambda.assign(M + 1, lambda);
    c.eta_dot.assign(M + 1, 0.0);
    c.kappa_dot.assign(M + 1, 0.0);
    check_positive_coefficients(c);
    return c;
}

CoefficientSet make_sampled_coefficients(std::vector<double> grid, std::vector<double> eta,
                                         std::vector<double> kappa, std::vector<double> lambda) {
    const std::size_t n = grid.size();
    if (n < 3) throw InvalidCoefficients("sampled coefficients need at least 3 grid points");
    if (eta.size() != n || kappa.size() != n || lambda.size() != n)
        throw InvalidCoefficients("coefficient columns must match the grid length");
    if (grid.front() != 0.0) throw InvalidCoefficients("grid must start at t = 0");
    for (std::size_t i = 1; i < n; ++i)
        if (!(grid[i] > grid[i - 1])) throw InvalidCoefficients("grid must be strictly increasing");

    CoefficientSet c;
    c.T = grid.back();
    c.eta_dot = differentiate(grid, eta);
    c.kappa_dot = differentiate(grid, kappa);
    c.grid = std::move(grid);
    c.eta = std::move(eta);
    c.kappa = std::move(kappa);
    c.lambda = std::move(lambda);
    check_positive_coefficients(c);
    return c;
}

double ExponentialTails::atom_at_zero() const { return std::max(0.0, 1.0 - w_sell - w_buy); }

InitialDistribution::InitialDistribution(ExponentialTails tails) : repr_(tails) {
    mean_ = tails.w_sell * tails.mean_sell - tails.w_buy * tails.mean_buy;
}

InitialDistribution::InitialDistribution(EmpiricalAtoms atoms) {
    std::sort(atoms.positions.begin(), atoms.positions.end());
    const double n = static_cast<double>(atoms.positions.size());
    mean_ = std::accumulate(atoms.positions.begin(), atoms.positions.end(), 0.0) / n;
    repr_ = std::move(atoms);
}

DistributionKind InitialDistribution::kind() const {
    return std::holds_alternative<EmpiricalAtoms>(repr_) ? DistributionKind::empirical : DistributionKind::analytic;
}

double InitialDistribution::q0(double x) const {
    if (const auto* e = exponential()) {
        if (x > 0.0) return e->w_sell * std::exp(-x / e->mean_sell);
        const double at_zero = e->w_sell + e->atom_at_zero();
        if (x == 0.0) return at_zero;
        return at_zero + e->w_buy * (1.0 - std::exp(x / e->mean_buy));
    }
    const auto& p = empirical()->positions;
    const auto first = std::lower_bound(p.begin(), p.end(), x);
    return static_cast<double>(p.end() - first) / static_cast<double>(p.size());
}

double InitialDistribution::p0(double x) const {
    if (const auto* e = exponential()) {
        if (x < 0.0) return e->w_buy * std::exp(x / e->mean_buy);
        const double at_zero = e->w_buy + e->atom_at_zero();
        if (x == 0.0) return at_zero;
        return at_zero + e->w_sell * (1.0 - std::exp(-x / e->mean_sell));
    }
    const auto& p = empirical()->positions;
    const auto last = std::upper_bound(p.begin(), p.end(), x);
    return static_cast<double>(last - p.begin()) / static_cast<double>(p.size());
}

double InitialDistribution::Q0(double x) const {
    if (x <= 0.0) return 0.0;
    if (const auto* e = exponential()) return e->w_sell * e->mean_sell * (-std::expm1(-x / e->mean_sell));
    const auto& p = empirical()->positions;
    double s = 0.0;
    for (auto it = std::upper_bound(p.begin(), p.end(), 0.0); it != p.end(); ++it) s += std::min(*it, x);
    return s / static_cast<double>(p.size());
}

double InitialDistribution::supp_upper() const {
    if (const auto* e = exponential()) return e->w_sell > 0.0 ? kInf : 0.0;
    return empirical()->positions.back();
}

double InitialDistribution::supp_lower() const {
    if (const auto* e = exponential()) return e->w_buy > 0.0 ? -kInf : 0.0;
    return empirical()->positions.front();
}

InitialDistribution InitialDistribution::reflected() const {
    if (const auto* e = exponential()) {
        return InitialDistribution(ExponentialTails{e->w_buy, e->mean_buy, e->w_sell, e->mean_sell});
    }
    EmpiricalAtoms mirrored{empirical()->positions};
    for (double& x : mirrored.positions) x = -x;
    return InitialDistribution(std::move(mirrored));
}

double InitialDistribution::density(double x) const {
    const auto* e = exponential();
    if (e == nullptr) return 0.0;
    if (x > 0.0) return e->w_sell / e->mean_sell * std::exp(-x / e->mean_sell);
    if (x < 0.0) return e->w_buy / e->mean_buy * std::exp(x / e->mean_buy);
    return 0.0;
}

double InitialDistribution::seller_truncation(double cutoff) const {
    if (const auto* e = exponential()) {
        if (e->w_sell <= cutoff) return 0.0;
        return e->mean_sell * std::log(e->w_sell / cutoff);
    }
    return std::max(0.0, empirical()->positions.back());
}

double InitialDistribution::buyer_truncation(double cutoff) const {
    if (const auto* e = exponential()) {
        if (e->w_buy <= cutoff) return 0.0;
        return -e->mean_buy * std::log(e->w_buy / cutoff);
    }
    return std::min(0.0, empirical()->positions.front());
}

InitialDistribution make_exponential_sellers(double mean_pos) {
    if (!(mean_pos > 0.0) || !std::isfinite(mean_pos))
        throw InvalidDistribution("exponential mean must be positive and finite");
    return InitialDistribution(ExponentialTails{1.0, mean_pos, 0.0, 1.0});
}

InitialDistribution make_two_sided(double w_sell, double mean_sell, double w_buy, double mean_buy) {
    constexpr double tol = 1e-12;
    if (!(w_sell >= 0.0) || !(w_buy >= 0.0)) throw InvalidDistribution("weights must be non-negative");
    if (!(mean_sell > 0.0) || !(mean_buy > 0.0) || !std::isfinite(mean_sell) || !std::isfinite(mean_buy))
        throw InvalidDistribution("side means must be positive and finite");
    const double total = w_sell + w_buy;
    if (total > 1.0 + tol) throw InvalidDistribution("weights sum to more than one");
    if (total > 1.0) {
        w_sell /= total;
        w_buy /= total;
    }
    return InitialDistribution(ExponentialTails{w_sell, mean_sell, w_buy, mean_buy});
}

InitialDistribution make_empirical(std::vector<double> positions) {
    if (positions.empty()) throw InvalidDistribution("empirical distribution needs at least one position");
    for (double x : positions)
        if (!std::isfinite(x)) throw InvalidDistribution("positions must be finite");
    return InitialDistribution(EmpiricalAtoms{std::move(positions)});
}

AssumptionReport validate_assumptions(const CoefficientSet& c, double delta) {
    if (!(delta >= 0.0 && delta <= 1.0)) throw InvalidInput("delta must lie in [0, 1]");
    AssumptionReport r;
    r.delta = delta;
    for (std::size_t i = 0; i < c.nodes(); ++i) {
        if (!(c.eta[i] > 0.0) || !(c.kappa[i] >= 0.0) || !(c.lambda[i] >= 0.0)) r.standing_violations.push_back(i);
        if (!(c.lambda[i] + delta * c.kappa_dot[i] >= 0.0)) r.mean_field_violations.push_back(i);
        if (!(c.eta[i] - delta * c.kappa[i] > 0.0) || !(c.lambda[i] - delta * c.kappa[i] >= 0.0))
            r.n_player_violations.push_back(i);
    }
    r.standing = r.standing_violations.empty();
    r.mean_field = r.mean_field_violations.empty();
    r.n_player = r.n_player_violations.empty();
    return r;
}

std::string AssumptionReport::describe() const {
    std::ostringstream os;
    auto line = [&](const char* name, bool ok, const std::vector<std::size_t>& bad) {
        os << name << ": " << (ok ? "ok" : "violated");
        if (!ok) os << " at " << bad.size() << " node(s), first at node " << bad.front();
        os << '\n';
    };
    os << "delta = " << delta << '\n';
    line("eta > 0, kappa >= 0, lambda >= 0", standing, standing_violations);
    line("lambda + delta*kappa_dot >= 0", mean_field, mean_field_violations);
    line("eta - delta*kappa > 0, lambda - delta*kappa >= 0", n_player, n_player_violations);
    return os.str();
}

}  // namespace mfl
