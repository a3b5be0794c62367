#include "mfl/strategies.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <limits>

#include "mfl/csv.hpp"
#include "mfl/error.hpp"

namespace mfl {

namespace {

// Index k with grid[k] <= t < grid[k+1]; the last node for t >= T.
std::size_t cell_of(const std::vector<double>& grid, double t) {
    if (t >= grid.back()) return grid.size() - 1;
    const auto it = std::upper_bound(grid.begin(), grid.end(), t);
    return static_cast<std::size_t>(it - grid.begin()) - 1;
}

double interp(const std::vector<double>& grid, const std::vector<double>& v, double t) {
    const std::size_t k = cell_of(grid, t);
    if (k + 1 >= grid.size()) return v.back();
    const double w = (t - grid[k]) / (grid[k + 1] - grid[k]);
    return (1.0 - w) * v[k] + w * v[k + 1];
}

void require_grid(const std::vector<double>& a, const std::vector<double>& b) {
    if (a != b) throw InvalidInput("paths and equilibrium must share one grid");
}

// Absorb a sampled path at its first sign change (or exact zero) after t = 0.
void absorb(Trajectory& tr, const std::vector<double>& grid) {
    const std::size_t n = grid.size();
    for (std::size_t i = 1; i < n; ++i) {
        if (tr.x * tr.X[i] > 0.0) continue;
        const double a = tr.X[i - 1], b = tr.X[i];
        double w = 1.0;
        if (b != 0.0) w = a / (a - b);
        tr.tau = grid[i - 1] + w * (grid[i] - grid[i - 1]);
        tr.xi_tau = (1.0 - w) * tr.xi[i - 1] + w * tr.xi[i];
        for (std::size_t j = i; j < n; ++j) {
            tr.X[j] = 0.0;
            tr.xi[j] = 0.0;
        }
        if (tr.tau >= grid.back()) {
            tr.tau = grid.back();
            tr.xi[n - 1] = tr.xi_tau;
        }
        return;
    }
    tr.tau = grid.back();
    tr.xi_tau = tr.xi.back();
}

Trajectory zero_trajectory(std::size_t n) {
    Trajectory tr;
    tr.X.assign(n, 0.0);
    tr.xi.assign(n, 0.0);
    return tr;
}

// Equilibrium (X, xi) at an arbitrary time, honouring the partial cell that ends at tau.
std::pair<double, double> sample(const Trajectory& p, const std::vector<double>& grid, double s) {
    if (s >= p.tau) return {0.0, s == p.tau ? p.xi_tau : 0.0};
    const std::size_t k = cell_of(grid, s);
    double t1 = grid[k + 1], X1 = p.X[k + 1], xi1 = p.xi[k + 1];
    if (t1 > p.tau) {
        t1 = p.tau;
        X1 = 0.0;
        xi1 = p.xi_tau;
    }
    const double w = (s - grid[k]) / (t1 - grid[k]);
    return {(1.0 - w) * p.X[k] + w * X1, (1.0 - w) * p.xi[k] + w * xi1};
}

struct Node {
    double x;
    double weight;  // quadrature weight times density
};

// Composite trapezoid over a fixed list of abscissae.
void add_trapezoid(std::vector<Node>& nodes, const std::vector<double>& xs, const InitialDistribution& dist) {
    for (std::size_t j = 0; j < xs.size(); ++j) {
        const double left = j > 0 ? std::abs(xs[j] - xs[j - 1]) : 0.0;
        const double right = j + 1 < xs.size() ? std::abs(xs[j + 1] - xs[j]) : 0.0;
        double x = xs[j];
        // One-sided limit at zero: a buyer near 0 trades until T, a seller near 0 leaves at once.
        if (x == 0.0) x = std::copysign(std::numeric_limits<double>::denorm_min(), xs[j > 0 ? j - 1 : j + 1]);
        nodes.push_back({x, 0.5 * (left + right) * dist.density(x)});
    }
}

// Nodes from `from` towards the tail end `to`, spaced so that cell widths grow like exp(|x - from| / (3m)).
std::vector<double> graded(double from, double to, double m, std::size_t n) {
    const double span = std::abs(to - from);
    const double sign = to > from ? 1.0 : -1.0;
    const double s_end = -std::expm1(-span / (3.0 * m));
    std::vector<double> xs(n + 1);
    for (std::size_t j = 0; j <= n; ++j) {
        const double u = static_cast<double>(j) / static_cast<double>(n) * s_end;
        xs[j] = j == n ? to : from - sign * 3.0 * m * std::log1p(-u);
    }
    return xs;
}

std::vector<double> uniform(double a, double b, std::size_t n) {
    std::vector<double> xs(n + 1);
    for (std::size_t j = 0; j <= n; ++j) xs[j] = j == n ? b : a + (b - a) * static_cast<double>(j) / static_cast<double>(n);
    return xs;
}

// Inner segment between 0 and x_hat is uniform with double emphasis; the exponential tails are graded.
std::vector<Node> analytic_nodes(const InitialDistribution& dist, double x_hat, std::size_t total) {
    const auto& e = *dist.exponential();
    const double x_max = dist.seller_truncation();
    const double x_min = dist.buyer_truncation();
    const double sell_from = x_hat > 0.0 ? std::min(x_hat, x_max) : 0.0;
    const double buy_from = x_hat < 0.0 ? std::max(x_hat, x_min) : 0.0;

    const double w_inner = 2.0 * std::abs(sell_from + buy_from);
    const double w_sell = x_max > sell_from ? 3.0 * e.mean_sell : 0.0;
    const double w_buy = x_min < buy_from ? 3.0 * e.mean_buy : 0.0;
    const double sum = w_inner + w_sell + w_buy;
    std::vector<Node> nodes;
    if (sum <= 0.0) return nodes;
    const auto share = [&](double w) {
        return std::max<std::size_t>(2, static_cast<std::size_t>(std::lround(static_cast<double>(total) * w / sum)));
    };
    if (w_buy > 0.0) add_trapezoid(nodes, graded(buy_from, x_min, e.mean_buy, share(w_buy)), dist);
    if (w_inner > 0.0) add_trapezoid(nodes, uniform(buy_from, sell_from, share(w_inner)), dist);
    if (w_sell > 0.0) add_trapezoid(nodes, graded(sell_from, x_max, e.mean_sell, share(w_sell)), dist);
    return nodes;
}

}  // namespace

FCurve f_curve(const std::vector<double>& mu, const CoefficientSet& coeffs, const RiccatiBundle& bundle) {
    require_grid(coeffs.grid, bundle.grid);
    if (mu.size() != coeffs.grid.size()) throw InvalidInput("mu must be sampled on the coefficient grid");
    const std::size_t n = mu.size();
    FCurve out;
    out.f.assign(n, 0.0);
    out.f_max.assign(n, 0.0);
    out.f_min.assign(n, 0.0);
    for (std::size_t i = 1; i < n; ++i) {
        const double a = coeffs.kappa[i - 1] * bundle.h[i - 1] * mu[i - 1];
        const double b = coeffs.kappa[i] * bundle.h[i] * mu[i];
        out.f[i] = out.f[i - 1] + 0.5 * (coeffs.grid[i] - coeffs.grid[i - 1]) * (a + b);
        out.f_max[i] = std::max(out.f_max[i - 1], out.f[i]);
        out.f_min[i] = std::min(out.f_min[i - 1], out.f[i]);
    }
    return out;
}

double liquidation_time(double x, const std::vector<double>& grid, const std::vector<double>& f,
                        const std::vector<double>& f_max, const std::vector<double>& f_min, MarketModel model) {
    const double T = grid.back();
    if (x == 0.0) return 0.0;
    if (model == MarketModel::no_dropout) return T;
    if (!(x > f_min.back() && x < f_max.back())) return T;
    for (std::size_t i = 1; i < grid.size(); ++i) {
        const bool reached = x > 0.0 ? f[i] >= x : f[i] <= x;
        if (!reached) continue;
        if (f[i] == x) return grid[i];
        const double w = (x - f[i - 1]) / (f[i] - f[i - 1]);
        return grid[i - 1] + w * (grid[i] - grid[i - 1]);
    }
    return T;
}

PlayerPath player_path(double x, const EquilibriumSolution& eq) {
    const auto& c = *eq.coeffs;
    const auto& b = *eq.bundle;
    const auto& t = eq.grid;
    require_grid(t, c.grid);
    require_grid(t, b.grid);
    const std::size_t n = t.size();
    const std::size_t M = n - 1;

    PlayerPath p;
    p.x = x;
    p.X.assign(n, 0.0);
    p.Y.assign(n, 0.0);
    p.B.assign(n, 0.0);
    p.xi.assign(n, 0.0);
    p.tau = liquidation_time(x, t, eq.f, eq.f_max, eq.f_min, eq.model);
    if (x == 0.0) return p;

    std::vector<double> source(n);
    for (std::size_t i = 0; i < n; ++i) source[i] = c.kappa[i] * eq.mu[i];

    const bool full = p.tau >= t[M];
    const std::size_t k = full ? M : cell_of(t, p.tau);
    if (!full && p.tau > t[k]) {
        const double r = interp(t, b.Efac, p.tau) / b.Efac[k];
        p.B[k] = 0.5 * (p.tau - t[k]) * (source[k] + r * interp(t, source, p.tau));
    }
    for (std::size_t i = k; i-- > 0;) {
        const double r = b.Efac[i + 1] / b.Efac[i];
        p.B[i] = r * p.B[i + 1] + 0.5 * (t[i + 1] - t[i]) * (source[i] + r * source[i + 1]);
    }
    for (std::size_t i = 0; i <= k; ++i) {
        const double z = x - eq.f[i] - b.h[i] * p.B[i];
        p.X[i] = b.D[i] * z;
        p.Y[i] = b.alpha[i] * z + p.B[i];
        p.xi[i] = (p.Y[i] - eq.delta * c.kappa[i] * p.X[i]) / c.eta[i];
    }
    if (full) {
        p.X[M] = 0.0;
        p.xi_tau = p.xi[M];
    } else {
        if (p.tau == t[k]) {
            p.X[k] = p.Y[k] = p.xi[k] = 0.0;
        }
        p.xi_tau = 0.0;
    }
    p.cost = cost_mfg(p, eq);
    return p;
}

double integrate_to_tau(const std::vector<double>& grid, const std::vector<double>& v, double tau, double value_tau) {
    if (tau <= grid.front()) return 0.0;
    const std::size_t k = cell_of(grid, tau);
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        const double right = i + 1 == k && tau == grid[k] ? value_tau : v[i + 1];
        sum += 0.5 * (grid[i + 1] - grid[i]) * (v[i] + right);
    }
    if (k + 1 < grid.size() && tau > grid[k]) sum += 0.5 * (tau - grid[k]) * (v[k] + value_tau);
    return sum;
}

double cost_mfg(const Trajectory& path, const EquilibriumSolution& eq) {
    const auto& c = *eq.coeffs;
    const std::size_t n = eq.grid.size();
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double X = path.X[i], xi = path.xi[i];
        g[i] = 0.5 * c.eta[i] * xi * xi + c.kappa[i] * eq.mu[i] * X + 0.5 * c.lambda[i] * X * X;
    }
    const double g_tau = 0.5 * interp(eq.grid, c.eta, path.tau) * path.xi_tau * path.xi_tau;
    return integrate_to_tau(eq.grid, g, path.tau, g_tau);
}

double cost_nplayer(const Trajectory& own, std::size_t i, const std::vector<PlayerPath>& others,
                    const EquilibriumSolution& eq) {
    const auto& c = *eq.coeffs;
    const std::size_t n = eq.grid.size();
    const double N = static_cast<double>(others.size());
    if (i >= others.size()) throw InvalidInput("player index out of range");
    std::vector<double> g(n);
    for (std::size_t m = 0; m < n; ++m) {
        double total = own.xi[m];
        for (std::size_t j = 0; j < others.size(); ++j)
            if (j != i) total += others[j].xi[m];
        const double X = own.X[m], xi = own.xi[m];
        g[m] = 0.5 * c.eta[m] * xi * xi + c.kappa[m] * X * total / N + 0.5 * c.lambda[m] * X * X;
    }
    const double g_tau = 0.5 * interp(eq.grid, c.eta, own.tau) * own.xi_tau * own.xi_tau;
    return integrate_to_tau(eq.grid, g, own.tau, g_tau);
}

namespace {

std::string short_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

}  // namespace

std::string CompetitorSpec::label() const {
    switch (kind) {
        case CompetitorKind::twap_full_horizon: return "twap_full_horizon";
        case CompetitorKind::twap_to_tau: return "twap_to_tau";
        case CompetitorKind::scaled_equilibrium: return "scaled(" + short_number(parameter) + ")";
        case CompetitorKind::early_stop: return "early_stop(" + short_number(parameter) + ")";
        case CompetitorKind::equilibrium: return "equilibrium";
    }
    return "unknown";
}

std::vector<CompetitorSpec> default_competitor_battery() {
    return {{CompetitorKind::twap_full_horizon, 1.0}, {CompetitorKind::twap_to_tau, 1.0},
            {CompetitorKind::scaled_equilibrium, 1.1}, {CompetitorKind::scaled_equilibrium, 0.9},
            {CompetitorKind::early_stop, 0.8},         {CompetitorKind::early_stop, 0.5}};
}

Trajectory competitor_trajectory(const CompetitorSpec& spec, const PlayerPath& eqp, const std::vector<double>& grid) {
    const std::size_t n = grid.size();
    const double T = grid.back();
    const double x = eqp.x;
    Trajectory tr = zero_trajectory(n);
    tr.x = x;
    if (x == 0.0) return tr;

    switch (spec.kind) {
        case CompetitorKind::equilibrium:
            tr.tau = eqp.tau;
            tr.X = eqp.X;
            tr.xi = eqp.xi;
            tr.xi_tau = eqp.xi_tau;
            return tr;
        case CompetitorKind::twap_full_horizon:
        case CompetitorKind::twap_to_tau: {
            const double end = spec.kind == CompetitorKind::twap_full_horizon ? T : eqp.tau;
            tr.tau = end;
            tr.xi_tau = x / end;
            for (std::size_t i = 0; i < n && grid[i] < end; ++i) {
                tr.X[i] = x * (1.0 - grid[i] / end);
                tr.xi[i] = x / end;
            }
            if (end >= T) tr.xi[n - 1] = x / end;
            return tr;
        }
        case CompetitorKind::scaled_equilibrium: {
            const double s = spec.parameter;
            for (std::size_t i = 0; i < n; ++i) {
                tr.X[i] = s * eqp.X[i] + (1.0 - s) * x * (1.0 - grid[i] / T);
                tr.xi[i] = s * eqp.xi[i] + (1.0 - s) * x / T;
            }
            absorb(tr, grid);
            return tr;
        }
        case CompetitorKind::early_stop: {
            const double frac = spec.parameter;
            if (!(frac > 0.0 && frac <= 1.0)) throw InvalidInput("early_stop fraction must lie in (0, 1]");
            tr.tau = frac * eqp.tau;
            tr.xi_tau = eqp.xi_tau / frac;
            for (std::size_t i = 0; i < n && grid[i] < tr.tau; ++i) {
                const auto [X, xi] = sample(eqp, grid, grid[i] / frac);
                tr.X[i] = X;
                tr.xi[i] = xi / frac;
            }
            if (tr.tau >= T) tr.xi[n - 1] = tr.xi_tau;
            return tr;
        }
    }
    return tr;
}

std::vector<double> fixed_point_map(const EquilibriumSolution& eq, std::size_t x_nodes) {
    const auto& dist = *eq.dist;
    const std::size_t n = eq.grid.size();
    std::vector<double> F(n, 0.0);
    if (const auto* atoms = dist.empirical()) {
        const double w = 1.0 / static_cast<double>(atoms->positions.size());
        for (double x : atoms->positions) {
            const PlayerPath p = player_path(x, eq);
            for (std::size_t i = 0; i < n; ++i) F[i] += w * p.xi[i];
        }
        return F;
    }
    for (const Node& node : analytic_nodes(dist, eq.x_hat, x_nodes)) {
        if (node.weight == 0.0) continue;
        const PlayerPath p = player_path(node.x, eq);
        for (std::size_t i = 0; i < n; ++i) F[i] += node.weight * p.xi[i];
    }
    return F;
}

double fixed_point_residual(const EquilibriumSolution& eq, std::size_t x_nodes) {
    const auto F = fixed_point_map(eq, x_nodes);
    double sup = 0.0;
    for (std::size_t i = 0; i < F.size(); ++i) sup = std::max(sup, std::abs(eq.mu[i] - F[i]));
    return sup;
}

EquilibriumSolution with_mu(const EquilibriumSolution& eq, std::vector<double> mu) {
    EquilibriumSolution out = eq;
    FCurve fc = f_curve(mu, *eq.coeffs, *eq.bundle);
    out.mu = std::move(mu);
    out.f = std::move(fc.f);
    out.f_max = std::move(fc.f_max);
    out.f_min = std::move(fc.f_min);
    out.mu_T = out.mu.back();
    out.residual.reset();
    return out;
}

namespace {

void record(NashReport& report, NashEntry entry, double tolerance) {
    entry.margin = entry.competitor_cost - entry.equilibrium_cost;
    entry.violation = entry.margin < -tolerance * (1.0 + std::abs(entry.equilibrium_cost));
    if (entry.violation) ++report.violations;
    report.min_margin = report.entries.empty() ? entry.margin : std::min(report.min_margin, entry.margin);
    report.entries.push_back(std::move(entry));
}

}  // namespace

NashReport nash_check(const std::vector<double>& positions, const EquilibriumSolution& eq,
                      const std::vector<CompetitorSpec>& battery, double tolerance) {
    std::vector<PlayerPath> paths;
    paths.reserve(positions.size());
    for (double x : positions) paths.push_back(player_path(x, eq));
    NashReport report;
    for (std::size_t i = 0; i < paths.size(); ++i) {
        const double base = cost_nplayer(paths[i], i, paths, eq);
        for (const auto& spec : battery) {
            const Trajectory alt = competitor_trajectory(spec, paths[i], eq.grid);
            record(report, {i, positions[i], spec.label(), base, cost_nplayer(alt, i, paths, eq)}, tolerance);
        }
    }
    return report;
}

NashReport mfg_optimality_check(const std::vector<double>& xs, const EquilibriumSolution& eq,
                                const std::vector<CompetitorSpec>& battery, double tolerance) {
    NashReport report;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const PlayerPath p = player_path(xs[i], eq);
        for (const auto& spec : battery) {
            const Trajectory alt = competitor_trajectory(spec, p, eq.grid);
            record(report, {i, xs[i], spec.label(), p.cost, cost_mfg(alt, eq)}, tolerance);
        }
    }
    return report;
}

void write_paths_csv(std::ostream& os, const std::vector<PlayerPath>& paths, const std::vector<double>& grid) {
    csv::header(os, {"player_id", "t", "X", "Y", "xi"});
    for (std::size_t j = 0; j < paths.size(); ++j)
        for (std::size_t i = 0; i < grid.size(); ++i)
            csv::row(os, {static_cast<double>(j), grid[i], paths[j].X[i], paths[j].Y[i], paths[j].xi[i]});
}

void write_players_csv(std::ostream& os, const std::vector<PlayerPath>& paths) {
    csv::header(os, {"player_id", "x", "tau", "cost"});
    for (std::size_t j = 0; j < paths.size(); ++j)
        csv::row(os, {static_cast<double>(j), paths[j].x, paths[j].tau, paths[j].cost});
}

}  // namespace mfl
