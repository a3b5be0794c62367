#include "mfl/experiments.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <numeric>

#include "mfl/error.hpp"

namespace mfl {

ScenarioSpec one_sided_preset(std::size_t M) {
    ScenarioSpec s;
    s.name = "one_sided";
    s.M = M;
    s.coeffs = make_constant_coefficients(5.0, 10.0, 5.0, 1.0, M);
    s.dist = make_exponential_sellers(1.5);
    s.x_samples = {0.25, 0.75, 1.5, 3.0};
    return s;
}

ScenarioSpec two_sided_preset(std::size_t M) {
    ScenarioSpec s;
    s.name = "two_sided";
    s.M = M;
    s.coeffs = make_constant_coefficients(5.0, 10.0, 5.0, 1.0, M);
    s.dist = make_two_sided(0.8, 1.5, 0.2, 1.0);
    s.x_samples = {-1.0, -0.05, 0.25, 0.75, 1.5, 3.0};
    return s;
}

ScenarioResult run_scenario(const ScenarioSpec& spec, const SolverOptions& options) {
    ScenarioResult r;
    r.dropout = solve_mfg(spec.coeffs, spec.dist, options);
    r.baseline = solve_no_dropout_baseline(spec.coeffs, spec.dist, options);
    for (double x : spec.x_samples) {
        r.dropout_paths.push_back(player_path(x, r.dropout));
        r.baseline_paths.push_back(player_path(x, r.baseline));
    }
    return r;
}

std::vector<double> quantile_positions(const InitialDistribution& dist, std::size_t N) {
    const auto* tails = dist.exponential();
    if (!tails) throw InvalidInput("quantile positions need an analytic measure");
    if (N == 0) throw InvalidInput("quantile positions need N >= 1");

    // Largest-remainder split of N atoms over sellers, buyers and the zero atom.
    const std::array<double, 3> mass{tails->w_sell, tails->w_buy, tails->atom_at_zero()};
    std::array<std::size_t, 3> count{};
    std::array<double, 3> rest{};
    std::size_t used = 0;
    for (std::size_t s = 0; s < 3; ++s) {
        const double share = mass[s] * static_cast<double>(N);
        count[s] = static_cast<std::size_t>(std::floor(share));
        rest[s] = share - static_cast<double>(count[s]);
        used += count[s];
    }
    std::array<std::size_t, 3> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rest[a] > rest[b]; });
    for (std::size_t k = 0; used < N; ++k, ++used) ++count[order[k % 3]];

    std::vector<double> out;
    out.reserve(N);
    const auto side = [&](std::size_t n, double mean, double sign) {
        for (std::size_t j = 1; j <= n; ++j) {
            const double level = (static_cast<double>(j) - 0.5) / static_cast<double>(n);
            out.push_back(sign * -mean * std::log1p(-level));
        }
    };
    side(count[0], tails->mean_sell, 1.0);
    side(count[1], tails->mean_buy, -1.0);
    out.insert(out.end(), count[2], 0.0);
    std::sort(out.begin(), out.end());
    return out;
}

double seller_tail_error(const InitialDistribution& dist, const std::vector<double>& positions) {
    std::vector<double> xs(positions);
    std::sort(xs.begin(), xs.end());
    const double N = static_cast<double>(xs.size());
    const auto at_least = [&](double x) {
        return static_cast<double>(xs.end() - std::lower_bound(xs.begin(), xs.end(), x)) / N;
    };
    const auto above = [&](double x) {
        return static_cast<double>(xs.end() - std::upper_bound(xs.begin(), xs.end(), x)) / N;
    };
    double sup = std::abs(at_least(0.0) - dist.q0(0.0));
    for (double a : xs) {
        if (a < 0.0) continue;
        const double q = a == 0.0 ? dist.q0(std::nextafter(0.0, 1.0)) : dist.q0(a);
        sup = std::max({sup, std::abs(at_least(a) - q), std::abs(above(a) - q)});
    }
    return sup;
}

std::vector<ConvergenceRow> convergence_study(const ScenarioSpec& spec, std::vector<std::size_t> Ns,
                                              const SolverOptions& options) {
    if (!(spec.dist.mean() > 0.0)) throw InvalidInput("convergence study expects a positive mean");
    std::sort(Ns.begin(), Ns.end());
    const EquilibriumSolution mfg = solve_mfg(spec.coeffs, spec.dist, options);
    std::vector<ConvergenceRow> rows;
    for (std::size_t N : Ns) {
        const auto start = std::chrono::steady_clock::now();
        const EquilibriumSolution game = solve_nplayer(spec.coeffs, quantile_positions(spec.dist, N), options);
        const auto stop = std::chrono::steady_clock::now();
        ConvergenceRow row;
        row.N = N;
        for (std::size_t i = 0; i < mfg.mu.size(); ++i)
            row.sup_error = std::max(row.sup_error, std::abs(game.mu[i] - mfg.mu[i]));
        row.x_hat_N = game.x_hat;
        row.runtime = std::chrono::duration<double>(stop - start).count();
        rows.push_back(row);
    }
    return rows;
}

std::vector<double> detect_kinks(const std::vector<double>& grid, const std::vector<double>& mu, double factor,
                                 std::size_t half_window) {
    const std::size_t n = grid.size();
    if (n < 4 || mu.size() != n) return {};
    std::vector<double> slope(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) slope[i] = (mu[i + 1] - mu[i]) / (grid[i + 1] - grid[i]);
    // jump[i] sits at node i + 1
    std::vector<double> jump(n - 2);
    for (std::size_t i = 0; i + 1 < slope.size(); ++i) jump[i] = std::abs(slope[i + 1] - slope[i]);
    const double scale = *std::max_element(jump.begin(), jump.end());

    std::vector<std::size_t> flagged;
    std::vector<double> window;
    for (std::size_t i = 0; i < jump.size(); ++i) {
        const std::size_t lo = i > half_window ? i - half_window : 0;
        const std::size_t hi = std::min(jump.size(), i + half_window + 1);
        window.assign(jump.begin() + static_cast<std::ptrdiff_t>(lo), jump.begin() + static_cast<std::ptrdiff_t>(hi));
        auto mid = window.begin() + static_cast<std::ptrdiff_t>(window.size() / 2);
        std::nth_element(window.begin(), mid, window.end());
        if (jump[i] > factor * *mid && jump[i] > 1e-12 * scale) flagged.push_back(i);
    }

    std::vector<double> kinks;
    for (std::size_t a = 0; a < flagged.size();) {
        std::size_t b = a, best = flagged[a];
        while (b + 1 < flagged.size() && flagged[b + 1] <= flagged[b] + 2) {
            ++b;
            if (jump[flagged[b]] > jump[best]) best = flagged[b];
        }
        kinks.push_back(grid[best + 1]);
        a = b + 1;
    }
    return kinks;
}

}  // namespace mfl
