#include "mfl/riccati.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <ostream>

#include "mfl/csv.hpp"
#include "mfl/error.hpp"

namespace mfl {

namespace {

struct NodeCoefficients {
    double eta, kappa, lambda;
};

NodeCoefficients node(const CoefficientSet& c, std::size_t i) { return {c.eta[i], c.kappa[i], c.lambda[i]}; }

NodeCoefficients midpoint(const CoefficientSet& c, std::size_t i) {
    return {0.5 * (c.eta[i] + c.eta[i + 1]), 0.5 * (c.kappa[i] + c.kappa[i + 1]),
            0.5 * (c.lambda[i] + c.lambda[i + 1])};
}

// y' for y = 1/A.
double inverse_rhs(const NodeCoefficients& k, double delta, double y) {
    return -1.0 / k.eta + delta * k.kappa * y / k.eta + k.lambda * y * y;
}

// Forward state: alpha, int_0^t delta*kappa/eta, int_0^t lambda * exp(kappa_log) / alpha^2.
using Forward = std::array<double, 3>;

Forward forward_rhs(const NodeCoefficients& k, double delta, double y, const Forward& s) {
    const double alpha = s[0];
    return {-k.lambda * y * alpha, delta * k.kappa / k.eta, k.lambda * std::exp(s[1]) / (alpha * alpha)};
}

Forward axpy(const Forward& s, double a, const Forward& k) { return {s[0] + a * k[0], s[1] + a * k[1], s[2] + a * k[2]}; }

}  // namespace

RiccatiBundle solve_riccati(const CoefficientSet& coeffs, double delta) {
    const AssumptionReport report = validate_assumptions(coeffs, delta);
    if (!report.passes()) throw InvalidInput("coefficient assumptions violated\n" + report.describe());

    const std::size_t M = coeffs.intervals();
    const auto& t = coeffs.grid;

    RiccatiBundle b;
    b.delta = delta;
    b.grid = t;
    b.y.assign(M + 1, 0.0);
    std::vector<double> dy(M + 1, 0.0);

    // Backward RK4 for y from y(T) = 0.
    dy[M] = inverse_rhs(node(coeffs, M), delta, 0.0);
    for (std::size_t i = M; i-- > 0;) {
        const double h = t[i] - t[i + 1];
        const auto right = node(coeffs, i + 1);
        const auto mid = midpoint(coeffs, i);
        const auto left = node(coeffs, i);
        const double y1 = b.y[i + 1];
        const double k1 = inverse_rhs(right, delta, y1);
        const double k2 = inverse_rhs(mid, delta, y1 + 0.5 * h * k1);
        const double k3 = inverse_rhs(mid, delta, y1 + 0.5 * h * k2);
        const double k4 = inverse_rhs(left, delta, y1 + h * k3);
        b.y[i] = y1 + h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
        dy[i] = inverse_rhs(left, delta, b.y[i]);
        if (!(b.y[i] > 0.0) || !std::isfinite(b.y[i]))
            throw NumericalFailure("inverse Riccati solution left (0, inf) at node " + std::to_string(i));
    }

    // Forward RK4 for alpha and the auxiliary integrals; y at midpoints by cubic Hermite interpolation.
    b.alpha.assign(M + 1, 0.0);
    b.kappa_log.assign(M + 1, 0.0);
    std::vector<double> lam_integral(M + 1, 0.0);
    Forward s{1.0 / b.y[0], 0.0, 0.0};
    b.alpha[0] = s[0];
    for (std::size_t i = 0; i < M; ++i) {
        const double h = t[i + 1] - t[i];
        const double y_mid = 0.5 * (b.y[i] + b.y[i + 1]) + h * (dy[i] - dy[i + 1]) / 8.0;
        const auto left = node(coeffs, i);
        const auto mid = midpoint(coeffs, i);
        const auto right = node(coeffs, i + 1);
        const Forward k1 = forward_rhs(left, delta, b.y[i], s);
        const Forward k2 = forward_rhs(mid, delta, y_mid, axpy(s, 0.5 * h, k1));
        const Forward k3 = forward_rhs(mid, delta, y_mid, axpy(s, 0.5 * h, k2));
        const Forward k4 = forward_rhs(right, delta, b.y[i + 1], axpy(s, h, k3));
        for (std::size_t j = 0; j < 3; ++j) s[j] += h * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]) / 6.0;
        if (!(s[0] > 0.0) || !std::isfinite(s[0]))
            throw NumericalFailure("alpha left (0, inf) at node " + std::to_string(i + 1));
        b.alpha[i + 1] = s[0];
        b.kappa_log[i + 1] = s[1];
        lam_integral[i + 1] = s[2];
    }

    const double y0 = b.y[0];
    b.A.resize(M + 1);
    b.D.resize(M + 1);
    b.Efac.resize(M + 1);
    b.h.resize(M + 1);
    b.h_dot.resize(M + 1);
    for (std::size_t i = 0; i <= M; ++i) {
        const double decay = std::exp(-b.kappa_log[i]);
        b.A[i] = i == M ? std::numeric_limits<double>::infinity() : 1.0 / b.y[i];
        b.D[i] = b.alpha[i] * b.y[i];
        b.Efac[i] = b.D[i] * decay;
        // h = 1/alpha - Efac * (1/A_0 + int lambda e^{kappa_log} / alpha^2), and
        // h' = (1/alpha - h) / (eta * y) simplifies to the expression below, finite at T.
        b.h[i] = 1.0 / b.alpha[i] - b.Efac[i] * (y0 + lam_integral[i]);
        b.h_dot[i] = b.alpha[i] * decay * (y0 + lam_integral[i]) / coeffs.eta[i];
    }
    b.h[0] = 0.0;
    b.alpha_T = b.alpha[M];
    b.h_T = b.h[M];
    return b;
}

double alpha_terminal(const RiccatiBundle& bundle) { return bundle.alpha_T; }

double discount(const RiccatiBundle& b, double s, double t) {
    const double T = b.grid.back();
    if (!(s >= b.grid.front() && t <= T && s <= t)) throw InvalidInput("discount requires 0 <= s <= t <= T");
    if (s == t) return 1.0;
    auto efac_at = [&](double u) {
        if (u >= T) return b.Efac.back();
        const auto it = std::upper_bound(b.grid.begin(), b.grid.end(), u);
        const std::size_t j = static_cast<std::size_t>(it - b.grid.begin());
        const double w = (u - b.grid[j - 1]) / (b.grid[j] - b.grid[j - 1]);
        return (1.0 - w) * b.Efac[j - 1] + w * b.Efac[j];
    };
    const double ratio = efac_at(t) / efac_at(s);
    return std::clamp(ratio, 0.0, 1.0);
}

void write_bundle_csv(std::ostream& os, const RiccatiBundle& b) {
    csv::header(os, {"t", "y", "A", "alpha", "D", "Efac", "h", "h_dot"});
    for (std::size_t i = 0; i < b.grid.size(); ++i)
        csv::row(os, {b.grid[i], b.y[i], b.A[i], b.alpha[i], b.D[i], b.Efac[i], b.h[i], b.h_dot[i]});
}

}  // namespace mfl
