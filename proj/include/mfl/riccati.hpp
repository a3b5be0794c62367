#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "mfl/model.hpp"

namespace mfl {

/**
 * Deterministic quantities derived from the singular Riccati equation
 *
 *     -A' = -A^2/eta + delta*kappa*A/eta + lambda,   A(t) -> +inf as t -> T.
 *
 * The equation is never integrated for A itself. y = 1/A solves a regular ODE with
 * y(T) = 0, and every other column is expressed through finite quantities:
 *
 *   alpha = A * exp(-int_0^t (A - delta*kappa)/eta)      (non-increasing, alpha_T > 0)
 *   D     = exp(-int_0^t (A - delta*kappa)/eta) = alpha * y
 *   Efac  = exp(-int_0^t A/eta)
 *   h     = Efac * int_0^t exp(int_0^s (2A - delta*kappa)/eta) / eta ds
 *
 * A at t = T is stored as +inf.
 */
struct RiccatiBundle {
    double delta = 0.0;
    std::vector<double> grid;
    std::vector<double> y;
    std::vector<double> A;
    std::vector<double> alpha;
    std::vector<double> D;
    std::vector<double> Efac;
    std::vector<double> h;
    std::vector<double> h_dot;
    /// int_0^t delta*kappa/eta
    std::vector<double> kappa_log;
    double alpha_T = 0.0;
    double h_T = 0.0;

    std::size_t last() const { return grid.size() - 1; }
    double A0() const { return A.front(); }
};

/// Throws InvalidInput when the coefficients violate the standing or mean-field assumptions for delta.
RiccatiBundle solve_riccati(const CoefficientSet& coeffs, double delta);

double alpha_terminal(const RiccatiBundle& bundle);

/// exp(-int_s^t A/eta) for 0 <= s <= t <= T.
double discount(const RiccatiBundle& bundle, double s, double t);

/// Columns t, y, A, alpha, D, Efac, h, h_dot; A is left blank at t = T.
void write_bundle_csv(std::ostream& os, const RiccatiBundle& bundle);

}  // namespace mfl
