#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "dynwave/common.hpp"

namespace dynwave {

// Horner evaluation; coefficients in ascending powers.
inline Complex poly_eval(const std::vector<Complex>& coeffs, Complex z) {
    Complex acc{0.0, 0.0};
    for (std::size_t i = coeffs.size(); i-- > 0;) acc = acc * z + coeffs[i];
    return acc;
}

inline int poly_degree(const std::vector<Complex>& coeffs, double rel_tol = 1e-14) {
    double scale = 0.0;
    for (const auto& c : coeffs) scale = std::max(scale, std::abs(c));
    if (scale == 0.0) return -1;
    for (std::size_t i = coeffs.size(); i-- > 0;)
        if (std::abs(coeffs[i]) > rel_tol * scale) return static_cast<int>(i);
    return -1;
}

struct RootSolveError : std::runtime_error {
    std::vector<double> residuals;
    explicit RootSolveError(const std::string& msg, std::vector<double> res = {})
        : std::runtime_error(msg), residuals(std::move(res)) {}
};

// All complex roots of the polynomial, ascending-power coefficients.
// Degree <= 2 is solved in closed form; higher degrees use simultaneous
// Weierstrass (Durand-Kerner) iteration.
inline std::vector<Complex> poly_roots(const std::vector<Complex>& coeffs_in,
                                       double tol = 1e-10, int max_iter = 200) {
    const int deg = poly_degree(coeffs_in);
    if (deg < 0) throw std::invalid_argument("poly_roots: zero polynomial");
    if (deg == 0) return {};

    std::vector<Complex> c(coeffs_in.begin(), coeffs_in.begin() + deg + 1);
    if (deg == 1) return {-c[0] / c[1]};
    if (deg == 2) {
        // Stable quadratic: larger root from the formula, the other from the
        // product c0/c2 = r1*r2.
        const Complex a = c[2], b = c[1], c0 = c[0];
        const Complex disc = std::sqrt(b * b - 4.0 * a * c0);
        const Complex q = (std::abs(b + disc) >= std::abs(b - disc)) ? -(b + disc) / 2.0
                                                                     : -(b - disc) / 2.0;
        if (std::abs(q) == 0.0) return {Complex{0.0, 0.0}, Complex{0.0, 0.0}};
        return {q / a, c0 / q};
    }

    // Monic normalization.
    for (int i = 0; i <= deg; ++i) c[i] /= c[deg];

    double radius = 0.0;
    for (int i = 0; i < deg; ++i) radius = std::max(radius, std::abs(c[i]));
    radius = 1.0 + radius;  // Cauchy bound

    std::vector<Complex> z(deg);
    for (int k = 0; k < deg; ++k) {
        const double ang = 2.0 * kPi * k / deg + 0.3;
        z[k] = radius * Complex{std::cos(ang), std::sin(ang)};
    }

    for (int it = 0; it < max_iter; ++it) {
        double max_step = 0.0;
        for (int k = 0; k < deg; ++k) {
            Complex denom{1.0, 0.0};
            for (int j = 0; j < deg; ++j)
                if (j != k) denom *= (z[k] - z[j]);
            if (std::abs(denom) == 0.0) {
                z[k] += Complex{tol, tol};  // nudge off a collision
                max_step = radius;
                continue;
            }
            const Complex step = poly_eval(c, z[k]) / denom;
            z[k] -= step;
            max_step = std::max(max_step, std::abs(step));
        }
        if (max_step <= tol) return z;
    }

    std::vector<double> residuals(deg);
    for (int k = 0; k < deg; ++k) residuals[k] = std::abs(poly_eval(c, z[k]));
    throw RootSolveError("poly_roots: no convergence after " + std::to_string(max_iter) +
                             " iterations",
                         residuals);
}

}  // namespace dynwave
