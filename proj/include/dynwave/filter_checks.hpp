#pragma once

#include "dynwave/pathspace.hpp"

namespace dynwave {

struct IsometryReport {
    double residual = 0.0;           // max of the two defects below
    double transfer_residual = 0.0;  // sup |R_{m0} h - h|
    double isometry_defect = 0.0;    // max_f |<Sf,Sf> - <f,f>| in L^2(h dmu)
    double mu_strong_residual = 0.0;
    bool mu_warning = false;
};

// Checks both sides of the equivalence: S_{m0} is an isometry of L^2(h dmu)
// exactly when h is fixed by R_{m0}. Test functions are the cylinder
// indicators up to `test_depth`.
inline IsometryReport isometry_residual(const Filter& m0, const Harmonic& h, const MeasureRep& mu,
                                        int test_depth = 3, double mu_tol = 1e-9) {
    const SystemPtr& sys = m0.sys;
    IsometryReport rep;

    const auto strong = invariance_residual(*sys, mu, InvarianceReport::Mode::Strong);
    rep.mu_strong_residual = strong.residual;
    rep.mu_warning = strong.residual > mu_tol;

    const int depth = std::max(h.h.depth(), filter_depth(m0, default_depth(*sys)));
    const Weight w = weight_from_filter(m0, depth);
    rep.transfer_residual = sup_diff(refine(transfer_apply(w, h.h), depth), refine(h.h, depth));

    const CylinderFunction m0c = filter_cylinder(m0, depth);
    for (int k = 0; k <= test_depth; ++k) {
        CylinderGrid g(sys, k);
        for (std::size_t i = 0; i < g.size(); ++i) {
            const CylinderFunction f =
                k == 0 ? CylinderFunction::constant(sys, 0, Complex{1.0, 0.0})
                       : CylinderFunction::indicator(sys, g.word(i));
            const Complex lhs = integrate(multiply(abs_squared(apply_S(m0c, f)), h.h), mu);
            const Complex rhs = integrate(multiply(abs_squared(f), h.h), mu);
            rep.isometry_defect = std::max(rep.isometry_defect, std::abs(lhs - rhs));
        }
    }
    rep.residual = std::max(rep.transfer_residual, rep.isometry_defect);
    return rep;
}

struct PsiReport {
    double lhs = 0.0;            // int |f_n|^2 d omega_n on the cylinder side
    double rhs = 0.0;            // int |f_n(x/N^n) phi_hat(x)|^2 dx by quadrature
    double residual = 0.0;       // |lhs - rhs|
    double tail_estimate = 0.0;  // analytic bound on the omitted |x| > x_max mass
};

// Compares the omega_n norm of a cylinder function with its image under the
// embedding f_n -> f_n(x/N^n) phi_hat(x) in L^2(R), phi_hat evaluated through
// the truncated product. h == 1 must be the exact fixed point of the induced
// weight, which holds for low-pass filters normalized to m0(0) = sqrt(N).
inline PsiReport psi_isometry_residual(const Filter& m0, int n_scale, const CylinderFunction& f,
                                       int n, std::size_t quad_points, double x_max = 1e4,
                                       int k_terms = 30, double tail_tolerance = 1e-3,
                                       unsigned workers = 0) {
    if (quad_points < 2) throw std::invalid_argument("psi_isometry_residual: too few points");
    const SystemPtr& sys = m0.sys;
    if (!(*sys == *f.system()))
        throw std::invalid_argument("filter and function live on different systems");
    if (sys->kind() != SystemKind::Circle)
        throw std::invalid_argument("psi_isometry_residual is defined on circle systems");
    const TrigPoly& tp = m0.trig();

    // Product convergence gate: relative tail at |x| = 1 must be negligible.
    {
        const ScalingHatValue probe = scaling_hat(tp, n_scale, 1.0, k_terms);
        if (!(probe.tail_bound < 1e-8))
            throw std::invalid_argument("psi_isometry_residual: truncated product not converged");
    }

    const int depth = std::max(f.depth(), default_depth(*sys));
    const Weight w = weight_from_filter(m0, depth);
    const CylinderFunction h = CylinderFunction::constant(sys, depth, Complex{1.0, 0.0});
    const MeasureRep mu{uniform_bernoulli(sys)};
    PsiReport rep;
    rep.lhs = omega_n(w, h, mu, abs_squared(f), n).real();

    // Composite trapezoid over [-x_max, x_max]; cylinder lookups are done on
    // the fractional part of x / N^n.
    const CylinderFunction fd = refine(f, depth);
    const CylinderGrid grid(sys, depth);
    const double scale_n = std::pow(static_cast<double>(n_scale), n);
    const double step = 2.0 * x_max / static_cast<double>(quad_points);
    const std::size_t npts = quad_points + 1;

    const auto integrand = [&](std::size_t i) {
        const double x = -x_max + static_cast<double>(i) * step;
        double u = x / scale_n;
        u -= std::floor(u);
        Word wrd(static_cast<std::size_t>(depth));
        const int base = sys->numeric_base();
        for (int k = 0; k < depth; ++k) {
            u *= base;
            int d = static_cast<int>(u);
            if (d >= base) d = base - 1;
            u -= d;
            wrd[static_cast<std::size_t>(k)] = d;
        }
        const Complex fv = fd.values()[grid.prefix_index(wrd)];
        if (fv == Complex{0.0, 0.0}) return 0.0;
        const Complex ph = scaling_hat(tp, n_scale, x, k_terms).value;
        return std::norm(fv) * std::norm(ph);
    };

    std::vector<double> partial(256, 0.0);
    parallel_chunks(npts, workers, [&](std::size_t chunk, std::size_t b, std::size_t e) {
        double acc = 0.0;
        for (std::size_t i = b; i < e; ++i) {
            const double v = integrand(i);
            acc += (i == 0 || i == npts - 1) ? 0.5 * v : v;
        }
        partial[chunk] = acc;
    });
    double total = 0.0;
    for (double p : partial) total += p;
    rep.rhs = total * step;

    // sinc-type decay of the truncated product gives mass O(1/x) past the cut.
    rep.tail_estimate = sup_norm(f) * sup_norm(f) * 2.0 / (kPi * kPi * x_max);
    if (rep.tail_estimate > tail_tolerance)
        throw std::invalid_argument("psi_isometry_residual: quadrature tail estimate too large");
    rep.residual = std::abs(rep.lhs - rep.rhs);
    return rep;
}

}  // namespace dynwave
