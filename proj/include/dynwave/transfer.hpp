#pragma once

#include "dynwave/filters.hpp"
#include "dynwave/measure.hpp"

namespace dynwave {

// Nonnegative weight for the preimage-sum operator (R_W f)(x) = sum_{r(y)=x} W(y) f(y).
struct Weight {
    CylinderFunction values;
};

inline Weight make_weight(CylinderFunction w) {
    for (const auto& v : w.values()) {
        if (std::abs(v.imag()) > 1e-12 || v.real() < -1e-12)
            throw std::invalid_argument("weights must be real and nonnegative");
    }
    return Weight{std::move(w)};
}

// Fixed point of the transfer operator with its certified defect.
struct Harmonic {
    CylinderFunction h;
    double residual = 0.0;
    int iterations = 0;
    bool converged = false;
};

// One application of R_W on cylinder functions: exact preimage sums over the
// prepend-one-digit branches. Input and weight are refined to a common depth
// d; the output lives one level coarser (never coarser than depth 1 on a
// subshift, where branch structure depends on the first symbol).
inline CylinderFunction transfer_apply(const Weight& weight, const CylinderFunction& f) {
    const CylinderFunction& wv = weight.values;
    detail::require_same_system(wv, f);
    const SystemPtr& sys = f.system();
    const int d = std::max(wv.depth(), f.depth());
    if (d == 0)
        throw std::invalid_argument("transfer_apply: refine the depth-0 input first");
    const CylinderFunction wd = refine(wv, d);
    const CylinderFunction fd = refine(f, d);

    if (sys->full_shift()) {
        const int dout = d - 1;
        const std::size_t b = static_cast<std::size_t>(sys->alphabet_size());
        const std::size_t out_size = fd.size() / b;
        std::vector<Complex> out(out_size, Complex{0.0, 0.0});
        for (std::size_t a = 0; a < b; ++a) {
            const std::size_t base = a * out_size;
            for (std::size_t i = 0; i < out_size; ++i)
                out[i] += wd.values()[base + i] * fd.values()[base + i];
        }
        return CylinderFunction(sys, dout, std::move(out));
    }

    const int dout = std::max(d - 1, 1);
    CylinderGrid gout(sys, dout);
    std::vector<Complex> out(gout.size(), Complex{0.0, 0.0});
    if (d == 1) {
        CylinderGrid g1(sys, 1);
        for (std::size_t i = 0; i < gout.size(); ++i) {
            const int s = gout.word(i).front();
            Complex acc{0.0, 0.0};
            for (int a = 1; a <= sys->alphabet_size(); ++a) {
                if (!sys->admissible(a, s)) continue;
                const std::size_t j = g1.index(Word{a});
                acc += wd.values()[j] * fd.values()[j];
            }
            out[i] = acc;
        }
        return CylinderFunction(sys, dout, std::move(out));
    }
    CylinderGrid gin(sys, d);
    for (std::size_t u = 0; u < gin.size(); ++u) {
        const Word y = gin.word(u);
        out[gout.index(Word(y.begin() + 1, y.end()))] += wd.values()[u] * fd.values()[u];
    }
    return CylinderFunction(sys, dout, std::move(out));
}

// Balanced weight W(y) = 1 / #r^{-1}(r(y)); the transfer operator then averages
// uniformly over branches.
inline Weight balanced_weight(const SystemPtr& sys, int depth) {
    if (sys->full_shift()) {
        const double inv = 1.0 / sys->alphabet_size();
        return Weight{CylinderFunction::constant(sys, depth, Complex{inv, 0.0})};
    }
    const int d = std::max(depth, 2);  // branch count of r(y) depends on y_2
    return Weight{CylinderFunction::from_samples(sys, d, [&](const Word& w) {
        return Complex{1.0 / branch_count_of_symbol(*sys, w[1]), 0.0};
    })};
}

// W(x) = |m0(x)|^2 / #r^{-1}(r(x)).
inline Weight weight_from_filter(const Filter& m0, int depth = -1) {
    const SystemPtr& sys = m0.sys;
    if (depth < 0) depth = filter_depth(m0, default_depth(*sys));
    if (sys->full_shift()) {
        const double inv = 1.0 / sys->alphabet_size();
        CylinderFunction m = filter_cylinder(m0, depth);
        std::vector<Complex> v(m.size());
        for (std::size_t i = 0; i < m.size(); ++i)
            v[i] = Complex{std::norm(m.values()[i]) * inv, 0.0};
        return Weight{CylinderFunction(sys, depth, std::move(v))};
    }
    const int d = std::max(depth, 2);
    const CylinderFunction m = filter_cylinder(m0, d);
    CylinderGrid g(sys, d);
    std::vector<Complex> v(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) {
        const Word w = g.word(i);
        v[i] = Complex{std::norm(m.values()[i]) / branch_count_of_symbol(*sys, w[1]), 0.0};
    }
    return Weight{CylinderFunction(sys, d, std::move(v))};
}

// Power iteration for the eigenfunction R_W h = h at the weight's depth.
// Each sweep renormalizes h to unit average over the uniform cylinder measure.
inline Harmonic solve_eigenfunction(const Weight& weight, const CylinderFunction& init,
                                    double tol = 1e-10, int max_iter = 10000) {
    const int d = std::max({weight.values.depth(), init.depth(), 1});
    const auto normalize = [&](CylinderFunction f) {
        Complex mean{0.0, 0.0};
        for (const auto& v : f.values()) mean += v;
        mean /= static_cast<double>(f.size());
        if (std::abs(mean) < 1e-300)
            throw std::runtime_error("solve_eigenfunction: iterate collapsed to zero");
        return scale(f, Complex{1.0, 0.0} / mean);
    };

    Harmonic out;
    CylinderFunction h = normalize(refine(init, d));
    for (int it = 0; it < max_iter; ++it) {
        CylinderFunction next = normalize(refine(transfer_apply(weight, h), d));
        const double delta = sup_diff(next, h);
        h = std::move(next);
        out.iterations = it + 1;
        if (delta <= tol) {
            out.converged = true;
            break;
        }
    }
    out.residual = sup_diff(refine(transfer_apply(weight, h), d), h);
    out.h = std::move(h);
    return out;
}

// The strongly invariant reference measure at the working depth: the uniform
// product measure on full shifts; on subshifts, the left fixed measure of the
// balanced transfer operator (a product spec would not be depth-consistent
// there, since the admissible-word masses fail to aggregate).
MeasureRep strongly_invariant_measure(const SystemPtr& sys, int depth);

struct EigenMeasureResult {
    CylinderMeasure nu;
    double eigenvalue = 0.0;
    double residual = 0.0;
    int iterations = 0;
    bool converged = false;
};

// Dominant left eigenvector of the finite transfer matrix at the weight's
// depth, by power iteration on the adjoint: aggregate to the output depth,
// then distribute mass back over preimage cylinders with the weight.
inline EigenMeasureResult solve_eigenmeasure(const Weight& weight, double tol = 1e-10,
                                             int max_iter = 10000) {
    const SystemPtr& sys = weight.values.system();
    const int d = std::max(weight.values.depth(), 1);
    const CylinderFunction wd = refine(weight.values, d);
    const int dout = sys->full_shift() ? d - 1 : std::max(d - 1, 1);

    std::vector<double> w(wd.size());
    for (std::size_t i = 0; i < wd.size(); ++i) w[i] = wd.values()[i].real();

    const auto adjoint_step = [&](const std::vector<double>& nu) {
        std::vector<double> agg = nu;
        for (int k = d; k > dout; --k) agg = detail::aggregate_once(sys, k, agg);
        std::vector<double> out(nu.size(), 0.0);
        if (sys->full_shift()) {
            const std::size_t suffix_size = agg.size();
            for (std::size_t u = 0; u < out.size(); ++u) out[u] = w[u] * agg[u % suffix_size];
            return out;
        }
        CylinderGrid gin(sys, d);
        if (d == 1) {
            CylinderGrid g1(sys, 1);
            for (std::size_t u = 0; u < out.size(); ++u) {
                const int a = gin.word(u).front();
                double acc = 0.0;
                for (int s = 1; s <= sys->alphabet_size(); ++s)
                    if (sys->admissible(a, s)) acc += agg[g1.index(Word{s})];
                out[u] = w[u] * acc;
            }
            return out;
        }
        CylinderGrid gsuf(sys, d - 1);
        for (std::size_t u = 0; u < out.size(); ++u) {
            const Word y = gin.word(u);
            out[u] = w[u] * agg[gsuf.index(Word(y.begin() + 1, y.end()))];
        }
        return out;
    };

    EigenMeasureResult res;
    std::vector<double> nu(wd.size(), 1.0 / static_cast<double>(wd.size()));
    for (int it = 0; it < max_iter; ++it) {
        std::vector<double> next = adjoint_step(nu);
        double mass = 0.0;
        for (double x : next) mass += x;
        if (mass <= 0.0) throw std::runtime_error("solve_eigenmeasure: mass vanished");
        double delta = 0.0;
        for (std::size_t i = 0; i < next.size(); ++i) {
            next[i] /= mass;
            delta = std::max(delta, std::abs(next[i] - nu[i]));
        }
        nu = std::move(next);
        res.eigenvalue = mass;
        res.iterations = it + 1;
        if (delta <= tol) {
            res.converged = true;
            break;
        }
    }
    {
        std::vector<double> once = adjoint_step(nu);
        double r = 0.0;
        for (std::size_t i = 0; i < nu.size(); ++i)
            r = std::max(r, std::abs(once[i] - res.eigenvalue * nu[i]));
        res.residual = r;
    }
    res.nu = CylinderMeasure{sys, d, std::move(nu)};
    return res;
}

inline MeasureRep strongly_invariant_measure(const SystemPtr& sys, int depth) {
    if (sys->full_shift()) return uniform_bernoulli(sys);
    const auto res = solve_eigenmeasure(balanced_weight(sys, depth), 1e-13, 20000);
    if (!res.converged || std::abs(res.eigenvalue - 1.0) > 1e-6)
        throw std::runtime_error("balanced eigenmeasure iteration did not converge");
    return res.nu;
}

}  // namespace dynwave
