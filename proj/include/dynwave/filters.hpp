#pragma once

#include <cmath>
#include <limits>
#include <variant>

#include "dynwave/cylinder.hpp"
#include "dynwave/measure.hpp"

namespace dynwave {

// Trigonometric polynomial m0(x) = sum_n a_n e^{-2 pi i n x}, n running from
// `offset` upward.
struct TrigPoly {
    std::vector<Complex> coeffs;
    int offset = 0;

    Complex eval(double x) const {
        Complex acc{0.0, 0.0};
        for (std::size_t j = 0; j < coeffs.size(); ++j) {
            const double n = static_cast<double>(offset) + static_cast<double>(j);
            acc += coeffs[j] * std::polar(1.0, -2.0 * kPi * n * x);
        }
        return acc;
    }

    Complex at_zero() const {
        Complex acc{0.0, 0.0};
        for (const auto& c : coeffs) acc += c;
        return acc;
    }

    // |m0(y) - m0(0)| <= lipschitz * |y| near 0, from |e^{-2 pi i n y} - 1| <= 2 pi |n y|.
    double lipschitz_at_zero() const {
        double l = 0.0;
        for (std::size_t j = 0; j < coeffs.size(); ++j) {
            const double n = static_cast<double>(offset) + static_cast<double>(j);
            l += 2.0 * kPi * std::abs(n) * std::abs(coeffs[j]);
        }
        return l;
    }

    int min_index() const { return offset; }
    int max_index() const { return offset + static_cast<int>(coeffs.size()) - 1; }
};

// Low-pass filter: a trig polynomial, or explicit cylinder values for systems
// without a numeric embedding.
struct Filter {
    SystemPtr sys;
    std::variant<TrigPoly, CylinderFunction> rep;

    bool is_trig() const { return std::holds_alternative<TrigPoly>(rep); }
    const TrigPoly& trig() const {
        const auto* t = std::get_if<TrigPoly>(&rep);
        if (!t) throw std::invalid_argument("filter has no trig-polynomial form");
        return *t;
    }
};

inline Filter trig_filter(SystemPtr sys, std::vector<Complex> coeffs, int offset = 0) {
    if (!sys->full_shift())
        throw std::invalid_argument("trig-polynomial filters need a circle/Cantor system");
    return Filter{std::move(sys), TrigPoly{std::move(coeffs), offset}};
}

inline Filter cylinder_filter(CylinderFunction f) {
    SystemPtr sys = f.system();
    return Filter{std::move(sys), std::move(f)};
}

// The Haar pair a_0 = a_1 = 1/sqrt(2) on the doubling map. sqrt(0.5) is the
// correctly rounded coefficient: doubling it reproduces sqrt(2) exactly, so
// the low-pass normalization holds to the last bit.
inline Filter haar_filter() {
    const double c = std::sqrt(0.5);
    return trig_filter(circle_map(2), {Complex{c, 0.0}, Complex{c, 0.0}}, 0);
}

// Cylinder values of the filter. Trig polynomials are sampled at the midpoint
// of each base-N interval, which commutes exactly with halving the interval.
inline CylinderFunction filter_cylinder(const Filter& m0, int depth) {
    if (const auto* f = std::get_if<CylinderFunction>(&m0.rep)) return refine(*f, depth);
    const auto& tp = std::get<TrigPoly>(m0.rep);
    const SystemPtr& sys = m0.sys;
    const double cell = std::pow(static_cast<double>(sys->numeric_base()), -depth);
    return CylinderFunction::from_samples(sys, depth, [&](const Word& w) {
        return tp.eval(word_value(*sys, w) + 0.5 * cell);
    });
}

inline int filter_depth(const Filter& m0, int fallback) {
    if (const auto* f = std::get_if<CylinderFunction>(&m0.rep)) return f->depth();
    return fallback;
}

// (S f)(x) = m0(x) f(r(x)).
inline CylinderFunction apply_S(const CylinderFunction& m0, const CylinderFunction& f) {
    return multiply(m0, compose_with_r(f));
}

inline CylinderFunction apply_S(const Filter& m0, const CylinderFunction& f) {
    const int d = filter_depth(m0, f.depth() + 1);
    return apply_S(filter_cylinder(m0, d), f);
}

// --- matrix filters -------------------------------------------------------

// Dense square complex matrix, row major; only the small operations the
// covariance condition needs.
struct SmallMatrix {
    std::size_t dim = 0;
    std::vector<Complex> a;

    SmallMatrix() = default;
    explicit SmallMatrix(std::size_t d) : dim(d), a(d * d, Complex{0.0, 0.0}) {}
    static SmallMatrix identity(std::size_t d) {
        SmallMatrix m(d);
        for (std::size_t i = 0; i < d; ++i) m(i, i) = Complex{1.0, 0.0};
        return m;
    }
    static SmallMatrix scalar(Complex v) {
        SmallMatrix m(1);
        m(0, 0) = v;
        return m;
    }

    Complex& operator()(std::size_t i, std::size_t j) { return a[i * dim + j]; }
    const Complex& operator()(std::size_t i, std::size_t j) const { return a[i * dim + j]; }
};

inline SmallMatrix operator*(const SmallMatrix& x, const SmallMatrix& y) {
    SmallMatrix out(x.dim);
    for (std::size_t i = 0; i < x.dim; ++i)
        for (std::size_t k = 0; k < x.dim; ++k) {
            const Complex v = x(i, k);
            if (v == Complex{0.0, 0.0}) continue;
            for (std::size_t j = 0; j < x.dim; ++j) out(i, j) += v * y(k, j);
        }
    return out;
}

inline SmallMatrix adjoint(const SmallMatrix& x) {
    SmallMatrix out(x.dim);
    for (std::size_t i = 0; i < x.dim; ++i)
        for (std::size_t j = 0; j < x.dim; ++j) out(i, j) = std::conj(x(j, i));
    return out;
}

inline SmallMatrix operator-(const SmallMatrix& x, const SmallMatrix& y) {
    SmallMatrix out(x.dim);
    for (std::size_t i = 0; i < x.a.size(); ++i) out.a[i] = x.a[i] - y.a[i];
    return out;
}

inline SmallMatrix& operator+=(SmallMatrix& x, const SmallMatrix& y) {
    for (std::size_t i = 0; i < x.a.size(); ++i) x.a[i] += y.a[i];
    return x;
}

inline SmallMatrix scaled(const SmallMatrix& x, double s) {
    SmallMatrix out = x;
    for (auto& v : out.a) v *= s;
    return out;
}

inline double frobenius(const SmallMatrix& x) {
    double s = 0.0;
    for (const auto& v : x.a) s += std::norm(v);
    return std::sqrt(s);
}

// Matrix-valued filter data (M0, H) over a finite index set.
struct MatrixFilter {
    std::size_t dim = 1;
    std::function<SmallMatrix(const Point&)> m0;
    std::function<SmallMatrix(const Point&)> h;
};

struct QmfReport {
    double residual = 0.0;
    std::size_t evaluated = 0;
    std::size_t skipped = 0;
};

// Max Frobenius defect of the covariance condition
//   (1/#r^{-1}(x)) sum_{r(y)=x} M0*(y) H(y) M0(y) = H(x)
// over the sample points.
inline QmfReport qmf_matrix_residual(const SystemSpec& sys, const MatrixFilter& mf,
                                     const std::vector<Point>& sample_points) {
    QmfReport rep;
    for (const auto& x : sample_points) {
        std::vector<Point> pre;
        try {
            pre = preimages(sys, x);
        } catch (const RootSolveError&) {
            ++rep.skipped;
            continue;
        }
        SmallMatrix acc(mf.dim);
        for (const auto& y : pre) {
            const SmallMatrix m = mf.m0(y);
            acc += adjoint(m) * mf.h(y) * m;
        }
        acc = scaled(acc, 1.0 / static_cast<double>(pre.size()));
        rep.residual = std::max(rep.residual, frobenius(acc - mf.h(x)));
        ++rep.evaluated;
    }
    return rep;
}

inline MatrixFilter scalar_matrix_filter(const Filter& m0) {
    MatrixFilter mf;
    mf.dim = 1;
    const TrigPoly tp = m0.trig();
    const SystemPtr sys = m0.sys;
    mf.m0 = [tp, sys](const Point& p) {
        return SmallMatrix::scalar(tp.eval(word_value(*sys, p.word)));
    };
    mf.h = [](const Point&) { return SmallMatrix::identity(1); };
    return mf;
}

// --- scaling function ------------------------------------------------------

struct ScalingHatValue {
    Complex value{0.0, 0.0};
    // Relative bound on the omitted factors, finite when |x|/N^K < 1/2.
    double tail_bound = 0.0;
};

// Truncated infinite product  prod_{k=1..K} m0(x / N^k) / sqrt(N).
// Requires the low-pass normalization m0(0) = sqrt(N).
inline ScalingHatValue scaling_hat(const TrigPoly& m0, int n_scale, double x, int k_terms) {
    const double sqrt_n = std::sqrt(static_cast<double>(n_scale));
    if (n_scale < 2 || k_terms < 1) throw std::invalid_argument("scaling_hat: need N >= 2, K >= 1");
    if (std::abs(m0.at_zero() - Complex{sqrt_n, 0.0}) > 1e-8)
        throw std::invalid_argument("scaling_hat: filter is not normalized to m0(0) = sqrt(N)");

    ScalingHatValue out;
    out.value = Complex{1.0, 0.0};
    double y = x;
    for (int k = 0; k < k_terms; ++k) {
        y /= static_cast<double>(n_scale);
        out.value *= m0.eval(y) / sqrt_n;
    }
    const double tail_arg = std::abs(x) * std::pow(static_cast<double>(n_scale), -k_terms);
    if (tail_arg < 0.5) {
        const double lip = m0.lipschitz_at_zero() / sqrt_n;
        out.tail_bound = std::expm1(lip * tail_arg * n_scale / (n_scale - 1.0));
    } else {
        out.tail_bound = std::numeric_limits<double>::infinity();
    }
    return out;
}

inline ScalingHatValue scaling_hat(const Filter& m0, int n_scale, double x, int k_terms) {
    return scaling_hat(m0.trig(), n_scale, x, k_terms);
}

struct CascadeResult {
    double support_lo = 0.0;
    double support_hi = 1.0;
    std::vector<double> grid;      // requested output grid
    std::vector<Complex> values;   // piecewise-constant samples of the last iterate
    std::vector<double> sup_diffs; // successive sup differences on the coarser grid
    bool diverged = false;
    int iterations_run = 0;
    double mass = 0.0;             // sum of values * cell width at the last iterate
};

// Fixed-point iteration of the refinement operator
//   phi_{j+1}(t) = sqrt(N) sum_n a_n phi_j(N t - n),  phi_0 = indicator of [0,1).
// Each iterate is piecewise constant on cells of width N^{-j}, so the
// iteration is evaluated exactly on its own refining grid and only sampled
// onto the requested output grid at the end.
inline CascadeResult cascade(const TrigPoly& m0, int n_scale, int iterations, int out_grid) {
    if (n_scale < 2 || iterations < 1 || out_grid < 1)
        throw std::invalid_argument("cascade: need N >= 2, iterations >= 1, grid >= 1");
    const double sqrt_n = std::sqrt(static_cast<double>(n_scale));
    if (std::abs(m0.at_zero() - Complex{sqrt_n, 0.0}) > 1e-8)
        throw std::invalid_argument("cascade: coefficients must sum to sqrt(N)");

    // Integer window containing both the starting indicator and the limit
    // support [n_min, n_max]/(N-1); it is invariant under the iteration.
    const long w0 = static_cast<long>(
        std::floor(std::min(0.0, static_cast<double>(m0.min_index()) / (n_scale - 1))));
    const long w1 = static_cast<long>(
        std::ceil(std::max(1.0, static_cast<double>(m0.max_index()) / (n_scale - 1))));
    const long width = w1 - w0;

    CascadeResult res;
    res.support_lo = static_cast<double>(m0.min_index()) / (n_scale - 1);
    res.support_hi = static_cast<double>(m0.max_index()) / (n_scale - 1);

    // Level-0 values on the integer grid: the indicator of [0,1).
    std::vector<Complex> cur(static_cast<std::size_t>(width) + 1, Complex{0.0, 0.0});
    for (long i = 0; i <= width; ++i)
        if (w0 + i >= 0 && w0 + i < 1) cur[static_cast<std::size_t>(i)] = Complex{1.0, 0.0};

    long scale = 1;  // N^j grid points per unit at level j
    int grow_streak = 0;
    double prev_diff = -1.0;
    for (int j = 0; j < iterations; ++j) {
        const long fine_scale = scale * n_scale;
        if (static_cast<unsigned long>(width) * static_cast<unsigned long>(fine_scale) >
            kMaxCells)
            throw std::invalid_argument("cascade: grid would exceed the cell limit");
        std::vector<Complex> nxt(static_cast<std::size_t>(width * fine_scale) + 1,
                                 Complex{0.0, 0.0});
        for (long i = 0; i < static_cast<long>(nxt.size()); ++i) {
            Complex acc{0.0, 0.0};
            for (std::size_t c = 0; c < m0.coeffs.size(); ++c) {
                const long n = m0.min_index() + static_cast<long>(c);
                // index of N*t - n on the level-j grid
                const long idx = i + ((n_scale - 1) * w0 - n) * scale;
                if (idx >= 0 && idx < static_cast<long>(cur.size()))
                    acc += m0.coeffs[c] * cur[static_cast<std::size_t>(idx)];
            }
            nxt[static_cast<std::size_t>(i)] = sqrt_n * acc;
        }
        // sup difference on the coarser (level-j) grid
        double diff = 0.0;
        for (std::size_t i = 0; i < cur.size(); ++i)
            diff = std::max(diff,
                            std::abs(nxt[i * static_cast<std::size_t>(n_scale)] - cur[i]));
        res.sup_diffs.push_back(diff);
        cur = std::move(nxt);
        scale = fine_scale;
        res.iterations_run = j + 1;
        if (prev_diff >= 0.0 && diff > prev_diff) {
            if (++grow_streak >= 5) {
                res.diverged = true;
                break;
            }
        } else {
            grow_streak = 0;
        }
        prev_diff = diff;
    }

    double mass = 0.0;
    {
        Complex acc{0.0, 0.0};
        for (const auto& v : cur) acc += v;
        mass = acc.real() / static_cast<double>(scale);
    }
    res.mass = mass;

    // Sample the final piecewise-constant iterate on the requested grid.
    const long out_count = width * out_grid;
    res.grid.reserve(static_cast<std::size_t>(out_count) + 1);
    res.values.reserve(static_cast<std::size_t>(out_count) + 1);
    for (long k = 0; k <= out_count; ++k) {
        const double t = static_cast<double>(w0) + static_cast<double>(k) / out_grid;
        long idx = (k * scale) / out_grid;  // floor of (t - w0) * scale, exact in integers
        if (idx >= static_cast<long>(cur.size())) idx = static_cast<long>(cur.size()) - 1;
        res.grid.push_back(t);
        res.values.push_back(cur[static_cast<std::size_t>(idx)]);
    }
    return res;
}

inline CascadeResult cascade(const Filter& m0, int n_scale, int iterations, int out_grid) {
    return cascade(m0.trig(), n_scale, iterations, out_grid);
}

}  // namespace dynwave
