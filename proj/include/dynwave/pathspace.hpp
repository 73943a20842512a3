#pragma once

#include <random>

#include "dynwave/transfer.hpp"

namespace dynwave {

// Finite backward orbit (x_0, ..., x_n) with r(x_{k+1}) = x_k.
struct PathSegment {
    std::vector<Point> points;
};

inline bool path_valid(const SystemSpec& sys, const PathSegment& seg, double tol = kRootTol) {
    for (std::size_t k = 0; k + 1 < seg.points.size(); ++k) {
        const Point fwd = apply(sys, seg.points[k + 1]);
        if (sys.symbolic()) {
            // The forward image of a word is its shift; compare as prefixes.
            const Word& a = seg.points[k].word;
            const Word& b = fwd.word;
            const std::size_t n = std::min(a.size(), b.size());
            for (std::size_t i = 0; i < n; ++i)
                if (a[i] != b[i]) return false;
        } else {
            if (std::abs(fwd.z - seg.points[k].z) > tol) return false;
        }
    }
    return true;
}

// omega_n(f) = integral of R_W^n(f h) against mu, evaluated exactly on cylinders.
inline Complex omega_n(const Weight& weight, const CylinderFunction& h, const MeasureRep& mu,
                       const CylinderFunction& f, int n) {
    if (n < 0) throw std::invalid_argument("omega_n: negative level");
    CylinderFunction g = multiply(f, h);
    for (int k = 0; k < n; ++k) g = transfer_apply(weight, g);
    return integrate(g, mu);
}

// Consistency defect |omega_{n+1}(f o r) - omega_n(f)| of the projective family.
inline double consistency_residual(const Weight& weight, const CylinderFunction& h,
                                   const MeasureRep& mu, const CylinderFunction& f, int n) {
    const Complex lhs = omega_n(weight, h, mu, compose_with_r(f), n + 1);
    const Complex rhs = omega_n(weight, h, mu, f, n);
    return std::abs(lhs - rhs);
}

// Shared data for path-space computations. h is rescaled on construction so
// that its integral against mu is 1 (the scale factor is recorded), making
// the omega family a family of probability measures.
struct MartingaleContext {
    SystemPtr sys;
    Weight weight;
    CylinderFunction h;
    MeasureRep mu;
    double h_scale = 1.0;
};

using ContextPtr = std::shared_ptr<const MartingaleContext>;

inline ContextPtr make_context(Weight weight, CylinderFunction h, MeasureRep mu) {
    SystemPtr sys = h.system();
    const Complex mass = integrate(h, mu);
    if (std::abs(mass) < 1e-300)
        throw std::invalid_argument("make_context: h has zero integral against mu");
    CylinderFunction hn = scale(h, Complex{1.0, 0.0} / mass);
    MartingaleContext ctx{std::move(sys), std::move(weight), std::move(hn), std::move(mu),
                          mass.real()};
    return std::make_shared<const MartingaleContext>(std::move(ctx));
}

struct SamplerStats {
    double max_norm_dev = 0.0;  // worst |sum of transition weights - 1|
};

// Monte Carlo sampler for the path-space measure: x_0 is drawn from h dmu,
// then x_{k+1} is drawn among the preimages y of x_k with probability
// W(y) h(y) / h(x_k). Seed-deterministic for any worker count.
inline std::vector<PathSegment> sample_paths(const ContextPtr& ctx, int n, std::size_t count,
                                             std::uint64_t seed, unsigned workers = 0,
                                             SamplerStats* stats = nullptr) {
    if (n < 0 || count == 0) throw std::invalid_argument("sample_paths: need n >= 0, count > 0");
    const SystemPtr& sys = ctx->sys;
    if (!sys->symbolic())
        throw std::invalid_argument("sample_paths needs a symbolic system (cylinder h and W)");

    const CylinderFunction& h = ctx->h;
    const CylinderFunction& w = ctx->weight.values;
    int depth = std::max(h.depth(), w.depth());
    if (const auto* cm = std::get_if<CylinderMeasure>(&ctx->mu)) depth = std::max(depth, cm->depth);

    // Initial distribution: masses proportional to h * mu on depth-`depth` words.
    const auto levels = detail::level_masses(ctx->mu, depth);
    const CylinderFunction hd = refine(h, depth);
    const CylinderGrid grid(sys, depth);
    std::vector<double> cdf(grid.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double q = hd.values()[i].real() * levels.back()[i];
        if (q < -1e-12) throw std::invalid_argument("sample_paths: negative initial mass");
        acc += std::max(q, 0.0);
        cdf[i] = acc;
    }
    if (acc <= 0.0) throw std::invalid_argument("sample_paths: initial distribution is zero");
    for (auto& c : cdf) c /= acc;

    const CylinderGrid grid_h(sys, h.depth());
    const CylinderGrid grid_w(sys, w.depth());
    const int nsym = sys->alphabet_size();
    if (nsym > 64) throw std::invalid_argument("sample_paths: alphabet too large");

    std::vector<PathSegment> paths(count);
    std::vector<double> chunk_dev(256, 0.0);

    parallel_chunks(count, workers, [&](std::size_t chunk, std::size_t b, std::size_t e) {
        std::mt19937_64 rng(derive_seed(seed, chunk));
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        double worst = 0.0;
        for (std::size_t p = b; p < e; ++p) {
            const double u0 = unif(rng);
            const std::size_t i0 = static_cast<std::size_t>(
                std::lower_bound(cdf.begin(), cdf.end(), u0) - cdf.begin());
            Word cur = grid.word(std::min(i0, grid.size() - 1));

            PathSegment seg;
            seg.points.reserve(static_cast<std::size_t>(n) + 1);
            seg.points.push_back(Point::from_word(cur));

            for (int k = 0; k < n; ++k) {
                const double hx = h.values()[grid_h.prefix_index(cur)].real();
                if (std::abs(hx) < 1e-14)
                    throw std::runtime_error("sample_paths: h vanishes on a visited cylinder");
                double probs[64];
                int digits[64];
                int m = 0;
                double total = 0.0;
                for (int r = 0; r < nsym; ++r) {
                    const int dgt = sys->digit(r);
                    if (!sys->full_shift() && !sys->admissible(dgt, cur.front())) continue;
                    Word y;
                    y.reserve(cur.size() + 1);
                    y.push_back(dgt);
                    y.insert(y.end(), cur.begin(), cur.end());
                    const double py = w.values()[grid_w.prefix_index(y)].real() *
                                      h.values()[grid_h.prefix_index(y)].real() / hx;
                    probs[m] = py;
                    digits[m] = dgt;
                    ++m;
                    total += py;
                }
                worst = std::max(worst, std::abs(total - 1.0));
                if (std::abs(total - 1.0) > 1e-6)
                    throw std::runtime_error(
                        "sample_paths: transition weights are not normalized (|sum-1| = " +
                        std::to_string(std::abs(total - 1.0)) + ")");
                double target = unif(rng) * total;
                int pick = m - 1;
                double run = 0.0;
                for (int j = 0; j < m; ++j) {
                    run += probs[j];
                    if (target <= run) {
                        pick = j;
                        break;
                    }
                }
                cur.insert(cur.begin(), digits[pick]);
                seg.points.push_back(Point::from_word(cur));
            }
            paths[p] = std::move(seg);
        }
        chunk_dev[chunk] = std::max(chunk_dev[chunk], worst);
    });

    if (stats) {
        for (double d : chunk_dev) stats->max_norm_dev = std::max(stats->max_norm_dev, d);
    }
    return paths;
}

// Compatible function sequence (xi_0, ..., xi_m): R_W(xi_{k+1} h) = xi_k h.
struct Martingale {
    ContextPtr ctx;
    std::vector<CylinderFunction> levels;
    double compat_residual = 0.0;
};

inline double compatibility_residual(const MartingaleContext& ctx,
                                     const std::vector<CylinderFunction>& levels) {
    double worst = 0.0;
    for (std::size_t k = 0; k + 1 < levels.size(); ++k) {
        const CylinderFunction lhs = transfer_apply(ctx.weight, multiply(levels[k + 1], ctx.h));
        const CylinderFunction rhs = multiply(levels[k], ctx.h);
        worst = std::max(worst, sup_diff(lhs, rhs));
    }
    return worst;
}

// Builds a martingale from one prescribed level: downward by xi_k =
// R^{n-k}(xi_n h)/h, upward by composition with r (which preserves
// compatibility exactly through the pull-out identity).
inline Martingale martingale_from_level(const ContextPtr& ctx, const CylinderFunction& xi,
                                        int level, int extend_to) {
    if (level < 0 || extend_to < level)
        throw std::invalid_argument("martingale_from_level: need 0 <= level <= extend_to");
    Martingale m;
    m.ctx = ctx;
    m.levels.assign(static_cast<std::size_t>(extend_to) + 1, CylinderFunction());
    m.levels[static_cast<std::size_t>(level)] = xi;
    for (int k = level - 1; k >= 0; --k) {
        const CylinderFunction num =
            transfer_apply(ctx->weight, multiply(m.levels[static_cast<std::size_t>(k + 1)], ctx->h));
        m.levels[static_cast<std::size_t>(k)] = divide(num, ctx->h);
    }
    for (int k = level + 1; k <= extend_to; ++k)
        m.levels[static_cast<std::size_t>(k)] =
            compose_with_r(m.levels[static_cast<std::size_t>(k - 1)]);
    m.compat_residual = compatibility_residual(*ctx, m.levels);
    return m;
}

struct MartingaleInner {
    Complex value{0.0, 0.0};           // deepest common level
    std::vector<Complex> trace;        // per-level values int R^k(conj(a_k) b_k h) dmu
};

inline MartingaleInner martingale_inner(const Martingale& a, const Martingale& b) {
    if (a.ctx != b.ctx && !(*a.ctx->sys == *b.ctx->sys))
        throw std::invalid_argument("martingale_inner: mismatched systems");
    const MartingaleContext& ctx = *a.ctx;
    const std::size_t levels = std::min(a.levels.size(), b.levels.size());
    if (levels == 0) throw std::invalid_argument("martingale_inner: empty martingale");
    MartingaleInner out;
    out.trace.reserve(levels);
    for (std::size_t k = 0; k < levels; ++k) {
        CylinderFunction g = multiply(multiply(conjugate(a.levels[k]), b.levels[k]), ctx.h);
        for (std::size_t j = 0; j < k; ++j) g = transfer_apply(ctx.weight, g);
        out.trace.push_back(integrate(g, ctx.mu));
    }
    out.value = out.trace.back();
    return out;
}

inline std::vector<double> level_norms_squared(const Martingale& a) {
    const MartingaleInner inner = martingale_inner(a, a);
    std::vector<double> out;
    out.reserve(inner.trace.size());
    for (const auto& v : inner.trace) out.push_back(v.real());
    return out;
}

// The scaling operator through the martingale picture: level k of U a is
// (m0 o r^k) * xi_{k+1}, one level shorter than a.
inline Martingale apply_U(const Filter& m0, const Martingale& a) {
    if (a.levels.size() < 2) throw std::invalid_argument("apply_U: need at least two levels");
    const MartingaleContext& ctx = *a.ctx;
    const Weight wf = weight_from_filter(m0, ctx.weight.values.depth());
    if (sup_diff(wf.values, ctx.weight.values) > 1e-9)
        throw std::invalid_argument("apply_U: filter does not induce the context weight");

    Martingale out;
    out.ctx = a.ctx;
    out.levels.reserve(a.levels.size() - 1);
    CylinderFunction m = filter_cylinder(m0, ctx.weight.values.depth());
    for (std::size_t k = 0; k + 1 < a.levels.size(); ++k) {
        out.levels.push_back(multiply(m, a.levels[k + 1]));
        m = compose_with_r(m);
    }
    out.compat_residual = compatibility_residual(ctx, out.levels);
    return out;
}

// Multiplication representation: level k of pi(g) a is (g o r^k) * xi_k.
// Compatibility is preserved exactly by the pull-out identity.
inline Martingale apply_pi(const CylinderFunction& g, const Martingale& a) {
    Martingale out;
    out.ctx = a.ctx;
    out.levels.reserve(a.levels.size());
    CylinderFunction gr = g;
    for (std::size_t k = 0; k < a.levels.size(); ++k) {
        out.levels.push_back(multiply(gr, a.levels[k]));
        if (k + 1 < a.levels.size()) gr = compose_with_r(gr);
    }
    out.compat_residual = compatibility_residual(*a.ctx, out.levels);
    return out;
}

}  // namespace dynwave
