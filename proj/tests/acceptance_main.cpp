// Acceptance suite: one check per criterion, each printed as a PASS/FAIL line
// with the measured quantities and its runtime budget. Returns the number of
// failed criteria.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <random>

#include "dynwave/dynwave.hpp"

using namespace dynwave;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

class Timer {
  public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

  private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3g", x);
    return buf;
}

bool check(Outcome& o, bool cond, const std::string& label) {
    if (!cond) {
        o.pass = false;
        o.detail += (o.detail.empty() ? "" : "; ") + label;
    }
    return cond;
}

ContextPtr haar_context(int depth) {
    auto w = weight_from_filter(haar_filter(), depth);
    auto sys = w.values.system();
    const auto h =
        solve_eigenfunction(w, CylinderFunction::constant(sys, depth, Complex{1, 0}), 1e-12);
    return make_context(std::move(w), h.h, MeasureRep{uniform_bernoulli(sys)});
}

// --- criterion 1: transfer fixed point --------------------------------------

Outcome criterion_transfer_fixpoint() {
    Outcome o;
    const Timer t;
    const auto w = weight_from_filter(haar_filter(), 12);
    const auto sys = w.values.system();
    const auto h = solve_eigenfunction(
        w, CylinderFunction::constant(sys, 12, Complex{1, 0}), 1e-10, 10000);
    const double dist =
        sup_diff(h.h, CylinderFunction::constant(sys, 12, Complex{1, 0}));
    check(o, h.converged, "no convergence");
    check(o, h.residual <= 1e-8, "residual " + fmt(h.residual) + " > 1e-8");
    check(o, dist <= 1e-6, "sup|h-1| " + fmt(dist) + " > 1e-6");
    const double sec = t.seconds();
    check(o, sec < 5.0, "runtime " + fmt(sec) + "s >= 5s");
    o.detail = "residual=" + fmt(h.residual) + " sup|h-1|=" + fmt(dist) + " " + fmt(sec) + "s" +
               (o.detail.empty() ? "" : " | " + o.detail);
    return o;
}

// --- criterion 2: strongly invariant measures -------------------------------

Outcome criterion_strong_invariance() {
    Outcome o;
    const Timer t;
    for (const auto& sys : {circle_map(2), circle_map(3), cantor_map()}) {
        const auto rep = invariance_residual(*sys, MeasureRep{uniform_bernoulli(sys)},
                                             InvarianceReport::Mode::Strong, 8);
        check(o, rep.residual == 0.0, "uniform residual " + fmt(rep.residual) + " != 0");
    }
    const auto sys2 = circle_map(2);
    const MeasureRep delta0{make_bernoulli(sys2, {1.0, 0.0})};
    const auto inv = invariance_residual(*sys2, delta0, InvarianceReport::Mode::Invariance, 8);
    const auto strong = invariance_residual(*sys2, delta0, InvarianceReport::Mode::Strong, 8);
    check(o, inv.residual == 0.0, "delta0 invariance " + fmt(inv.residual) + " != 0");
    check(o, strong.residual >= 0.5, "delta0 strong " + fmt(strong.residual) + " < 0.5");
    const double sec = t.seconds();
    check(o, sec < 2.0, "runtime " + fmt(sec) + "s >= 2s");
    o.detail = "uniform strong residuals exactly 0, delta0 strong=" + fmt(strong.residual) + " " +
               fmt(sec) + "s" + (o.detail.empty() ? "" : " | " + o.detail);
    return o;
}

// --- criterion 3: projective consistency ------------------------------------

Outcome criterion_consistency() {
    Outcome o;
    const Timer t;
    double worst = 0.0;
    const auto run = [&](const ContextPtr& ctx) {
        const auto sys = ctx->sys;
        for (int d = 0; d <= 3; ++d) {
            CylinderGrid g(sys, d);
            for (std::size_t i = 0; i < g.size(); ++i) {
                const auto f = d == 0 ? CylinderFunction::constant(sys, 0, Complex{1, 0})
                                      : CylinderFunction::indicator(sys, g.word(i));
                for (int n = 0; n <= 5; ++n)
                    worst = std::max(worst,
                                     consistency_residual(ctx->weight, ctx->h, ctx->mu, f, n));
            }
        }
    };
    run(haar_context(10));
    {
        const auto sys = circle_map(2);
        auto w = Weight{CylinderFunction::constant(sys, 10, Complex{0.5, 0.0})};
        auto h = CylinderFunction::constant(sys, 10, Complex{1, 0});
        run(make_context(std::move(w), std::move(h), MeasureRep{uniform_bernoulli(sys)}));
    }
    check(o, worst <= 1e-12, "consistency " + fmt(worst) + " > 1e-12");
    const double sec = t.seconds();
    check(o, sec < 5.0, "runtime " + fmt(sec) + "s >= 5s");
    o.detail = "max |omega_{n+1}(f o r) - omega_n(f)| = " + fmt(worst) + " " + fmt(sec) + "s" +
               (o.detail.empty() ? "" : " | " + o.detail);
    return o;
}

// --- criterion 4: path sampler marginals ------------------------------------

Outcome criterion_sampler() {
    Outcome o;
    const Timer t;
    const auto ctx = haar_context(10);
    const auto sys = ctx->sys;
    const std::size_t count = 100000;
    const auto paths = sample_paths(ctx, 3, count, 7);

    double worst_sigma = 0.0;
    for (int d = 0; d <= 2; ++d) {
        CylinderGrid g(sys, d);
        for (std::size_t i = 0; i < g.size(); ++i) {
            const auto f = d == 0 ? CylinderFunction::constant(sys, 0, Complex{1, 0})
                                  : CylinderFunction::indicator(sys, g.word(i));
            for (int k = 0; k <= 3; ++k) {
                double mean = 0.0, sq = 0.0;
                for (const auto& p : paths) {
                    const double v = f.value_at(p.points[static_cast<std::size_t>(k)]).real();
                    mean += v;
                    sq += v * v;
                }
                mean /= static_cast<double>(count);
                const double var =
                    std::max(0.0, sq / static_cast<double>(count) - mean * mean);
                const double se = std::sqrt(var / static_cast<double>(count));
                const double expect = omega_n(ctx->weight, ctx->h, ctx->mu, f, k).real();
                const double err = std::abs(mean - expect);
                if (se > 0.0) worst_sigma = std::max(worst_sigma, err / se);
                check(o, err <= 3.0 * se + 1e-12,
                      "level " + std::to_string(k) + " depth " + std::to_string(d) + " err " +
                          fmt(err) + " > 3se=" + fmt(3.0 * se));
            }
        }
    }
    const double sec = t.seconds();
    check(o, sec < 30.0, "runtime " + fmt(sec) + "s >= 30s");
    o.detail = "10^5 paths, worst deviation " + fmt(worst_sigma) + " sigma, " + fmt(sec) + "s" +
               (o.detail.empty() ? "" : " | " + o.detail);
    return o;
}

// --- criterion 5: scaling operator isometry and covariance ------------------

Outcome criterion_u_isometry() {
    Outcome o;
    const Timer t;
    const auto ctx = haar_context(10);
    const auto sys = ctx->sys;
    const auto m0 = haar_filter();
    std::mt19937_64 rng(505);
    std::uniform_real_distribution<double> u(-1.0, 1.0);

    double worst_iso = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
        const int depth = 1 + static_cast<int>(rng() % 2);
        CylinderGrid g(sys, depth);
        std::vector<Complex> v(g.size());
        for (auto& x : v) x = Complex{u(rng), u(rng)};
        const auto a = martingale_from_level(ctx, CylinderFunction(sys, depth, std::move(v)),
                                             static_cast<int>(rng() % 2), 7);
        const auto ua = apply_U(m0, a);
        const auto na = level_norms_squared(a);
        const auto nu = level_norms_squared(ua);
        for (int n = 0; n <= 5; ++n) {
            const double diff = std::abs(nu[static_cast<std::size_t>(n)] -
                                         na[static_cast<std::size_t>(n) + 1]);
            worst_iso = std::max(worst_iso, diff);
            check(o, diff <= 1e-10, "isometry defect " + fmt(diff) + " > 1e-10");
        }
        const auto gfun = CylinderFunction::indicator(sys, {0});
        const auto lhs = apply_U(m0, apply_pi(gfun, a));
        const auto rhs = apply_pi(compose_with_r(gfun), ua);
        for (std::size_t k = 0; k < lhs.levels.size() && static_cast<int>(k) <= 5; ++k)
            check(o, sup_diff(lhs.levels[k], rhs.levels[k]) == 0.0,
                  "covariance not exact at level " + std::to_string(k));
    }
    const double sec = t.seconds();
    check(o, sec < 10.0, "runtime " + fmt(sec) + "s >= 10s");
    o.detail = "10 martingales, worst isometry defect " + fmt(worst_iso) +
               ", covariance exact, " + fmt(sec) + "s" +
               (o.detail.empty() ? "" : " | " + o.detail);
    return o;
}

// --- criterion 6: scaling function ------------------------------------------

Outcome criterion_scaling_function() {
    Outcome o;
    const Timer t;
    const auto m0 = haar_filter();

    // truncated product against the closed form e^{-i pi x} sin(pi x)/(pi x)
    double worst = 0.0;
    for (int i = -800; i <= 800; ++i) {
        const double x = 0.01 * i;
        const Complex closed =
            std::abs(x) < 1e-12
                ? Complex{1.0, 0.0}
                : Complex{std::polar(std::sin(kPi * x) / (kPi * x), -kPi * x)};
        worst = std::max(worst, std::abs(scaling_hat(m0, 2, x, 30).value - closed));
    }
    check(o, worst <= 1e-8, "product vs closed form " + fmt(worst) + " > 1e-8");

    // cascade fixed point after one iteration
    const auto cas = cascade(m0, 2, 1, 100);
    double cdiff = 0.0;
    for (std::size_t i = 0; i < cas.grid.size(); ++i) {
        const double expect = (cas.grid[i] >= 0.0 && cas.grid[i] < 1.0) ? 1.0 : 0.0;
        cdiff = std::max(cdiff, std::abs(cas.values[i] - Complex{expect, 0.0}));
    }
    check(o, cdiff <= 1e-15, "cascade defect " + fmt(cdiff) + " > 1e-15 (machine-exact)");

    // Parseval mass of the truncated product by quadrature
    const auto one = CylinderFunction::constant(m0.sys, 0, Complex{1, 0});
    const auto psi = psi_isometry_residual(m0, 2, one, 0, 2000000, 2000.0, 30);
    check(o, psi.residual <= 1e-3,
          "|1 - int |phi|^2| = " + fmt(psi.residual) + " > 1e-3");
    check(o, psi.tail_estimate > 0.0, "tail not reported");

    const double sec = t.seconds();
    check(o, sec < 30.0, "runtime " + fmt(sec) + "s >= 30s");
    o.detail = "product err " + fmt(worst) + ", cascade err " + fmt(cdiff) + ", mass defect " +
               fmt(psi.residual) + " (tail " + fmt(psi.tail_estimate) + "), " + fmt(sec) + "s" +
               (o.detail.empty() ? "" : " | " + o.detail);
    return o;
}

// --- criterion 7: matrix covariance condition --------------------------------

Outcome criterion_qmf() {
    Outcome o;
    const Timer t;
    const auto sys = circle_map(2);
    std::mt19937_64 rng(707);
    std::vector<Point> pts;
    for (int i = 0; i < 1000; ++i) {
        Word w;
        for (int k = 0; k < 20; ++k) w.push_back(static_cast<int>(rng() % 2));
        pts.push_back(Point::from_word(std::move(w)));
    }
    const auto good = qmf_matrix_residual(*sys, scalar_matrix_filter(haar_filter()), pts);
    check(o, good.residual <= 1e-12, "haar residual " + fmt(good.residual) + " > 1e-12");

    MatrixFilter bad;
    bad.dim = 1;
    bad.m0 = [](const Point&) { return SmallMatrix::scalar(Complex{std::sqrt(2.0), 0.0}); };
    bad.h = [](const Point&) { return SmallMatrix::identity(1); };
    const auto rep = qmf_matrix_residual(*sys, bad, pts);
    check(o, std::abs(rep.residual - 1.0) <= 1e-12,
          "sqrt(2) residual " + fmt(rep.residual) + " != 1");
    const double sec = t.seconds();
    check(o, sec < 2.0, "runtime " + fmt(sec) + "s >= 2s");
    o.detail = "haar residual " + fmt(good.residual) + ", failing filter residual " +
               fmt(rep.residual) + ", " + fmt(sec) + "s" +
               (o.detail.empty() ? "" : " | " + o.detail);
    return o;
}

// --- criterion 8: multiplicity consistency -----------------------------------

Outcome criterion_multiplicity() {
    Outcome o;
    const Timer t;
    for (int n = 2; n <= 3; ++n) {
        const auto d0 = constant_multiplicity(circle_map(n), 1, 1);
        for (auto v : detail_multiplicity(d0).values)
            check(o, v == static_cast<std::uint64_t>(n - 1), "detail != N-1");
    }
    const auto gm = subshift_map({{1, 1}, {1, 0}});
    const auto dw = detail_multiplicity(constant_multiplicity(gm, 1, 1));
    check(o, dw.values == std::vector<std::uint64_t>{1, 0}, "golden-mean detail != (1,0)");

    std::mt19937_64 rng(808);
    int tested = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto sys = (trial % 2 == 0) ? circle_map(2) : circle_map(3);
        CylinderGrid g(sys, 1);
        std::vector<std::uint64_t> v(g.size());
        for (auto& x : v) x = rng() % 10;
        const MultiplicityFunction d0{sys, 1, v};
        const auto detail = detail_multiplicity(d0);
        const auto lifted = lift_multiplicity(refine_multiplicity(d0, 2));
        const auto base = refine_multiplicity(d0, lifted.depth);
        for (std::size_t i = 0; i < lifted.values.size(); ++i)
            check(o, lifted.values[i] == mult_add(base.values[i], detail.values[i]),
                  "lift != d0 + detail");
        ++tested;
    }
    check(o, tested == 100, "not all random cases ran");
    const double sec = t.seconds();
    check(o, sec < 1.0, "runtime " + fmt(sec) + "s >= 1s");
    o.detail = "N=2,3 and golden mean exact; 100 random level-1 data exact; " + fmt(sec) + "s" +
               (o.detail.empty() ? "" : " | " + o.detail);
    return o;
}

// --- criterion 9: backward-orbit sampling on Julia sets ----------------------

Outcome criterion_brolin() {
    Outcome o;
    const Timer t;
    const auto sq = rational_map({{0, 0}, {0, 0}, {1, 0}}, {{1, 0}});
    const auto res = brolin_sample(*sq, 100000, 50, 7);
    check(o, res.skipped == 0, "skipped points");

    double worst_mod = 0.0;
    std::vector<double> u;
    u.reserve(res.cloud.points.size());
    for (const auto& z : res.cloud.points) {
        worst_mod = std::max(worst_mod, std::abs(std::abs(z) - 1.0));
        u.push_back(std::arg(z) / (2.0 * kPi) + 0.5);
    }
    check(o, worst_mod < 1e-6, "max ||z|-1| = " + fmt(worst_mod) + " >= 1e-6");

    std::sort(u.begin(), u.end());
    double ks = 0.0;
    const double n = static_cast<double>(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
        ks = std::max(ks, std::abs(static_cast<double>(i + 1) / n - u[i]));
        ks = std::max(ks, std::abs(u[i] - static_cast<double>(i) / n));
    }
    check(o, ks < 0.01, "KS statistic " + fmt(ks) + " >= 0.01");

    const auto basilica = rational_map({{-1, 0}, {0, 0}, {1, 0}}, {{1, 0}});
    const auto bres = brolin_sample(*basilica, 100000, 50, 7);
    const auto rep = invariance_residual(*basilica, MeasureRep{bres.cloud},
                                         InvarianceReport::Mode::Strong);
    double worst_sigma = 0.0;
    for (std::size_t i = 0; i < rep.diffs.size(); ++i) {
        if (rep.std_errors[i] > 0.0)
            worst_sigma = std::max(worst_sigma, std::abs(rep.diffs[i]) / rep.std_errors[i]);
        check(o, std::abs(rep.diffs[i]) <= 3.0 * rep.std_errors[i] + 1e-12,
              rep.test_labels[i] + " off by " + fmt(std::abs(rep.diffs[i])) + " > 3se");
    }
    const double sec = t.seconds();
    check(o, sec < 60.0, "runtime " + fmt(sec) + "s >= 60s");
    o.detail = "KS=" + fmt(ks) + ", max ||z|-1|=" + fmt(worst_mod) + ", basilica worst " +
               fmt(worst_sigma) + " sigma, " + fmt(sec) + "s" +
               (o.detail.empty() ? "" : " | " + o.detail);
    return o;
}

}  // namespace

int main() {
    struct Entry {
        const char* name;
        Outcome (*fn)();
    };
    const Entry entries[] = {
        {"1. transfer fixed point (haar, depth 12)", criterion_transfer_fixpoint},
        {"2. strongly invariant measures", criterion_strong_invariance},
        {"3. projective consistency", criterion_consistency},
        {"4. path sampler vs omega levels", criterion_sampler},
        {"5. scaling-operator isometry and covariance", criterion_u_isometry},
        {"6. scaling function (product, cascade, Parseval)", criterion_scaling_function},
        {"7. matrix covariance condition", criterion_qmf},
        {"8. multiplicity consistency", criterion_multiplicity},
        {"9. Julia-set backward sampling", criterion_brolin},
    };

    int failures = 0;
    for (const auto& e : entries) {
        Outcome o;
        try {
            o = e.fn();
        } catch (const std::exception& ex) {
            o.pass = false;
            o.detail = std::string("exception: ") + ex.what();
        }
        std::printf("[%s] %s: %s\n", o.pass ? "PASS" : "FAIL", e.name, o.detail.c_str());
        std::fflush(stdout);
        if (!o.pass) ++failures;
    }
    if (failures) std::printf("%d criterion(s) failed\n", failures);
    return failures;
}
