#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "dynwave/transfer.hpp"

using namespace dynwave;

namespace {
const std::vector<std::vector<int>> kGoldenMean{{1, 1}, {1, 0}};

CylinderFunction random_fn(const SystemPtr& sys, int depth, std::mt19937_64& rng,
                           bool nonneg = false) {
    CylinderGrid g(sys, depth);
    std::uniform_real_distribution<double> u(nonneg ? 0.0 : -1.0, 1.0);
    std::vector<Complex> v(g.size());
    for (auto& x : v) x = nonneg ? Complex{u(rng), 0.0} : Complex{u(rng), u(rng)};
    return CylinderFunction(sys, depth, std::move(v));
}
}  // namespace

TEST_CASE("transfer of constants", "[transfer]") {
    const auto sys = circle_map(2);
    const Weight w{CylinderFunction::constant(sys, 1, Complex{0.5, 0.0})};
    const auto f = CylinderFunction::constant(sys, 1, Complex{1, 0});
    const auto rf = transfer_apply(w, f);
    REQUIRE(rf.depth() == 0);
    REQUIRE(rf.values()[0] == Complex{1.0, 0.0});
}

TEST_CASE("transfer with the squared-cosine weight sums to one", "[transfer]") {
    // |haar filter|^2 / 2 = cos^2(pi x); the two branch midpoints are exact
    // halves, so cos^2(pi x/2) + cos^2(pi (x+1)/2) = 1 holds to roundoff.
    const auto w = weight_from_filter(haar_filter(), 10);
    const auto sys = w.values.system();
    const auto f = CylinderFunction::constant(sys, 10, Complex{1, 0});
    const auto rf = transfer_apply(w, f);
    const auto one = CylinderFunction::constant(sys, rf.depth(), Complex{1, 0});
    REQUIRE(sup_diff(rf, one) <= 2e-3);   // midpoint-sampling bound
    REQUIRE(sup_diff(rf, one) <= 1e-12);  // observed: exact branch-midpoint halving
}

TEST_CASE("transfer on the golden-mean shift counts branches", "[transfer]") {
    const auto sys = subshift_map(kGoldenMean);
    const Weight w{CylinderFunction::constant(sys, 1, Complex{1, 0})};
    const auto f = CylinderFunction::constant(sys, 1, Complex{1, 0});
    const auto rf = transfer_apply(w, f);
    REQUIRE(rf.depth() == 1);
    REQUIRE(rf.values()[0] == Complex{2.0, 0.0});  // cylinder [1]
    REQUIRE(rf.values()[1] == Complex{1.0, 0.0});  // cylinder [2]
}

TEST_CASE("depth-0 inputs are rejected", "[transfer]") {
    const auto sys = circle_map(2);
    const Weight w{CylinderFunction::constant(sys, 0, Complex{0.5, 0.0})};
    const auto f = CylinderFunction::constant(sys, 0, Complex{1, 0});
    REQUIRE_THROWS_AS(transfer_apply(w, f), std::invalid_argument);
}

TEST_CASE("weights must be real and nonnegative", "[transfer]") {
    const auto sys = circle_map(2);
    REQUIRE_THROWS_AS(make_weight(CylinderFunction(sys, 1, {Complex{-1, 0}, Complex{1, 0}})),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(make_weight(CylinderFunction(sys, 1, {Complex{1, 0.5}, Complex{1, 0}})),
                      std::invalid_argument);
}

TEST_CASE("filter-induced weights", "[transfer]") {
    SECTION("haar gives cos^2(pi x) at cell midpoints") {
        const auto w = weight_from_filter(haar_filter(), 8);
        const auto sys = w.values.system();
        CylinderGrid g(sys, 8);
        for (std::size_t i = 0; i < g.size(); i += 17) {
            const double mid = word_value(*sys, g.word(i)) + 0.5 * std::pow(2.0, -8);
            const double expect = std::cos(kPi * mid) * std::cos(kPi * mid);
            REQUIRE(std::abs(w.values.values()[i].real() - expect) < 1e-14);
        }
    }
    SECTION("m0 == 1 on the doubling map gives W == 1/2") {
        const auto m0 = trig_filter(circle_map(2), {Complex{1, 0}});
        const auto w = weight_from_filter(m0, 4);
        for (const auto& v : w.values.values()) REQUIRE(v == Complex{0.5, 0.0});
    }
    SECTION("m0 == sqrt(2) on the Cantor map gives W == 1") {
        const auto m0 = trig_filter(cantor_map(), {Complex{std::sqrt(2.0), 0}});
        const auto w = weight_from_filter(m0, 4);
        for (const auto& v : w.values.values())
            REQUIRE(std::abs(v - Complex{1.0, 0.0}) < 1e-15);
    }
    SECTION("subshift weights divide by the branch count of the shifted point") {
        const auto sys = subshift_map(kGoldenMean);
        const auto m0 = cylinder_filter(CylinderFunction::constant(sys, 1, Complex{1, 0}));
        const auto w = weight_from_filter(m0);
        CylinderGrid g(sys, w.values.depth());
        for (std::size_t i = 0; i < g.size(); ++i) {
            const Word u = g.word(i);
            const double expect = 1.0 / branch_count_of_symbol(*sys, u[1]);
            REQUIRE(w.values.values()[i].real() == expect);
        }
    }
}

TEST_CASE("pull-out identity", "[transfer][property]") {
    std::mt19937_64 rng(31);
    for (const auto& sys : {circle_map(2), circle_map(3), subshift_map(kGoldenMean)}) {
        const Weight w{random_fn(sys, 4, rng, /*nonneg=*/true)};
        const auto f = random_fn(sys, 4, rng);
        SECTION("indicator factors commute exactly") {
            CylinderGrid g2(sys, 2);
            const auto ind = CylinderFunction::indicator(sys, g2.word(g2.size() / 2));
            const auto lhs = transfer_apply(w, multiply(compose_with_r(ind), f));
            const auto rhs = multiply(ind, transfer_apply(w, f));
            REQUIRE(sup_diff(lhs, rhs) == 0.0);
        }
        SECTION("general factors commute to roundoff") {
            const auto gfun = random_fn(sys, 2, rng);
            const auto lhs = transfer_apply(w, multiply(compose_with_r(gfun), f));
            const auto rhs = multiply(gfun, transfer_apply(w, f));
            REQUIRE(sup_diff(lhs, rhs) <= 1e-12);
        }
    }
}

TEST_CASE("linearity and positivity", "[transfer][property]") {
    std::mt19937_64 rng(77);
    const auto sys = cantor_map();
    const Weight w{random_fn(sys, 5, rng, /*nonneg=*/true)};
    const auto f = random_fn(sys, 5, rng);
    const auto g = random_fn(sys, 5, rng);
    const auto lhs = transfer_apply(w, add(f, scale(g, Complex{2, -1})));
    const auto rhs = add(transfer_apply(w, f), scale(transfer_apply(w, g), Complex{2, -1}));
    REQUIRE(sup_diff(lhs, rhs) <= 1e-13);

    const auto pos = random_fn(sys, 5, rng, /*nonneg=*/true);
    const auto rpos = transfer_apply(w, pos);
    for (const auto& v : rpos.values()) REQUIRE(v.real() >= 0.0);
}

TEST_CASE("eigenfunction iteration", "[transfer]") {
    SECTION("constant weight 1/2 has the exact fixed point 1") {
        const auto sys = circle_map(2);
        const Weight w{CylinderFunction::constant(sys, 6, Complex{0.5, 0.0})};
        const auto h = solve_eigenfunction(w, CylinderFunction::constant(sys, 6, Complex{1, 0}));
        REQUIRE(h.converged);
        REQUIRE(h.residual == 0.0);
        REQUIRE(sup_diff(h.h, CylinderFunction::constant(sys, 6, Complex{1, 0})) == 0.0);
    }
    SECTION("haar weight converges to 1 at depth 10") {
        const auto w = weight_from_filter(haar_filter(), 10);
        const auto sys = w.values.system();
        const auto h = solve_eigenfunction(w, CylinderFunction::constant(sys, 10, Complex{1, 0}),
                                           1e-10, 10000);
        REQUIRE(h.converged);
        REQUIRE(h.residual <= 1e-8);
        REQUIRE(sup_diff(h.h, CylinderFunction::constant(sys, 10, Complex{1, 0})) <= 1e-8);
    }
    SECTION("Cantor map with W == 1/2") {
        const auto sys = cantor_map();
        const Weight w{CylinderFunction::constant(sys, 6, Complex{0.5, 0.0})};
        const auto h = solve_eigenfunction(w, CylinderFunction::constant(sys, 6, Complex{1, 0}));
        REQUIRE(h.residual == 0.0);
    }
    SECTION("zero initial data is rejected") {
        const auto sys = circle_map(2);
        const Weight w{CylinderFunction::constant(sys, 3, Complex{0.5, 0.0})};
        REQUIRE_THROWS_AS(
            solve_eigenfunction(w, CylinderFunction::constant(sys, 3, Complex{0, 0})),
            std::runtime_error);
    }
    SECTION("matrix-free iteration handles deep grids") {
        const auto w = weight_from_filter(haar_filter(), 14);  // 16384 cells
        const auto sys = w.values.system();
        const auto h = solve_eigenfunction(w, CylinderFunction::constant(sys, 14, Complex{1, 0}));
        REQUIRE(h.converged);
        REQUIRE(h.residual <= 1e-10);
    }
}

TEST_CASE("eigenmeasure iteration", "[transfer]") {
    SECTION("balanced doubling weight fixes Lebesgue") {
        const auto sys = circle_map(2);
        const Weight w{CylinderFunction::constant(sys, 8, Complex{0.5, 0.0})};
        const auto res = solve_eigenmeasure(w);
        REQUIRE(res.converged);
        REQUIRE(std::abs(res.eigenvalue - 1.0) <= 1e-12);
        const double uniform = 1.0 / static_cast<double>(res.nu.mass.size());
        for (double m : res.nu.mass) REQUIRE(std::abs(m - uniform) <= 1e-12);
    }
    SECTION("balanced Cantor weight gives the (1/2,1/2) product measure") {
        const auto sys = cantor_map();
        const Weight w{CylinderFunction::constant(sys, 7, Complex{0.5, 0.0})};
        const auto res = solve_eigenmeasure(w);
        const auto expect = materialize(uniform_bernoulli(sys), 7);
        for (std::size_t i = 0; i < expect.mass.size(); ++i)
            REQUIRE(std::abs(res.nu.mass[i] - expect.mass[i]) <= 1e-12);
    }
    SECTION("balanced tripling weight gives Lebesgue") {
        const auto sys = circle_map(3);
        const Weight w{CylinderFunction::constant(sys, 5, Complex{1.0 / 3.0, 0.0})};
        const auto res = solve_eigenmeasure(w);
        REQUIRE(std::abs(res.eigenvalue - 1.0) <= 1e-12);
        const double uniform = 1.0 / static_cast<double>(res.nu.mass.size());
        for (double m : res.nu.mass) REQUIRE(std::abs(m - uniform) <= 1e-12);
    }
    SECTION("eigenvalue away from 1 is reported, not hidden") {
        const auto sys = circle_map(2);
        const Weight w{CylinderFunction::constant(sys, 6, Complex{1.0, 0.0})};
        const auto res = solve_eigenmeasure(w);
        REQUIRE(std::abs(res.eigenvalue - 2.0) <= 1e-10);
    }
    SECTION("left fixed vector fixes integrals of transferred functions") {
        std::mt19937_64 rng(13);
        const auto w = weight_from_filter(haar_filter(), 8);
        const auto res = solve_eigenmeasure(w, 1e-13, 20000);
        REQUIRE(res.converged);
        REQUIRE(std::abs(res.eigenvalue - 1.0) <= 1e-6);
        for (int t = 0; t < 5; ++t) {
            const auto f = random_fn(w.values.system(), 7, rng);
            const Complex lhs = integrate(transfer_apply(w, f), MeasureRep{res.nu});
            const Complex rhs = integrate(f, MeasureRep{res.nu});
            REQUIRE(std::abs(lhs - rhs) <= 1e-9);
        }
    }
}

TEST_CASE("h d(nu) is an invariant measure", "[transfer]") {
    const auto w = weight_from_filter(haar_filter(), 8);
    const auto sys = w.values.system();
    const auto nu = solve_eigenmeasure(w, 1e-13, 20000);
    const auto h = solve_eigenfunction(w, CylinderFunction::constant(sys, 8, Complex{1, 0}));
    CylinderMeasure mu{sys, 8, {}};
    mu.mass.resize(nu.nu.mass.size());
    const auto hd = refine(h.h, 8);
    double tot = 0.0;
    for (std::size_t i = 0; i < mu.mass.size(); ++i) {
        mu.mass[i] = hd.values()[i].real() * nu.nu.mass[i];
        tot += mu.mass[i];
    }
    for (auto& m : mu.mass) m /= tot;
    const auto rep =
        invariance_residual(*sys, MeasureRep{mu}, InvarianceReport::Mode::Invariance, 6);
    REQUIRE(rep.residual <= 1e-9);
}
