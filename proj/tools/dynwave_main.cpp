// Command-line driver: loads system/filter/measure documents, runs the
// requested computation, and writes CSV artifacts plus a JSON report that
// embeds the resolved configuration. Exit codes: 0 success, 1 verification
// failure (a residual exceeded its tolerance), 2 input error.

#include <chrono>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "dynwave/dynwave.hpp"

namespace fs = std::filesystem;
using namespace dynwave;

namespace {

struct CommonOpts {
    std::string system_path;
    std::string filter_path;
    std::string weight_path;
    std::string measure_path;
    std::string out_dir = ".";
    int depth = -1;
    double tol = 1e-10;
    std::uint64_t seed = 0;
    std::size_t count = 100000;
    int n = 5;
    int k_terms = 30;
    unsigned workers = 0;
};

json base_config(const CommonOpts& o, const std::string& command) {
    json j;
    j["command"] = command;
    if (!o.system_path.empty()) j["system"] = o.system_path;
    if (!o.filter_path.empty()) j["filter"] = o.filter_path;
    if (!o.weight_path.empty()) j["weight"] = o.weight_path;
    if (!o.measure_path.empty()) j["measure"] = o.measure_path;
    j["out"] = o.out_dir;
    j["depth"] = o.depth;
    j["tol"] = o.tol;
    j["seed"] = o.seed;
    j["count"] = o.count;
    j["n"] = o.n;
    j["K"] = o.k_terms;
    j["workers"] = o.workers;
    return j;
}

void write_report(const CommonOpts& o, json report, double seconds) {
    report["duration_seconds"] = seconds;
    fs::create_directories(o.out_dir);
    write_file((fs::path(o.out_dir) / "report.json").string(), report.dump(2) + "\n");
}

class Timer {
  public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

  private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

Weight load_weight(const CommonOpts& o, const SystemPtr& sys) {
    if (!o.weight_path.empty())
        return make_weight(cylinder_from_csv(sys, read_lines(o.weight_path)));
    if (!o.filter_path.empty()) {
        const Filter m0 = load_filter(o.filter_path, sys);
        return weight_from_filter(m0, o.depth);
    }
    throw std::invalid_argument("need --weight or --filter");
}

int cmd_system_info(const CommonOpts& o) {
    const Timer timer;
    const SystemPtr sys = load_system(o.system_path);
    const ValidationReport rep = validate_system(*sys);
    json out;
    out["config"] = base_config(o, "system-info");
    out["system"] = system_to_json(*sys);
    out["valid"] = rep.valid;
    out["failures"] = rep.failures;
    if (sys->kind() == SystemKind::Subshift) out["onto"] = rep.onto;
    if (sys->kind() == SystemKind::Rational) {
        out["degree"] = rep.degree;
        out["coprime"] = rep.coprime;
    }
    if (sys->symbolic()) out["default_depth"] = default_depth(*sys);
    write_report(o, out, timer.seconds());
    std::cout << out.dump(2) << "\n";
    return rep.valid ? 0 : 1;
}

int cmd_transfer_fixpoint(const CommonOpts& o, bool rescale) {
    const Timer timer;
    const SystemPtr sys = load_system(o.system_path);
    Weight w = load_weight(o, sys);
    const int depth = w.values.depth();

    auto nu = solve_eigenmeasure(w, o.tol);
    double eigenvalue = nu.eigenvalue;
    bool rescaled = false;
    if (rescale && std::abs(eigenvalue - 1.0) > 1e-6) {
        w = Weight{scale(w.values, Complex{1.0 / eigenvalue, 0.0})};
        nu = solve_eigenmeasure(w, o.tol);
        rescaled = true;
    }
    const auto h = solve_eigenfunction(w, CylinderFunction::constant(sys, depth, Complex{1, 0}),
                                       o.tol);

    fs::create_directories(o.out_dir);
    write_file((fs::path(o.out_dir) / "h.csv").string(), cylinder_to_csv(h.h));
    write_file((fs::path(o.out_dir) / "nu.csv").string(), measure_to_csv(nu.nu));

    json rep;
    rep["config"] = base_config(o, "transfer-fixpoint");
    rep["eigenvalue"] = nu.eigenvalue;
    rep["eigenvalue_before_rescale"] = eigenvalue;
    rep["rescaled"] = rescaled;
    rep["residual"] = h.residual;
    rep["nu_residual"] = nu.residual;
    rep["iterations"] = h.iterations;
    rep["nu_iterations"] = nu.iterations;
    rep["converged"] = h.converged && nu.converged;
    const bool pass = h.converged && nu.converged && h.residual <= o.tol &&
                      std::abs(nu.eigenvalue - 1.0) <= 1e-6;
    rep["pass"] = pass;
    write_report(o, rep, timer.seconds());
    std::cout << rep.dump(2) << "\n";
    return pass ? 0 : 1;
}

int cmd_measure_check(const CommonOpts& o, const std::string& mode_name) {
    const Timer timer;
    const SystemPtr sys = load_system(o.system_path);
    const MeasureRep m = load_measure(o.measure_path, sys);
    const auto mode = mode_name == "strong" ? InvarianceReport::Mode::Strong
                                            : InvarianceReport::Mode::Invariance;
    const auto rep = invariance_residual(*sys, m, mode, o.depth);

    json out;
    out["config"] = base_config(o, "measure-check");
    out["mode"] = mode_name;
    out["residual"] = rep.residual;
    out["test_depth"] = rep.test_depth;
    bool pass;
    if (std::get_if<EmpiricalCloud>(&m)) {
        out["test_labels"] = rep.test_labels;
        out["diffs"] = rep.diffs;
        out["std_errors"] = rep.std_errors;
        out["skipped"] = rep.skipped;
        pass = true;
        for (std::size_t i = 0; i < rep.diffs.size(); ++i)
            pass = pass && std::abs(rep.diffs[i]) <= 3.0 * rep.std_errors[i] + o.tol;
    } else {
        pass = rep.residual <= o.tol;
    }
    out["pass"] = pass;
    write_report(o, out, timer.seconds());
    std::cout << out.dump(2) << "\n";
    return pass ? 0 : 1;
}

std::string point_to_csv_field(const SystemSpec& sys, const Point& p) {
    if (sys.symbolic()) return word_to_string(sys, p.word);
    return format_double(p.z.real()) + ";" + format_double(p.z.imag());
}

int cmd_paths_sample(const CommonOpts& o) {
    const Timer timer;
    const SystemPtr sys = load_system(o.system_path);
    json rep;
    rep["config"] = base_config(o, "paths-sample");
    fs::create_directories(o.out_dir);

    std::string csv;
    csv.reserve(o.count * 16);
    for (int k = 0; k <= o.n; ++k) csv += (k ? ",x" : "x") + std::to_string(k);
    csv += '\n';

    bool pass = true;
    if (sys->symbolic()) {
        const Weight w = load_weight(o, sys);
        const int depth = w.values.depth();
        const auto h = solve_eigenfunction(
            w, CylinderFunction::constant(sys, depth, Complex{1, 0}), o.tol);
        if (!h.converged || h.residual > std::max(o.tol, 1e-8)) {
            rep["residual"] = h.residual;
            rep["pass"] = false;
            write_report(o, rep, timer.seconds());
            std::cerr << "fixed point iteration failed; not sampling\n";
            return 1;
        }
        const auto ctx = make_context(w, h.h, strongly_invariant_measure(sys, depth));
        SamplerStats stats;
        const auto paths = sample_paths(ctx, o.n, o.count, o.seed, o.workers, &stats);
        for (const auto& p : paths) {
            for (std::size_t k = 0; k < p.points.size(); ++k) {
                if (k) csv += ',';
                csv += point_to_csv_field(*sys, p.points[k]);
            }
            csv += '\n';
        }
        rep["h_residual"] = h.residual;
        rep["max_transition_norm_dev"] = stats.max_norm_dev;
        pass = stats.max_norm_dev <= 1e-6;
    } else {
        // Rational maps: backward orbits of the balanced measure; x0 comes from
        // a burned-in backward chain, each further level is a uniform preimage.
        const auto start = brolin_sample(*sys, o.count, 50, o.seed, Complex{2.0, 0.0}, o.workers);
        write_file((fs::path(o.out_dir) / "cloud.csv").string(), cloud_to_csv(start.cloud));
        std::mt19937_64 rng(derive_seed(o.seed, 0x9e3779b9));
        std::size_t failures = 0;
        for (std::size_t i = 0; i < start.cloud.points.size(); ++i) {
            PathSegment seg;
            seg.points.push_back(Point::from_complex(start.cloud.points[i]));
            try {
                for (int k = 0; k < o.n; ++k) {
                    const auto pre = preimages(*sys, seg.points.back());
                    std::uniform_int_distribution<std::size_t> pick(0, pre.size() - 1);
                    seg.points.push_back(pre[pick(rng)]);
                }
            } catch (const RootSolveError&) {
                ++failures;
                continue;
            }
            for (std::size_t k = 0; k < seg.points.size(); ++k) {
                if (k) csv += ',';
                csv += point_to_csv_field(*sys, seg.points[k]);
            }
            csv += '\n';
        }
        rep["skipped"] = start.skipped + failures;
    }
    write_file((fs::path(o.out_dir) / "paths.csv").string(), csv);
    rep["pass"] = pass;
    write_report(o, rep, timer.seconds());
    std::cout << rep.dump(2) << "\n";
    return pass ? 0 : 1;
}

int cmd_martingale_verify(const CommonOpts& o) {
    const Timer timer;
    const SystemPtr sys = load_system(o.system_path);
    const Filter m0 = load_filter(o.filter_path, sys);
    const Weight w = weight_from_filter(m0, o.depth);
    const int depth = w.values.depth();
    const auto h =
        solve_eigenfunction(w, CylinderFunction::constant(sys, depth, Complex{1, 0}), o.tol);
    const auto ctx = make_context(w, h.h, strongly_invariant_measure(sys, depth));

    // Martingale family: indicators of the depth-1 cylinders plus random
    // complex level data, all extended to o.n levels.
    std::vector<Martingale> family;
    CylinderGrid g1(sys, 1);
    for (std::size_t i = 0; i < g1.size(); ++i)
        family.push_back(
            martingale_from_level(ctx, CylinderFunction::indicator(sys, g1.word(i)), 0, o.n + 1));
    std::mt19937_64 rng(derive_seed(o.seed, 1));
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int t = 0; t < 6; ++t) {
        CylinderGrid g2(sys, 2);
        std::vector<Complex> v(g2.size());
        for (auto& x : v) x = Complex{u(rng), u(rng)};
        family.push_back(martingale_from_level(ctx, CylinderFunction(sys, 2, std::move(v)),
                                               static_cast<int>(t % 2), o.n + 1));
    }

    double compat = 0.0, isometry = 0.0, covariance = 0.0, consistency = 0.0, monotone = 0.0;
    const auto gtest = CylinderFunction::indicator(sys, g1.word(0));
    for (const auto& a : family) {
        compat = std::max(compat, a.compat_residual);
        const auto ua = apply_U(m0, a);
        const auto na = level_norms_squared(a);
        const auto nu = level_norms_squared(ua);
        for (std::size_t k = 0; k < nu.size(); ++k)
            isometry = std::max(isometry, std::abs(nu[k] - na[k + 1]));
        for (std::size_t k = 0; k + 1 < na.size(); ++k)
            monotone = std::max(monotone, std::max(0.0, na[k] - na[k + 1]));
        const auto lhs = apply_U(m0, apply_pi(gtest, a));
        const auto rhs = apply_pi(compose_with_r(gtest), ua);
        for (std::size_t k = 0; k < lhs.levels.size(); ++k)
            covariance = std::max(covariance, sup_diff(lhs.levels[k], rhs.levels[k]));
    }
    for (int d = 0; d <= 2; ++d) {
        CylinderGrid g(sys, d);
        for (std::size_t i = 0; i < g.size(); ++i) {
            const auto f = d == 0 ? CylinderFunction::constant(sys, 0, Complex{1, 0})
                                  : CylinderFunction::indicator(sys, g.word(i));
            for (int n = 0; n <= std::min(o.n, 5); ++n)
                consistency =
                    std::max(consistency, consistency_residual(ctx->weight, ctx->h, ctx->mu, f, n));
        }
    }

    json rep;
    rep["config"] = base_config(o, "martingale-verify");
    rep["h_residual"] = h.residual;
    rep["compat_residual"] = compat;
    rep["isometry_max_diff"] = isometry;
    rep["covariance_max_diff"] = covariance;
    rep["consistency_max_residual"] = consistency;
    rep["norm_monotonicity_defect"] = monotone;
    const bool pass = h.residual <= o.tol && compat <= o.tol && isometry <= o.tol &&
                      covariance <= o.tol && consistency <= o.tol && monotone <= o.tol;
    rep["pass"] = pass;
    write_report(o, rep, timer.seconds());
    std::cout << rep.dump(2) << "\n";
    return pass ? 0 : 1;
}

int cmd_filter_check(const CommonOpts& o) {
    const Timer timer;
    const SystemPtr sys = load_system(o.system_path);
    if (!sys->symbolic()) throw std::invalid_argument("filter-check needs a symbolic system");
    const Filter m0 = load_filter(o.filter_path, sys);
    const int depth = o.depth > 0 ? o.depth : default_depth(*sys);

    const Weight w = weight_from_filter(m0, depth);
    const auto solved =
        solve_eigenfunction(w, CylinderFunction::constant(sys, depth, Complex{1, 0}), o.tol);
    const auto rep = isometry_residual(m0, solved, strongly_invariant_measure(sys, depth));

    json out;
    out["config"] = base_config(o, "filter-check");
    out["h_residual"] = solved.residual;
    out["transfer_residual"] = rep.transfer_residual;
    out["isometry_defect"] = rep.isometry_defect;
    out["residual"] = rep.residual;
    out["mu_strong_residual"] = rep.mu_strong_residual;

    if (sys->full_shift()) {
        // Scalar covariance check at deterministic pseudo-random dyadic points.
        std::mt19937_64 rng(derive_seed(o.seed, 2));
        std::vector<Point> pts;
        for (std::size_t i = 0; i < std::max<std::size_t>(o.count, 16) && i < 10000; ++i) {
            Word word;
            for (int k = 0; k < 20; ++k)
                word.push_back(sys->digit(static_cast<int>(rng() % sys->alphabet_size())));
            pts.push_back(Point::from_word(std::move(word)));
        }
        MatrixFilter mf;
        mf.dim = 1;
        const Filter m0copy = m0;
        mf.m0 = [m0copy, sys](const Point& p) {
            if (m0copy.is_trig())
                return SmallMatrix::scalar(m0copy.trig().eval(word_value(*sys, p.word)));
            return SmallMatrix::scalar(std::get<CylinderFunction>(m0copy.rep).value_at(p));
        };
        mf.h = [](const Point&) { return SmallMatrix::identity(1); };
        const auto qmf = qmf_matrix_residual(*sys, mf, pts);
        out["qmf_residual"] = qmf.residual;
        out["qmf_points"] = qmf.evaluated;
    }

    const bool pass = rep.residual <= o.tol &&
                      (!out.contains("qmf_residual") || out["qmf_residual"].get<double>() <= o.tol);
    out["pass"] = pass;
    write_report(o, out, timer.seconds());
    std::cout << out.dump(2) << "\n";
    return pass ? 0 : 1;
}

int cmd_scaling_function(const CommonOpts& o, double x_max, double x_step, int cascade_iters,
                         int cascade_grid) {
    const Timer timer;
    const SystemPtr sys = o.system_path.empty() ? circle_map(2) : load_system(o.system_path);
    if (sys->kind() != SystemKind::Circle)
        throw std::invalid_argument("scaling-function needs a circle system");
    const Filter m0 = load_filter(o.filter_path, sys);
    const int n_scale = sys->alphabet_size();

    fs::create_directories(o.out_dir);
    std::string csv = "x,re,im,tail_bound\n";
    const long steps = static_cast<long>(std::llround(2.0 * x_max / x_step));
    for (long i = 0; i <= steps; ++i) {
        const double x = -x_max + static_cast<double>(i) * x_step;
        const auto v = scaling_hat(m0, n_scale, x, o.k_terms);
        csv += format_double(x);
        csv += ',';
        csv += format_double(v.value.real());
        csv += ',';
        csv += format_double(v.value.imag());
        csv += ',';
        csv += format_double(v.tail_bound);
        csv += '\n';
    }
    write_file((fs::path(o.out_dir) / "scaling_hat.csv").string(), csv);

    json rep;
    rep["config"] = base_config(o, "scaling-function");
    rep["x_max"] = x_max;
    rep["x_step"] = x_step;

    if (cascade_iters > 0) {
        const auto res = cascade(m0, n_scale, cascade_iters, cascade_grid);
        std::string cc = "t,re,im\n";
        for (std::size_t i = 0; i < res.grid.size(); ++i) {
            cc += format_double(res.grid[i]);
            cc += ',';
            cc += format_double(res.values[i].real());
            cc += ',';
            cc += format_double(res.values[i].imag());
            cc += '\n';
        }
        write_file((fs::path(o.out_dir) / "cascade.csv").string(), cc);
        rep["cascade_iterations"] = res.iterations_run;
        rep["cascade_diverged"] = res.diverged;
        rep["cascade_mass"] = res.mass;
        rep["cascade_sup_diffs"] = res.sup_diffs;
    }
    write_report(o, rep, timer.seconds());
    std::cout << rep.dump(2) << "\n";
    return 0;
}

int cmd_multiplicity(const CommonOpts& o, const std::string& op, const std::string& input) {
    const Timer timer;
    const SystemPtr sys = load_system(o.system_path);
    const auto d0 = multiplicity_from_csv(sys, read_lines(input));
    json rep;
    rep["config"] = base_config(o, "multiplicity");
    rep["op"] = op;
    fs::create_directories(o.out_dir);
    try {
        const MultiplicityFunction result =
            op == "lift" ? lift_multiplicity(d0) : detail_multiplicity(d0);
        write_file((fs::path(o.out_dir) / (op + ".csv")).string(), multiplicity_to_csv(result));
        rep["pass"] = true;
        write_report(o, rep, timer.seconds());
        std::cout << rep.dump(2) << "\n";
        return 0;
    } catch (const std::domain_error& e) {
        rep["pass"] = false;
        rep["error"] = e.what();
        write_report(o, rep, timer.seconds());
        std::cerr << e.what() << "\n";
        return 1;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"transfer operators, invariant measures and martingale scaling "
                 "on finite-to-one dynamical systems"};
    app.require_subcommand(1);

    CommonOpts o;
    std::string mode = "strong";
    std::string mult_op = "lift";
    std::string mult_input;
    double x_max = 8.0, x_step = 0.01;
    int cascade_iters = 0, cascade_grid = 64;
    bool rescale = false;

    const auto add_common = [&](CLI::App* cmd, bool needs_system = true) {
        if (needs_system) cmd->add_option("--system", o.system_path, "system JSON document");
        cmd->add_option("--out", o.out_dir, "output directory");
        cmd->add_option("--depth", o.depth, "cylinder depth");
        cmd->add_option("--tol", o.tol, "tolerance");
        cmd->add_option("--seed", o.seed, "RNG seed");
        cmd->add_option("--count", o.count, "sample count");
        cmd->add_option("--n", o.n, "number of backward levels");
        cmd->add_option("--K", o.k_terms, "product truncation order");
        cmd->add_option("--workers", o.workers, "worker threads (0 = all)");
    };

    auto* info = app.add_subcommand("system-info", "validate a system document");
    add_common(info);

    auto* fix = app.add_subcommand("transfer-fixpoint",
                                   "eigenfunction h and eigenmeasure nu of the transfer operator");
    add_common(fix);
    fix->add_option("--weight", o.weight_path, "weight CSV (word,re,im)");
    fix->add_option("--filter", o.filter_path, "filter JSON");
    fix->add_flag("--rescale", rescale, "rescale W by 1/eigenvalue if the eigenvalue is not 1");

    auto* mc = app.add_subcommand("measure-check", "invariance / strong invariance residual");
    add_common(mc);
    mc->add_option("--measure", o.measure_path, "measure JSON document")->required();
    mc->add_option("--mode", mode, "invariance | strong")
        ->check(CLI::IsMember({"invariance", "strong"}));

    auto* ps = app.add_subcommand("paths-sample", "sample backward-orbit path segments");
    add_common(ps);
    ps->add_option("--filter", o.filter_path, "filter JSON");
    ps->add_option("--weight", o.weight_path, "weight CSV");

    auto* mv = app.add_subcommand("martingale-verify",
                                  "compatibility, isometry, covariance and consistency residuals");
    add_common(mv);
    mv->add_option("--filter", o.filter_path, "filter JSON")->required();

    auto* fc = app.add_subcommand("filter-check", "isometry and covariance condition residuals");
    add_common(fc);
    fc->add_option("--filter", o.filter_path, "filter JSON")->required();

    auto* sf = app.add_subcommand("scaling-function",
                                  "scaling transform by truncated products, plus optional cascade");
    add_common(sf);
    sf->add_option("--filter", o.filter_path, "filter JSON")->required();
    sf->add_option("--x-max", x_max, "half-width of the evaluation window");
    sf->add_option("--x-step", x_step, "grid step");
    sf->add_option("--cascade", cascade_iters, "also run this many cascade iterations");
    sf->add_option("--grid", cascade_grid, "cascade output points per unit");

    auto* mu = app.add_subcommand("multiplicity", "lift / detail multiplicity arithmetic");
    add_common(mu);
    mu->add_option("--op", mult_op, "lift | detail")->check(CLI::IsMember({"lift", "detail"}));
    mu->add_option("--input", mult_input, "multiplicity CSV (word,value)")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (info->parsed()) return cmd_system_info(o);
        if (fix->parsed()) return cmd_transfer_fixpoint(o, rescale);
        if (mc->parsed()) return cmd_measure_check(o, mode);
        if (ps->parsed()) return cmd_paths_sample(o);
        if (mv->parsed()) return cmd_martingale_verify(o);
        if (fc->parsed()) return cmd_filter_check(o);
        if (sf->parsed()) return cmd_scaling_function(o, x_max, x_step, cascade_iters, cascade_grid);
        if (mu->parsed()) return cmd_multiplicity(o, mult_op, mult_input);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
