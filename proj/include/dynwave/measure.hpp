#pragma once

#include <cmath>
#include <random>
#include <variant>

#include "dynwave/cylinder.hpp"

namespace dynwave {

// Nonnegative mass per admissible depth-d word.
struct CylinderMeasure {
    SystemPtr sys;
    int depth = 0;
    std::vector<double> mass;
};

// Product measure over digit ranks; materializable at any depth.
struct BernoulliSpec {
    SystemPtr sys;
    std::vector<double> weights;  // indexed by digit rank
};

// Weighted point cloud on a rational-map system.
struct EmpiricalCloud {
    std::vector<Complex> points;
    std::vector<double> weights;
};

using MeasureRep = std::variant<CylinderMeasure, BernoulliSpec, EmpiricalCloud>;

inline BernoulliSpec make_bernoulli(SystemPtr sys, std::vector<double> weights) {
    if (!sys->symbolic()) throw std::invalid_argument("Bernoulli measures need a symbolic system");
    if (static_cast<int>(weights.size()) != sys->alphabet_size())
        throw std::invalid_argument("Bernoulli weights must match the digit alphabet size");
    double total = 0.0;
    for (double w : weights) {
        if (w < 0.0) throw std::invalid_argument("Bernoulli weights must be nonnegative");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw std::invalid_argument("Bernoulli weights must sum to 1");
    return BernoulliSpec{std::move(sys), std::move(weights)};
}

inline BernoulliSpec uniform_bernoulli(SystemPtr sys) {
    const int b = sys->alphabet_size();
    return make_bernoulli(std::move(sys), std::vector<double>(static_cast<std::size_t>(b), 1.0 / b));
}

namespace detail {

// One aggregation step: masses at depth k+1 summed onto their depth-k prefixes.
inline std::vector<double> aggregate_once(const SystemPtr& sys, int depth_fine,
                                          const std::vector<double>& fine) {
    if (sys->full_shift()) {
        const std::size_t b = static_cast<std::size_t>(sys->alphabet_size());
        std::vector<double> coarse(fine.size() / b, 0.0);
        for (std::size_t i = 0; i < coarse.size(); ++i) {
            double s = 0.0;
            for (std::size_t a = 0; a < b; ++a) s += fine[i * b + a];
            coarse[i] = s;
        }
        return coarse;
    }
    CylinderGrid gf(sys, depth_fine), gc(sys, depth_fine - 1);
    std::vector<double> coarse(gc.size(), 0.0);
    for (std::size_t i = 0; i < gf.size(); ++i) coarse[gc.prefix_index(gf.word(i))] += fine[i];
    return coarse;
}

// One product-extension step of a Bernoulli spec: mass(w) = p_{w_1} * mass(shift w).
// The multiplication order is the defining left fold, which makes the balanced
// backward-average identity cancel exactly in floating point.
inline std::vector<double> bernoulli_extend_once(const BernoulliSpec& m, int depth_coarse,
                                                 const std::vector<double>& coarse) {
    const SystemPtr& sys = m.sys;
    if (sys->full_shift()) {
        const std::size_t b = static_cast<std::size_t>(sys->alphabet_size());
        std::vector<double> fine(coarse.size() * b);
        for (std::size_t a = 0; a < b; ++a)
            for (std::size_t j = 0; j < coarse.size(); ++j)
                fine[a * coarse.size() + j] = m.weights[a] * coarse[j];
        return fine;
    }
    CylinderGrid gf(sys, depth_coarse + 1), gc(sys, depth_coarse);
    std::vector<double> fine(gf.size());
    for (std::size_t i = 0; i < gf.size(); ++i) {
        Word w = gf.word(i);
        const std::size_t j = depth_coarse == 0 ? 0 : gc.index(Word(w.begin() + 1, w.end()));
        fine[i] = m.weights[static_cast<std::size_t>(sys->rank(w.front()))] * coarse[j];
    }
    return fine;
}

// Masses on every level 0..depth. Cylinder measures aggregate downward from
// their own depth; Bernoulli specs extend upward by digit products.
inline std::vector<std::vector<double>> level_masses(const MeasureRep& m, int depth) {
    if (const auto* cm = std::get_if<CylinderMeasure>(&m)) {
        if (depth > cm->depth)
            throw std::invalid_argument("cylinder measure is too shallow for the requested depth");
        std::vector<std::vector<double>> levels(static_cast<std::size_t>(depth) + 1);
        std::vector<double> cur = cm->mass;
        for (int k = cm->depth; k > depth; --k) cur = aggregate_once(cm->sys, k, cur);
        levels[static_cast<std::size_t>(depth)] = cur;
        for (int k = depth; k > 0; --k)
            levels[static_cast<std::size_t>(k - 1)] =
                aggregate_once(cm->sys, k, levels[static_cast<std::size_t>(k)]);
        return levels;
    }
    if (const auto* bs = std::get_if<BernoulliSpec>(&m)) {
        std::vector<std::vector<double>> levels(static_cast<std::size_t>(depth) + 1);
        levels[0] = {1.0};
        for (int k = 0; k < depth; ++k)
            levels[static_cast<std::size_t>(k + 1)] =
                bernoulli_extend_once(*bs, k, levels[static_cast<std::size_t>(k)]);
        return levels;
    }
    throw std::invalid_argument("level_masses needs a cylinder or Bernoulli measure");
}

inline const SystemPtr& measure_system(const MeasureRep& m) {
    if (const auto* cm = std::get_if<CylinderMeasure>(&m)) return cm->sys;
    if (const auto* bs = std::get_if<BernoulliSpec>(&m)) return bs->sys;
    throw std::invalid_argument("empirical clouds carry no symbolic system");
}

}  // namespace detail

inline CylinderMeasure materialize(const BernoulliSpec& m, int depth) {
    auto levels = detail::level_masses(MeasureRep{m}, depth);
    return CylinderMeasure{m.sys, depth, std::move(levels.back())};
}

inline double total_mass(const MeasureRep& m) {
    if (const auto* cm = std::get_if<CylinderMeasure>(&m)) {
        double s = 0.0;
        for (double x : cm->mass) s += x;
        return s;
    }
    if (const auto* bs = std::get_if<BernoulliSpec>(&m)) {
        double s = 0.0;
        for (double x : bs->weights) s += x;
        return s;
    }
    const auto& ec = std::get<EmpiricalCloud>(m);
    double s = 0.0;
    for (double w : ec.weights) s += w;
    return s;
}

inline bool is_probability(const MeasureRep& m, double tol = 1e-12) {
    return std::abs(total_mass(m) - 1.0) <= tol;
}

inline Complex integrate(const CylinderFunction& f, const MeasureRep& m) {
    if (std::get_if<EmpiricalCloud>(&m))
        throw std::invalid_argument("cannot pair a cylinder function with an empirical cloud");
    const SystemPtr& sys = detail::measure_system(m);
    if (!(*sys == *f.system()))
        throw std::invalid_argument("function and measure live on different systems");

    if (const auto* cm = std::get_if<CylinderMeasure>(&m)) {
        if (cm->depth < f.depth())
            throw std::invalid_argument("cylinder measure is too shallow to integrate exactly");
        const CylinderFunction ff = refine(f, cm->depth);
        Complex acc{0.0, 0.0};
        for (std::size_t i = 0; i < ff.size(); ++i) acc += ff.values()[i] * cm->mass[i];
        return acc;
    }
    const CylinderMeasure cm = materialize(std::get<BernoulliSpec>(m), f.depth());
    Complex acc{0.0, 0.0};
    for (std::size_t i = 0; i < f.size(); ++i) acc += f.values()[i] * cm.mass[i];
    return acc;
}

inline Complex integrate(const SampledFunction& f, const MeasureRep& m) {
    const auto* ec = std::get_if<EmpiricalCloud>(&m);
    if (!ec) throw std::invalid_argument("sampled functions integrate against empirical clouds");
    if (ec->points.empty()) throw std::invalid_argument("empty sample cloud");
    Complex acc{0.0, 0.0};
    double wsum = 0.0;
    for (std::size_t i = 0; i < ec->points.size(); ++i) {
        acc += ec->weights[i] * f.eval(ec->points[i]);
        wsum += ec->weights[i];
    }
    return acc / wsum;
}

// Conditional expectation onto the depth-d2 partition under the weights of m.
inline CylinderFunction project(const CylinderFunction& f, int d2, const MeasureRep& m) {
    if (d2 > f.depth()) throw std::invalid_argument("project: target depth is finer");
    const auto levels = detail::level_masses(m, f.depth());
    const std::vector<double>& w = levels.back();
    const SystemPtr& sys = f.system();

    CylinderGrid fine(sys, f.depth()), coarse(sys, d2);
    std::vector<Complex> num(coarse.size(), Complex{0.0, 0.0});
    std::vector<double> den(coarse.size(), 0.0);
    for (std::size_t i = 0; i < fine.size(); ++i) {
        std::size_t j;
        if (sys->full_shift()) {
            std::size_t block = 1;
            for (int k = 0; k < f.depth() - d2; ++k) block *= static_cast<std::size_t>(sys->alphabet_size());
            j = i / block;
        } else {
            j = coarse.prefix_index(fine.word(i));
        }
        num[j] += f.values()[i] * w[i];
        den[j] += w[i];
    }
    for (std::size_t j = 0; j < den.size(); ++j) {
        if (den[j] <= 0.0) throw std::domain_error("project: zero-mass cylinder");
        num[j] /= den[j];
    }
    return CylinderFunction(sys, d2, std::move(num));
}

struct InvarianceReport {
    enum class Mode { Invariance, Strong };
    Mode mode = Mode::Invariance;
    double residual = 0.0;
    int test_depth = 0;
    // Empirical clouds: per test function mean difference and its standard error.
    std::vector<std::string> test_labels;
    std::vector<double> diffs;
    std::vector<double> std_errors;
    std::size_t skipped = 0;
};

namespace detail {

inline InvarianceReport invariance_residual_symbolic(const SystemSpec& sys, const MeasureRep& m,
                                                     InvarianceReport::Mode mode, int test_depth) {
    InvarianceReport rep;
    rep.mode = mode;
    rep.test_depth = test_depth;
    const SystemPtr& sp = measure_system(m);
    if (!(*sp == sys)) throw std::invalid_argument("measure lives on a different system");

    const int need = test_depth + (mode == InvarianceReport::Mode::Invariance ? 1 : 0);
    const auto levels = level_masses(m, need);

    double worst = 0.0;
    if (mode == InvarianceReport::Mode::Invariance) {
        // |mu(r^{-1}[w]) - mu([w])| over all words of depth <= test_depth.
        for (int k = 0; k <= test_depth; ++k) {
            const auto& mk = levels[static_cast<std::size_t>(k)];
            const auto& mk1 = levels[static_cast<std::size_t>(k + 1)];
            CylinderGrid gk(sp, k), gk1(sp, k + 1);
            const std::size_t b = static_cast<std::size_t>(sys.alphabet_size());
            for (std::size_t i = 0; i < gk.size(); ++i) {
                double pre = 0.0;
                if (sys.full_shift()) {
                    for (std::size_t a = 0; a < b; ++a) pre += mk1[a * gk.size() + i];
                } else {
                    const Word w = gk.word(i);
                    for (int s = 1; s <= sys.alphabet_size(); ++s) {
                        if (k > 0 && !sys.admissible(s, w.front())) continue;
                        Word u;
                        u.reserve(w.size() + 1);
                        u.push_back(s);
                        u.insert(u.end(), w.begin(), w.end());
                        pre += mk1[gk1.index(u)];
                    }
                }
                worst = std::max(worst, std::abs(pre - mk[i]));
            }
        }
        rep.residual = worst;
        return rep;
    }

    // Strong invariance: the balanced backward average of a depth-k indicator
    // integrates to mass(shifted word)/branch-count; compare with the mass.
    for (int k = 1; k <= test_depth; ++k) {
        const auto& mk = levels[static_cast<std::size_t>(k)];
        const auto& mk1 = levels[static_cast<std::size_t>(k - 1)];
        CylinderGrid gk(sp, k);
        if (k == 1) {
            // f = indicator of [s]: integral is sum over first symbols t that s
            // may precede of mass([t]) / branch_count(t).
            double tot = 0.0;
            for (double x : mk) tot += x;
            for (std::size_t i = 0; i < gk.size(); ++i) {
                double val = 0.0;
                if (sys.full_shift()) {
                    val = tot * (1.0 / sys.alphabet_size());
                } else {
                    const Word w = gk.word(i);
                    for (int t = 1; t <= sys.alphabet_size(); ++t) {
                        if (!sys.admissible(w.front(), t)) continue;
                        val += mk[gk.index(Word{t})] * (1.0 / branch_count_of_symbol(sys, t));
                    }
                }
                worst = std::max(worst, std::abs(val - mk[i]));
            }
            continue;
        }
        CylinderGrid gk_1(sp, k - 1);
        for (std::size_t i = 0; i < gk.size(); ++i) {
            std::size_t j;
            int second;
            if (sys.full_shift()) {
                j = i % gk_1.size();
                second = 0;  // branch count is constant
            } else {
                const Word w = gk.word(i);
                j = gk_1.index(Word(w.begin() + 1, w.end()));
                second = w[1];
            }
            const double inv_c = 1.0 / (sys.full_shift() ? sys.alphabet_size()
                                                         : branch_count_of_symbol(sys, second));
            worst = std::max(worst, std::abs(mk1[j] * inv_c - mk[i]));
        }
    }
    rep.residual = worst;
    return rep;
}

inline InvarianceReport invariance_residual_empirical(const SystemSpec& sys,
                                                      const EmpiricalCloud& cloud,
                                                      InvarianceReport::Mode mode) {
    if (sys.symbolic())
        throw std::invalid_argument("empirical clouds pair with rational-map systems");
    if (cloud.points.empty()) throw std::invalid_argument("empty sample cloud");
    InvarianceReport rep;
    rep.mode = mode;

    constexpr int kMaxPower = 8;
    const std::size_t n = cloud.points.size();

    // Per point: f(z) vs f(r(z)) (invariance) or the balanced preimage average
    // of f (strong), for f = z^k. Real and imaginary parts reported separately.
    std::vector<std::vector<Complex>> diff(kMaxPower, std::vector<Complex>(n, Complex{0, 0}));
    std::vector<bool> used(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        const Complex z = cloud.points[i];
        std::vector<Complex> other(kMaxPower, Complex{0, 0});
        try {
            if (mode == InvarianceReport::Mode::Invariance) {
                const Complex rz = rational_apply(sys, z);
                Complex p{1.0, 0.0};
                for (int k = 0; k < kMaxPower; ++k) {
                    p *= rz;
                    other[static_cast<std::size_t>(k)] = p;
                }
            } else {
                const auto pre = preimages(sys, Point::from_complex(z));
                for (const auto& y : pre) {
                    Complex p{1.0, 0.0};
                    for (int k = 0; k < kMaxPower; ++k) {
                        p *= y.z;
                        other[static_cast<std::size_t>(k)] += p;
                    }
                }
                for (auto& o : other) o /= static_cast<double>(pre.size());
            }
        } catch (const std::exception&) {
            ++rep.skipped;
            continue;
        }
        used[i] = true;
        Complex p{1.0, 0.0};
        for (int k = 0; k < kMaxPower; ++k) {
            p *= z;
            diff[static_cast<std::size_t>(k)][i] = other[static_cast<std::size_t>(k)] - p;
        }
    }

    std::size_t n_used = 0;
    for (bool u : used) n_used += u;
    if (n_used == 0) throw std::runtime_error("all cloud points failed preimage evaluation");

    double worst = 0.0;
    for (int k = 0; k < kMaxPower; ++k) {
        for (int part = 0; part < 2; ++part) {
            double mean = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                if (used[i])
                    mean += part == 0 ? diff[static_cast<std::size_t>(k)][i].real()
                                      : diff[static_cast<std::size_t>(k)][i].imag();
            mean /= static_cast<double>(n_used);
            double var = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (!used[i]) continue;
                const double d = (part == 0 ? diff[static_cast<std::size_t>(k)][i].real()
                                            : diff[static_cast<std::size_t>(k)][i].imag()) -
                                 mean;
                var += d * d;
            }
            var /= static_cast<double>(n_used > 1 ? n_used - 1 : 1);
            rep.test_labels.push_back((part == 0 ? "Re(z^" : "Im(z^") + std::to_string(k + 1) + ")");
            rep.diffs.push_back(mean);
            rep.std_errors.push_back(std::sqrt(var / static_cast<double>(n_used)));
            worst = std::max(worst, std::abs(mean));
        }
    }
    rep.residual = worst;
    return rep;
}

}  // namespace detail

inline InvarianceReport invariance_residual(const SystemSpec& sys, const MeasureRep& m,
                                            InvarianceReport::Mode mode, int test_depth = -1) {
    if (const auto* ec = std::get_if<EmpiricalCloud>(&m))
        return detail::invariance_residual_empirical(sys, *ec, mode);
    if (test_depth < 0) {
        if (const auto* cm = std::get_if<CylinderMeasure>(&m))
            test_depth = std::max(0, cm->depth - 1);
        else
            test_depth = default_depth(sys) - 1;
    }
    if (const auto* cm = std::get_if<CylinderMeasure>(&m)) {
        const int need = test_depth + (mode == InvarianceReport::Mode::Invariance ? 1 : 0);
        if (need > cm->depth)
            throw std::invalid_argument("cylinder measure too shallow for the requested test depth");
    }
    return detail::invariance_residual_symbolic(sys, m, mode, test_depth);
}

struct BrolinResult {
    EmpiricalCloud cloud;
    std::size_t skipped = 0;
};

// Backward-orbit sampling of the balanced invariant measure of a rational map:
// each step moves to a uniformly chosen preimage. Chains of fixed length are
// seeded independently, so the cloud is reproducible for any worker count.
inline BrolinResult brolin_sample(const SystemSpec& sys, std::size_t n, int burn_in,
                                  std::uint64_t seed, Complex start = Complex{2.0, 0.0},
                                  unsigned workers = 0) {
    if (!(!sys.symbolic())) throw std::invalid_argument("brolin_sample needs a rational map");
    if (n == 0 || burn_in < 0) throw std::invalid_argument("need n > 0 and burn_in >= 0");

    constexpr std::size_t kChainLen = 4096;
    const std::size_t chains = (n + kChainLen - 1) / kChainLen;

    BrolinResult result;
    result.cloud.points.assign(n, Complex{0.0, 0.0});
    result.cloud.weights.assign(n, 1.0);
    std::vector<std::size_t> skipped(chains, 0);

    parallel_chunks(chains, workers, [&](std::size_t, std::size_t b, std::size_t e) {
        for (std::size_t c = b; c < e; ++c) {
            std::mt19937_64 rng(derive_seed(seed, c));
            const std::size_t quota = std::min(kChainLen, n - c * kChainLen);
            Complex z = start;
            int burn_left = burn_in;
            std::size_t got = 0;
            std::size_t guard = 0;
            while (got < quota) {
                if (++guard > 100 * (quota + static_cast<std::size_t>(burn_in) + 1))
                    throw std::runtime_error("brolin_sample: too many failed preimage solves");
                try {
                    const auto pre = preimages(sys, Point::from_complex(z));
                    std::uniform_int_distribution<std::size_t> pick(0, pre.size() - 1);
                    z = pre[pick(rng)].z;
                } catch (const RootSolveError&) {
                    ++skipped[c];
                    z = start;
                    burn_left = burn_in;
                    continue;
                }
                if (burn_left > 0) {
                    --burn_left;
                    continue;
                }
                result.cloud.points[c * kChainLen + got] = z;
                ++got;
            }
        }
    });
    for (std::size_t s : skipped) result.skipped += s;
    return result;
}

inline std::string cloud_to_csv(const EmpiricalCloud& cloud) {
    std::string out = "re,im,weight\n";
    for (std::size_t i = 0; i < cloud.points.size(); ++i) {
        out += format_double(cloud.points[i].real());
        out += ',';
        out += format_double(cloud.points[i].imag());
        out += ',';
        out += format_double(cloud.weights[i]);
        out += '\n';
    }
    return out;
}

inline EmpiricalCloud cloud_from_csv(const std::vector<std::string>& lines) {
    EmpiricalCloud cloud;
    for (const auto& line : lines) {
        if (line.rfind("re", 0) == 0) continue;
        const auto cols = split_csv(line);
        if (cols.size() != 3) throw std::invalid_argument("cloud csv rows need re,im,weight");
        cloud.points.emplace_back(parse_double(cols[0]), parse_double(cols[1]));
        cloud.weights.push_back(parse_double(cols[2]));
    }
    return cloud;
}

inline std::string measure_to_csv(const CylinderMeasure& m) {
    const CylinderGrid g(m.sys, m.depth);
    std::string out = "word,mass\n";
    for (std::size_t i = 0; i < g.size(); ++i) {
        out += word_to_string(*m.sys, g.word(i));
        out += ',';
        out += format_double(m.mass[i]);
        out += '\n';
    }
    return out;
}

inline CylinderMeasure measure_from_csv(SystemPtr sys, const std::vector<std::string>& lines) {
    int depth = -1;
    std::vector<std::pair<Word, double>> entries;
    for (const auto& line : lines) {
        if (line.rfind("word", 0) == 0) continue;
        const auto cols = split_csv(line);
        if (cols.size() != 2) throw std::invalid_argument("measure csv rows need word,mass");
        Word w = word_from_string(*sys, cols[0]);
        if (depth < 0) depth = static_cast<int>(w.size());
        if (static_cast<int>(w.size()) != depth)
            throw std::invalid_argument("measure csv mixes word lengths");
        entries.emplace_back(std::move(w), parse_double(cols[1]));
    }
    if (depth < 0) throw std::invalid_argument("measure csv is empty");
    CylinderGrid g(sys, depth);
    std::vector<double> mass(g.size(), 0.0);
    for (auto& [w, x] : entries) {
        if (x < 0.0) throw std::invalid_argument("negative mass in measure csv");
        mass[g.index(w)] = x;
    }
    return CylinderMeasure{std::move(sys), depth, std::move(mass)};
}

}  // namespace dynwave
