#pragma once

#include <cstdint>

#include "dynwave/cylinder.hpp"

namespace dynwave {

// Saturating marker for infinite multiplicity.
inline constexpr std::uint64_t kInfiniteMultiplicity = ~std::uint64_t{0};

inline std::uint64_t mult_add(std::uint64_t a, std::uint64_t b) {
    if (a == kInfiniteMultiplicity || b == kInfiniteMultiplicity) return kInfiniteMultiplicity;
    const std::uint64_t s = a + b;
    return (s < a || s == kInfiniteMultiplicity) ? kInfiniteMultiplicity : s;
}

// Extended-nonnegative-integer function on the depth-d cylinder partition.
struct MultiplicityFunction {
    SystemPtr sys;
    int depth = 0;
    std::vector<std::uint64_t> values;
};

inline MultiplicityFunction make_multiplicity(SystemPtr sys, int depth,
                                              std::vector<std::uint64_t> values) {
    const CylinderGrid g(sys, depth);
    if (values.size() != g.size())
        throw std::invalid_argument("multiplicity value count does not match cylinder count");
    return MultiplicityFunction{std::move(sys), depth, std::move(values)};
}

inline MultiplicityFunction constant_multiplicity(SystemPtr sys, int depth, std::uint64_t v) {
    const CylinderGrid g(sys, depth);
    return MultiplicityFunction{std::move(sys), depth,
                                std::vector<std::uint64_t>(g.size(), v)};
}

inline MultiplicityFunction refine_multiplicity(const MultiplicityFunction& d0, int depth) {
    if (depth < d0.depth) throw std::invalid_argument("refine_multiplicity: target coarser");
    if (depth == d0.depth) return d0;
    const SystemPtr& sys = d0.sys;
    CylinderGrid fine(sys, depth), coarse(sys, d0.depth);
    std::vector<std::uint64_t> v(fine.size());
    for (std::size_t i = 0; i < fine.size(); ++i)
        v[i] = d0.values[coarse.prefix_index(fine.word(i))];
    return MultiplicityFunction{sys, depth, std::move(v)};
}

// Multiplicity of the lifted space: d1(x) = sum over preimages y of x of d0(y).
// Exact integer preimage sums; infinity absorbs.
inline MultiplicityFunction lift_multiplicity(const MultiplicityFunction& d0) {
    const SystemPtr& sys = d0.sys;
    const int d = d0.depth;
    if (d < 1) throw std::invalid_argument("lift_multiplicity: depth-0 input, refine first");
    const int dout = sys->full_shift() ? d - 1 : std::max(d - 1, 1);
    CylinderGrid gout(sys, dout), gin(sys, d);
    std::vector<std::uint64_t> out(gout.size(), 0);
    if (sys->full_shift()) {
        const std::size_t b = static_cast<std::size_t>(sys->alphabet_size());
        for (std::size_t a = 0; a < b; ++a)
            for (std::size_t i = 0; i < out.size(); ++i)
                out[i] = mult_add(out[i], d0.values[a * out.size() + i]);
        return MultiplicityFunction{sys, dout, std::move(out)};
    }
    if (d == 1) {
        for (std::size_t i = 0; i < gout.size(); ++i) {
            const int s = gout.word(i).front();
            for (int a = 1; a <= sys->alphabet_size(); ++a)
                if (sys->admissible(a, s))
                    out[i] = mult_add(out[i], d0.values[gin.index(Word{a})]);
        }
        return MultiplicityFunction{sys, dout, std::move(out)};
    }
    for (std::size_t u = 0; u < gin.size(); ++u) {
        const Word y = gin.word(u);
        const std::size_t j = gout.index(Word(y.begin() + 1, y.end()));
        out[j] = mult_add(out[j], d0.values[u]);
    }
    return MultiplicityFunction{sys, dout, std::move(out)};
}

// Detail-space multiplicity from the consistency identity
//   d_{V0}(x) + d_{W0}(x) = sum_{r(y)=x} d_{V0}(y):
// lift a one-level refinement of d0 and subtract d0 at the common depth.
inline MultiplicityFunction detail_multiplicity(const MultiplicityFunction& d0) {
    const MultiplicityFunction lifted = lift_multiplicity(refine_multiplicity(d0, d0.depth + 1));
    const MultiplicityFunction base = refine_multiplicity(d0, lifted.depth);
    std::vector<std::uint64_t> out(lifted.values.size());
    const CylinderGrid g(d0.sys, lifted.depth);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const std::uint64_t hi = lifted.values[i], lo = base.values[i];
        if (hi == kInfiniteMultiplicity && lo == kInfiniteMultiplicity)
            throw std::domain_error("detail_multiplicity: infinity minus infinity at word " +
                                    word_to_string(*d0.sys, g.word(i)));
        if (hi == kInfiniteMultiplicity) {
            out[i] = kInfiniteMultiplicity;
            continue;
        }
        if (lo == kInfiniteMultiplicity || hi < lo)
            throw std::domain_error(
                "detail_multiplicity: negative detail multiplicity at word " +
                word_to_string(*d0.sys, g.word(i)) + " (input is not a valid V0 multiplicity)");
        out[i] = hi - lo;
    }
    return MultiplicityFunction{d0.sys, lifted.depth, std::move(out)};
}

inline std::string multiplicity_to_csv(const MultiplicityFunction& m) {
    const CylinderGrid g(m.sys, m.depth);
    std::string out = "word,value\n";
    for (std::size_t i = 0; i < g.size(); ++i) {
        out += word_to_string(*m.sys, g.word(i));
        out += ',';
        out += m.values[i] == kInfiniteMultiplicity ? "inf" : std::to_string(m.values[i]);
        out += '\n';
    }
    return out;
}

inline MultiplicityFunction multiplicity_from_csv(SystemPtr sys,
                                                  const std::vector<std::string>& lines) {
    int depth = -1;
    std::vector<std::pair<Word, std::uint64_t>> entries;
    for (const auto& line : lines) {
        if (line.rfind("word", 0) == 0) continue;
        const auto cols = split_csv(line);
        if (cols.size() != 2) throw std::invalid_argument("multiplicity csv rows need word,value");
        Word w = word_from_string(*sys, cols[0]);
        if (depth < 0) depth = static_cast<int>(w.size());
        if (static_cast<int>(w.size()) != depth)
            throw std::invalid_argument("multiplicity csv mixes word lengths");
        const std::uint64_t v =
            cols[1] == "inf" ? kInfiniteMultiplicity
                             : static_cast<std::uint64_t>(std::stoull(cols[1]));
        entries.emplace_back(std::move(w), v);
    }
    if (depth < 0) throw std::invalid_argument("multiplicity csv is empty");
    CylinderGrid g(sys, depth);
    std::vector<std::uint64_t> values(g.size(), 0);
    for (auto& [w, v] : entries) values[g.index(w)] = v;
    return MultiplicityFunction{std::move(sys), depth, std::move(values)};
}

}  // namespace dynwave
