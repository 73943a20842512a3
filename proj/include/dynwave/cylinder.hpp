#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "dynwave/io.hpp"
#include "dynwave/system.hpp"

namespace dynwave {

inline constexpr std::size_t kMaxCells = std::size_t{1} << 26;

// Indexed enumeration of the admissible words of a fixed length. Full shifts
// use pure index arithmetic (most significant digit first, so lexicographic
// order matches the numeric order of the N-adic intervals); subshifts carry
// an explicit lexicographic table.
class CylinderGrid {
  public:
    CylinderGrid(SystemPtr sys, int depth) : sys_(std::move(sys)), depth_(depth) {
        if (!sys_ || !sys_->symbolic())
            throw std::invalid_argument("cylinder grid needs a symbolic system");
        if (depth < 0) throw std::invalid_argument("negative depth");
        const std::size_t b = static_cast<std::size_t>(sys_->alphabet_size());
        if (sys_->full_shift()) {
            std::size_t n = 1;
            for (int i = 0; i < depth; ++i) {
                if (n > kMaxCells / b) throw std::invalid_argument("cylinder depth too large");
                n *= b;
            }
            size_ = n;
            return;
        }
        // Subshift: depth-first enumeration in symbol order.
        if (depth == 0) {
            size_ = 1;
            return;
        }
        Word w;
        enumerate(w);
        size_ = words_.size();
        index_.reserve(size_ * 2);
        for (std::size_t i = 0; i < size_; ++i) index_.emplace(pack(words_[i]), i);
    }

    const SystemPtr& system() const { return sys_; }
    int depth() const { return depth_; }
    std::size_t size() const { return size_; }

    Word word(std::size_t i) const {
        Word w(static_cast<std::size_t>(depth_));
        if (sys_->full_shift()) {
            const std::size_t b = static_cast<std::size_t>(sys_->alphabet_size());
            for (int k = depth_ - 1; k >= 0; --k) {
                w[static_cast<std::size_t>(k)] = sys_->digit(static_cast<int>(i % b));
                i /= b;
            }
            return w;
        }
        return depth_ == 0 ? Word{} : words_[i];
    }

    // Index of the length-`depth` prefix; the word may be longer.
    std::size_t prefix_index(const Word& w) const {
        if (static_cast<int>(w.size()) < depth_)
            throw std::invalid_argument("word shorter than grid depth");
        if (sys_->full_shift()) {
            const std::size_t b = static_cast<std::size_t>(sys_->alphabet_size());
            std::size_t idx = 0;
            for (int k = 0; k < depth_; ++k)
                idx = idx * b + static_cast<std::size_t>(sys_->rank(w[static_cast<std::size_t>(k)]));
            return idx;
        }
        if (depth_ == 0) return 0;
        const auto it = index_.find(pack_prefix(w));
        if (it == index_.end()) throw std::invalid_argument("word not admissible for this grid");
        return it->second;
    }

    std::size_t index(const Word& w) const {
        if (static_cast<int>(w.size()) != depth_)
            throw std::invalid_argument("word length does not match grid depth");
        return prefix_index(w);
    }

  private:
    void enumerate(Word& w) {
        if (static_cast<int>(w.size()) == depth_) {
            if (words_.size() >= kMaxCells) throw std::invalid_argument("cylinder depth too large");
            words_.push_back(w);
            return;
        }
        for (int s = 1; s <= sys_->alphabet_size(); ++s) {
            if (!w.empty() && !sys_->admissible(w.back(), s)) continue;
            w.push_back(s);
            enumerate(w);
            w.pop_back();
        }
    }

    std::uint64_t pack(const Word& w) const { return pack_prefix(w); }

    std::uint64_t pack_prefix(const Word& w) const {
        const std::uint64_t b = static_cast<std::uint64_t>(sys_->alphabet_size()) + 1;
        std::uint64_t key = 0;
        for (int k = 0; k < depth_; ++k) {
            if (key > (~std::uint64_t{0}) / b) throw std::invalid_argument("word too long to pack");
            key = key * b + static_cast<std::uint64_t>(w[static_cast<std::size_t>(k)]);
        }
        return key;
    }

    SystemPtr sys_;
    int depth_ = 0;
    std::size_t size_ = 1;
    std::vector<Word> words_;
    std::unordered_map<std::uint64_t, std::size_t> index_;
};

// Piecewise-constant complex function on the depth-d cylinder partition.
class CylinderFunction {
  public:
    CylinderFunction() = default;

    CylinderFunction(SystemPtr sys, int depth, std::vector<Complex> values)
        : sys_(std::move(sys)), depth_(depth), values_(std::move(values)) {
        const CylinderGrid g(sys_, depth_);
        if (values_.size() != g.size())
            throw std::invalid_argument("value count does not match the cylinder count");
    }

    static CylinderFunction constant(SystemPtr sys, int depth, Complex v) {
        CylinderGrid g(sys, depth);
        return CylinderFunction(std::move(sys), depth, std::vector<Complex>(g.size(), v));
    }

    // Indicator of the cylinder [w]; depth = |w|.
    static CylinderFunction indicator(SystemPtr sys, const Word& w) {
        CylinderGrid g(sys, static_cast<int>(w.size()));
        std::vector<Complex> v(g.size(), Complex{0.0, 0.0});
        v[g.index(w)] = Complex{1.0, 0.0};
        return CylinderFunction(std::move(sys), static_cast<int>(w.size()), std::move(v));
    }

    static CylinderFunction from_samples(SystemPtr sys, int depth,
                                         const std::function<Complex(const Word&)>& f) {
        CylinderGrid g(sys, depth);
        std::vector<Complex> v(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) v[i] = f(g.word(i));
        return CylinderFunction(std::move(sys), depth, std::move(v));
    }

    const SystemPtr& system() const { return sys_; }
    int depth() const { return depth_; }
    std::size_t size() const { return values_.size(); }
    const std::vector<Complex>& values() const { return values_; }
    std::vector<Complex>& values() { return values_; }

    Complex value_at(const Point& p) const {
        require_valid_point(*sys_, p);
        Word w = p.word;
        if (static_cast<int>(w.size()) < depth_)
            w = canonical_extend(*sys_, std::move(w), static_cast<std::size_t>(depth_));
        return values_[CylinderGrid(sys_, depth_).prefix_index(w)];
    }

    bool empty() const { return !sys_; }

  private:
    SystemPtr sys_;
    int depth_ = 0;
    std::vector<Complex> values_;
};

namespace detail {

inline void require_same_system(const CylinderFunction& a, const CylinderFunction& b) {
    if (!(*a.system() == *b.system()))
        throw std::invalid_argument("cylinder functions live on different systems");
}

}  // namespace detail

// Exact inclusion into a finer partition: the value on a word is the value on
// its prefix. Pointwise this is the identity.
inline CylinderFunction refine(const CylinderFunction& f, int depth) {
    if (depth < f.depth()) throw std::invalid_argument("refine: target depth is coarser");
    if (depth == f.depth()) return f;
    const SystemPtr& sys = f.system();
    if (sys->full_shift()) {
        std::size_t block = 1;
        for (int i = 0; i < depth - f.depth(); ++i) block *= static_cast<std::size_t>(sys->alphabet_size());
        std::vector<Complex> v(f.size() * block);
        for (std::size_t i = 0; i < f.size(); ++i)
            std::fill(v.begin() + static_cast<std::ptrdiff_t>(i * block),
                      v.begin() + static_cast<std::ptrdiff_t>((i + 1) * block), f.values()[i]);
        return CylinderFunction(sys, depth, std::move(v));
    }
    CylinderGrid fine(sys, depth), coarse(sys, f.depth());
    std::vector<Complex> v(fine.size());
    for (std::size_t i = 0; i < fine.size(); ++i)
        v[i] = f.values()[coarse.prefix_index(fine.word(i))];
    return CylinderFunction(sys, depth, std::move(v));
}

// g(x) = f(r(x)): one level deeper, value on w is the value on the shifted word.
inline CylinderFunction compose_with_r(const CylinderFunction& f) {
    const SystemPtr& sys = f.system();
    const int depth = f.depth() + 1;
    CylinderGrid fine(sys, depth);
    std::vector<Complex> v(fine.size());
    if (sys->full_shift()) {
        const std::size_t block = f.size();  // b^(depth-1)
        for (std::size_t i = 0; i < fine.size(); ++i) v[i] = f.values()[i % block];
        return CylinderFunction(sys, depth, std::move(v));
    }
    CylinderGrid coarse(sys, f.depth());
    for (std::size_t i = 0; i < fine.size(); ++i) {
        Word w = fine.word(i);
        v[i] = f.values()[coarse.index(Word(w.begin() + 1, w.end()))];
    }
    return CylinderFunction(sys, depth, std::move(v));
}

template <typename Op>
inline CylinderFunction zip(const CylinderFunction& a, const CylinderFunction& b, Op op) {
    detail::require_same_system(a, b);
    const int d = std::max(a.depth(), b.depth());
    const CylinderFunction fa = refine(a, d), fb = refine(b, d);
    std::vector<Complex> v(fa.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = op(fa.values()[i], fb.values()[i]);
    return CylinderFunction(a.system(), d, std::move(v));
}

inline CylinderFunction multiply(const CylinderFunction& a, const CylinderFunction& b) {
    return zip(a, b, [](Complex x, Complex y) { return x * y; });
}

inline CylinderFunction add(const CylinderFunction& a, const CylinderFunction& b) {
    return zip(a, b, [](Complex x, Complex y) { return x + y; });
}

inline CylinderFunction subtract(const CylinderFunction& a, const CylinderFunction& b) {
    return zip(a, b, [](Complex x, Complex y) { return x - y; });
}

inline CylinderFunction scale(const CylinderFunction& f, Complex c) {
    std::vector<Complex> v = f.values();
    for (auto& x : v) x *= c;
    return CylinderFunction(f.system(), f.depth(), std::move(v));
}

inline CylinderFunction conjugate(const CylinderFunction& f) {
    std::vector<Complex> v = f.values();
    for (auto& x : v) x = std::conj(x);
    return CylinderFunction(f.system(), f.depth(), std::move(v));
}

inline CylinderFunction abs_squared(const CylinderFunction& f) {
    std::vector<Complex> v = f.values();
    for (auto& x : v) x = Complex{std::norm(x), 0.0};
    return CylinderFunction(f.system(), f.depth(), std::move(v));
}

inline double sup_norm(const CylinderFunction& f) {
    double m = 0.0;
    for (const auto& x : f.values()) m = std::max(m, std::abs(x));
    return m;
}

inline double sup_diff(const CylinderFunction& a, const CylinderFunction& b) {
    return sup_norm(subtract(a, b));
}

// Elementwise a/b with a guard against vanishing denominators.
inline CylinderFunction divide(const CylinderFunction& a, const CylinderFunction& b,
                               double min_abs = 1e-14) {
    return zip(a, b, [min_abs](Complex x, Complex y) {
        if (std::abs(y) < min_abs)
            throw std::domain_error("division by a (near-)zero cylinder value");
        return x / y;
    });
}

inline std::string cylinder_to_csv(const CylinderFunction& f) {
    const CylinderGrid g(f.system(), f.depth());
    std::string out = "word,re,im\n";
    for (std::size_t i = 0; i < g.size(); ++i) {
        out += word_to_string(*f.system(), g.word(i));
        out += ',';
        out += format_double(f.values()[i].real());
        out += ',';
        out += format_double(f.values()[i].imag());
        out += '\n';
    }
    return out;
}

inline CylinderFunction cylinder_from_csv(SystemPtr sys, const std::vector<std::string>& lines) {
    int depth = -1;
    std::vector<std::pair<Word, Complex>> entries;
    for (const auto& line : lines) {
        if (line.rfind("word", 0) == 0) continue;  // header
        const auto cols = split_csv(line);
        if (cols.size() != 3) throw std::invalid_argument("cylinder csv rows need word,re,im");
        Word w = word_from_string(*sys, cols[0]);
        if (depth < 0) depth = static_cast<int>(w.size());
        if (static_cast<int>(w.size()) != depth)
            throw std::invalid_argument("cylinder csv mixes word lengths");
        entries.emplace_back(std::move(w), Complex{parse_double(cols[1]), parse_double(cols[2])});
    }
    if (depth < 0) throw std::invalid_argument("cylinder csv is empty");
    CylinderGrid g(sys, depth);
    std::vector<Complex> v(g.size(), Complex{0.0, 0.0});
    std::vector<bool> seen(g.size(), false);
    for (auto& [w, c] : entries) {
        const std::size_t i = g.index(w);
        v[i] = c;
        seen[i] = true;
    }
    for (bool s : seen)
        if (!s) throw std::invalid_argument("cylinder csv is missing admissible words");
    return CylinderFunction(std::move(sys), depth, std::move(v));
}

// Point-cloud function for rational-map systems.
struct SampledFunction {
    std::function<Complex(Complex)> eval;
};

}  // namespace dynwave
