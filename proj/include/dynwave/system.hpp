#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "dynwave/common.hpp"
#include "dynwave/polyroot.hpp"

namespace dynwave {

enum class SystemKind { Circle, Cantor, Subshift, Rational };

// Symbol word. Circle maps use digits 0..N-1 (N-adic expansion, most
// significant first), the Cantor map uses digits {0,2} in base 3, subshifts
// use symbols 1..N constrained by the transition matrix. A word stands for
// the point whose expansion starts with it and continues with the canonical
// tail: digit 0 for circle/Cantor, the smallest admissible successor for
// subshifts. This keeps every preimage/shift computation exact.
using Word = std::vector<int>;

struct Point {
    Word word;
    Complex z{0.0, 0.0};
    bool is_word = true;

    static Point from_word(Word w) {
        Point p;
        p.word = std::move(w);
        return p;
    }
    static Point from_complex(Complex c) {
        Point p;
        p.z = c;
        p.is_word = false;
        return p;
    }
};

struct ValidationReport {
    bool valid = true;
    std::vector<std::string> failures;
    bool onto = true;     // subshift: every column of A has an entry 1
    int degree = 0;       // rational maps
    bool coprime = true;  // rational maps: numerator/denominator share no root
};

class SystemSpec {
  public:
    static SystemSpec circle(int n) {
        if (n < 2) throw std::invalid_argument("circle map needs N >= 2");
        SystemSpec s;
        s.kind_ = SystemKind::Circle;
        s.n_ = n;
        return s;
    }

    static SystemSpec cantor() {
        SystemSpec s;
        s.kind_ = SystemKind::Cantor;
        s.n_ = 2;
        return s;
    }

    static SystemSpec subshift(std::vector<std::vector<int>> a) {
        SystemSpec s;
        s.kind_ = SystemKind::Subshift;
        s.n_ = static_cast<int>(a.size());
        if (s.n_ < 1) throw std::invalid_argument("subshift matrix is empty");
        for (const auto& row : a) {
            if (static_cast<int>(row.size()) != s.n_)
                throw std::invalid_argument("subshift matrix is not square");
            for (int v : row)
                if (v != 0 && v != 1)
                    throw std::invalid_argument("subshift matrix entries must be 0 or 1");
        }
        s.adjacency_ = std::move(a);
        return s;
    }

    static SystemSpec rational(std::vector<Complex> p1, std::vector<Complex> p2) {
        SystemSpec s;
        s.kind_ = SystemKind::Rational;
        s.p1_ = std::move(p1);
        s.p2_ = std::move(p2);
        const int d1 = poly_degree(s.p1_);
        const int d2 = poly_degree(s.p2_);
        if (d2 < 0) throw std::invalid_argument("rational map: zero denominator polynomial");
        s.n_ = std::max(d1, d2);
        if (s.n_ < 2) throw std::invalid_argument("rational map needs degree >= 2");
        return s;
    }

    SystemKind kind() const { return kind_; }
    bool symbolic() const { return kind_ != SystemKind::Rational; }
    // Circle and Cantor are full shifts: every digit is an admissible prefix.
    bool full_shift() const { return kind_ == SystemKind::Circle || kind_ == SystemKind::Cantor; }

    int alphabet_size() const { return n_; }

    int digit(int rank) const { return kind_ == SystemKind::Cantor ? 2 * rank : rank + offset(); }

    int rank(int symbol) const {
        if (kind_ == SystemKind::Cantor) {
            if (symbol != 0 && symbol != 2) throw std::invalid_argument("Cantor digit not in {0,2}");
            return symbol / 2;
        }
        const int r = symbol - offset();
        if (r < 0 || r >= n_) throw std::invalid_argument("symbol out of range");
        return r;
    }

    // Base of the numeric expansion (circle: N, Cantor: 3).
    int numeric_base() const { return kind_ == SystemKind::Cantor ? 3 : n_; }

    const std::vector<std::vector<int>>& adjacency() const { return adjacency_; }

    bool admissible(int sym_from, int sym_to) const {
        if (kind_ != SystemKind::Subshift) return true;
        return adjacency_[sym_from - 1][sym_to - 1] == 1;
    }

    const std::vector<Complex>& numerator() const { return p1_; }
    const std::vector<Complex>& denominator() const { return p2_; }
    int degree() const { return n_; }

    bool operator==(const SystemSpec& o) const {
        return kind_ == o.kind_ && n_ == o.n_ && adjacency_ == o.adjacency_ && p1_ == o.p1_ &&
               p2_ == o.p2_;
    }

  private:
    int offset() const { return kind_ == SystemKind::Subshift ? 1 : 0; }

    SystemKind kind_ = SystemKind::Circle;
    int n_ = 2;
    std::vector<std::vector<int>> adjacency_;
    std::vector<Complex> p1_, p2_;
};

using SystemPtr = std::shared_ptr<const SystemSpec>;

inline SystemPtr circle_map(int n) { return std::make_shared<const SystemSpec>(SystemSpec::circle(n)); }
inline SystemPtr cantor_map() { return std::make_shared<const SystemSpec>(SystemSpec::cantor()); }
inline SystemPtr subshift_map(std::vector<std::vector<int>> a) {
    return std::make_shared<const SystemSpec>(SystemSpec::subshift(std::move(a)));
}
inline SystemPtr rational_map(std::vector<Complex> p1, std::vector<Complex> p2) {
    return std::make_shared<const SystemSpec>(SystemSpec::rational(std::move(p1), std::move(p2)));
}

inline constexpr double kRootTol = 1e-10;
inline constexpr double kRootDedupTol = 1e-8;

namespace detail {

inline int column_count(const std::vector<std::vector<int>>& a, int col /*0-based*/) {
    int c = 0;
    for (const auto& row : a) c += row[col];
    return c;
}

}  // namespace detail

inline bool is_valid_word(const SystemSpec& sys, const Word& w) {
    switch (sys.kind()) {
        case SystemKind::Circle:
            for (int d : w)
                if (d < 0 || d >= sys.alphabet_size()) return false;
            return true;
        case SystemKind::Cantor:
            for (int d : w)
                if (d != 0 && d != 2) return false;
            return true;
        case SystemKind::Subshift: {
            if (w.empty()) return false;
            for (int s : w)
                if (s < 1 || s > sys.alphabet_size()) return false;
            for (std::size_t i = 0; i + 1 < w.size(); ++i)
                if (!sys.admissible(w[i], w[i + 1])) return false;
            return true;
        }
        case SystemKind::Rational:
            return false;
    }
    return false;
}

inline void require_valid_point(const SystemSpec& sys, const Point& p) {
    if (sys.symbolic()) {
        if (!p.is_word || !is_valid_word(sys, p.word))
            throw std::invalid_argument("point is not a valid word for this system");
    } else {
        if (p.is_word) throw std::invalid_argument("rational maps take complex points");
    }
}

// Smallest admissible successor of a symbol; defines the canonical tail.
inline int tail_successor(const SystemSpec& sys, int symbol) {
    if (sys.kind() != SystemKind::Subshift) return sys.digit(0);
    for (int t = 1; t <= sys.alphabet_size(); ++t)
        if (sys.admissible(symbol, t)) return t;
    throw std::invalid_argument("subshift symbol " + std::to_string(symbol) +
                                " has no admissible successor");
}

inline Word canonical_extend(const SystemSpec& sys, Word w, std::size_t len) {
    if (sys.kind() == SystemKind::Subshift && w.empty())
        throw std::invalid_argument("empty subshift word");
    while (w.size() < len)
        w.push_back(sys.full_shift() ? sys.digit(0) : tail_successor(sys, w.back()));
    return w;
}

// Numeric value of a digit word (circle / Cantor only).
inline double word_value(const SystemSpec& sys, const Word& w) {
    if (!sys.full_shift()) throw std::invalid_argument("word_value needs a circle/Cantor system");
    const double base = sys.numeric_base();
    double v = 0.0;
    for (std::size_t i = w.size(); i-- > 0;) v = (v + w[i]) / base;
    return v;
}

inline std::string word_to_string(const SystemSpec& sys, const Word& w) {
    std::string s;
    const bool compact = sys.numeric_base() <= 10;
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (!compact && i > 0) s.push_back('.');
        s += std::to_string(w[i]);
    }
    return s;
}

inline Word word_from_string(const SystemSpec& sys, const std::string& s) {
    Word w;
    if (sys.numeric_base() <= 10) {
        for (char c : s) {
            if (c < '0' || c > '9') throw std::invalid_argument("bad word string: " + s);
            w.push_back(c - '0');
        }
    } else {
        std::size_t pos = 0;
        while (pos < s.size()) {
            std::size_t dot = s.find('.', pos);
            if (dot == std::string::npos) dot = s.size();
            w.push_back(std::stoi(s.substr(pos, dot - pos)));
            pos = dot + 1;
        }
    }
    if (!is_valid_word(sys, w)) throw std::invalid_argument("inadmissible word: " + s);
    return w;
}

inline Complex rational_apply(const SystemSpec& sys, Complex z) {
    const Complex num = poly_eval(sys.numerator(), z);
    const Complex den = poly_eval(sys.denominator(), z);
    if (std::abs(den) == 0.0) {
        throw std::domain_error(std::abs(num) == 0.0
                                    ? "rational map indeterminate (0/0) at the given point"
                                    : "rational map has a pole at the given point");
    }
    return num / den;
}

// Forward map r. Words shift left; a word shrinking to nothing is first
// extended by its canonical tail so subshift points stay nonempty.
inline Point apply(const SystemSpec& sys, const Point& p) {
    require_valid_point(sys, p);
    if (!sys.symbolic()) return Point::from_complex(rational_apply(sys, p.z));
    Word w = p.word;
    if (w.empty()) return Point::from_word({});  // circle/Cantor fixed point 0
    if (w.size() == 1 && sys.kind() == SystemKind::Subshift)
        w = canonical_extend(sys, std::move(w), 2);
    return Point::from_word(Word(w.begin() + 1, w.end()));
}

inline std::vector<Point> preimages(const SystemSpec& sys, const Point& p) {
    require_valid_point(sys, p);
    std::vector<Point> out;
    if (sys.symbolic()) {
        for (int r = 0; r < sys.alphabet_size(); ++r) {
            const int d = sys.digit(r);
            if (sys.kind() == SystemKind::Subshift && !sys.admissible(d, p.word.front()))
                continue;
            Word w;
            w.reserve(p.word.size() + 1);
            w.push_back(d);
            w.insert(w.end(), p.word.begin(), p.word.end());
            out.push_back(Point::from_word(std::move(w)));
        }
        return out;
    }

    // Solve p1(y) - x*p2(y) = 0.
    const auto& p1 = sys.numerator();
    const auto& p2 = sys.denominator();
    std::vector<Complex> q(std::max(p1.size(), p2.size()), Complex{0.0, 0.0});
    for (std::size_t i = 0; i < p1.size(); ++i) q[i] += p1[i];
    for (std::size_t i = 0; i < p2.size(); ++i) q[i] -= p.z * p2[i];
    std::vector<Complex> roots = poly_roots(q, kRootTol, 200);

    // Collapse multiple roots at critical values.
    std::vector<Complex> uniq;
    for (const auto& y : roots) {
        bool dup = false;
        for (const auto& u : uniq)
            if (std::abs(y - u) <= kRootDedupTol) {
                dup = true;
                break;
            }
        if (!dup) uniq.push_back(y);
    }

    std::vector<double> residuals;
    for (const auto& y : uniq) {
        const double res = std::abs(rational_apply(sys, y) - p.z);
        residuals.push_back(res);
        out.push_back(Point::from_complex(y));
    }
    for (double r : residuals)
        if (!(r <= kRootTol))
            throw RootSolveError("preimage root failed the residual check", residuals);
    return out;
}

inline int branch_count(const SystemSpec& sys, const Point& p) {
    switch (sys.kind()) {
        case SystemKind::Circle:
            return sys.alphabet_size();
        case SystemKind::Cantor:
            return 2;
        case SystemKind::Subshift: {
            require_valid_point(sys, p);
            return detail::column_count(sys.adjacency(), p.word.front() - 1);
        }
        case SystemKind::Rational:
            return static_cast<int>(preimages(sys, p).size());
    }
    return 0;
}

// Preimage count as a function of the first symbol (subshift; full shifts are
// constant). Used where branch counts enter cylinder computations.
inline int branch_count_of_symbol(const SystemSpec& sys, int symbol) {
    if (sys.kind() != SystemKind::Subshift) return sys.alphabet_size();
    return detail::column_count(sys.adjacency(), symbol - 1);
}

inline ValidationReport validate_system(const SystemSpec& sys) {
    ValidationReport rep;
    switch (sys.kind()) {
        case SystemKind::Circle:
        case SystemKind::Cantor:
            break;
        case SystemKind::Subshift: {
            for (int j = 0; j < sys.alphabet_size(); ++j) {
                if (detail::column_count(sys.adjacency(), j) == 0) {
                    rep.onto = false;
                    rep.valid = false;
                    rep.failures.push_back("column " + std::to_string(j + 1) +
                                           " of the transition matrix has no entry 1; the shift "
                                           "is not onto");
                }
            }
            break;
        }
        case SystemKind::Rational: {
            rep.degree = sys.degree();
            // Common root check: evaluate each polynomial on the roots of the
            // other (lower-degree side first keeps the work minimal).
            const auto check = [&](const std::vector<Complex>& roots_of,
                                   const std::vector<Complex>& other) {
                if (poly_degree(roots_of) < 1) return true;
                double scale = 0.0;
                for (const auto& c : other) scale = std::max(scale, std::abs(c));
                for (const auto& z : poly_roots(roots_of))
                    if (std::abs(poly_eval(other, z)) <= 1e-8 * std::max(1.0, scale)) return false;
                return true;
            };
            rep.coprime = check(sys.denominator(), sys.numerator()) &&
                          check(sys.numerator(), sys.denominator());
            if (!rep.coprime) {
                rep.valid = false;
                rep.failures.push_back("numerator and denominator share a root");
            }
            break;
        }
    }
    return rep;
}

// Default cylinder depth: ~1k-4k cells for the bundled alphabets.
inline int default_depth(const SystemSpec& sys) {
    const int b = sys.alphabet_size();
    if (!sys.symbolic()) throw std::invalid_argument("default_depth needs a symbolic system");
    if (sys.kind() != SystemKind::Subshift) return b == 2 ? 10 : b == 3 ? 7 : std::max(2, static_cast<int>(std::log(4096.0) / std::log(double(b))));
    // Subshift: deepest level whose admissible-word count stays <= 4096.
    std::vector<std::size_t> cnt(b, 1);
    int depth = 1;
    for (; depth < 16; ++depth) {
        std::vector<std::size_t> nxt(b, 0);
        std::size_t total = 0;
        for (int s = 0; s < b; ++s)
            for (int t = 0; t < b; ++t)
                if (sys.adjacency()[s][t] == 1) nxt[s] += cnt[t];
        for (int s = 0; s < b; ++s) total += nxt[s];
        if (total > 4096) break;
        cnt = nxt;
    }
    return depth;
}

}  // namespace dynwave
