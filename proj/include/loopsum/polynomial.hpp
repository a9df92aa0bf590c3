#pragma once

// Sparse multivariate polynomials with exact rational coefficients.

#include "loopsum/linarith.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace loopsum {

/// Exponent vector: variable -> positive power, ordered by variable name.
using Monomial = std::map<Var, unsigned>;

inline unsigned total_degree(const Monomial &m) {
    unsigned d = 0;
    for (auto &[v, e] : m) d += e;
    return d;
}

/// Graded lexicographic order: higher total degree first, then
/// lexicographic on (variable, exponent) pairs.
struct GrlexGreater {
    bool operator()(const Monomial &a, const Monomial &b) const {
        unsigned da = total_degree(a), db = total_degree(b);
        if (da != db) return da > db;
        auto ia = a.begin(), ib = b.begin();
        for (; ia != a.end() && ib != b.end(); ++ia, ++ib) {
            if (ia->first != ib->first) return ia->first < ib->first;
            if (ia->second != ib->second) return ia->second > ib->second;
        }
        return ia != a.end() && ib == b.end();
    }
};

class Polynomial {
public:
    using Terms = std::map<Monomial, Rational, GrlexGreater>;

    Polynomial() = default;
    Polynomial(Rational c) { // NOLINT: implicit constants read naturally
        if (c != 0) terms_[{}] = std::move(c);
    }
    Polynomial(int c) : Polynomial(Rational(c)) {} // NOLINT
    static Polynomial var(const Var &v) {
        Polynomial p;
        p.terms_[{{v, 1}}] = 1;
        return p;
    }
    static Polynomial from_lin(const lin::LinTerm &t) {
        Polynomial p(t.constant());
        for (auto &[v, c] : t.coeffs()) p.add_term({{v, 1}}, c);
        return p;
    }

    const Terms &terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }
    bool is_constant() const { return terms_.empty() || (terms_.size() == 1 && terms_.begin()->first.empty()); }
    Rational constant_term() const {
        auto it = terms_.find({});
        return it == terms_.end() ? Rational(0) : it->second;
    }

    unsigned total_degree() const {
        unsigned d = 0;
        for (auto &[m, c] : terms_) d = std::max(d, loopsum::total_degree(m));
        return d;
    }
    unsigned degree(const Var &v) const {
        unsigned d = 0;
        for (auto &[m, c] : terms_) {
            auto it = m.find(v);
            if (it != m.end()) d = std::max(d, it->second);
        }
        return d;
    }
    VarSet vars() const {
        VarSet s;
        for (auto &[m, c] : terms_)
            for (auto &[v, e] : m) s.insert(v);
        return s;
    }
    bool has(const Var &v) const { return degree(v) > 0; }

    void add_term(const Monomial &m, const Rational &c) {
        if (c == 0) return;
        auto [it, inserted] = terms_.emplace(m, c);
        if (!inserted) {
            it->second += c;
            if (it->second == 0) terms_.erase(it);
        }
    }

    Polynomial &operator+=(const Polynomial &o) {
        for (auto &[m, c] : o.terms_) add_term(m, c);
        return *this;
    }
    Polynomial &operator-=(const Polynomial &o) {
        for (auto &[m, c] : o.terms_) add_term(m, -c);
        return *this;
    }
    friend Polynomial operator+(Polynomial a, const Polynomial &b) { return a += b; }
    friend Polynomial operator-(Polynomial a, const Polynomial &b) { return a -= b; }
    Polynomial operator-() const {
        Polynomial r;
        for (auto &[m, c] : terms_) r.terms_[m] = -c;
        return r;
    }
    friend Polynomial operator*(const Polynomial &a, const Polynomial &b) {
        Polynomial r;
        for (auto &[ma, ca] : a.terms_)
            for (auto &[mb, cb] : b.terms_) {
                Monomial m = ma;
                for (auto &[v, e] : mb) m[v] += e;
                r.add_term(m, ca * cb);
            }
        return r;
    }
    Polynomial &operator*=(const Polynomial &o) { return *this = *this * o; }

    Polynomial pow(unsigned n) const {
        Polynomial r(1), base = *this;
        while (n) {
            if (n & 1) r *= base;
            n >>= 1;
            if (n) base *= base;
        }
        return r;
    }

    friend bool operator==(const Polynomial &a, const Polynomial &b) { return a.terms_ == b.terms_; }
    friend bool operator!=(const Polynomial &a, const Polynomial &b) { return !(a == b); }

    /// Replaces every occurrence of v by p.
    Polynomial substitute(const Var &v, const Polynomial &p) const {
        if (!has(v)) return *this;
        Polynomial r;
        std::map<unsigned, Polynomial> powers;
        for (auto &[m, c] : terms_) {
            auto it = m.find(v);
            if (it == m.end()) {
                r.add_term(m, c);
                continue;
            }
            unsigned e = it->second;
            auto pw = powers.find(e);
            if (pw == powers.end()) pw = powers.emplace(e, p.pow(e)).first;
            Monomial rest = m;
            rest.erase(v);
            Polynomial t;
            t.terms_[rest] = c;
            r += t * pw->second;
        }
        return r;
    }
    /// Simultaneous substitution.
    Polynomial substitute(const std::map<Var, Polynomial> &s) const {
        Polynomial r;
        for (auto &[m, c] : terms_) {
            Polynomial t(c);
            for (auto &[v, e] : m) {
                auto it = s.find(v);
                t *= it == s.end() ? var(v).pow(e) : it->second.pow(e);
            }
            r += t;
        }
        return r;
    }
    Polynomial rename(const std::map<Var, Var> &m) const {
        std::map<Var, Polynomial> s;
        for (auto &[a, b] : m) s[a] = var(b);
        return substitute(s);
    }

    /// Evaluates; every variable must be assigned.
    Rational evaluate(const std::map<Var, Rational> &env) const {
        Rational r = 0;
        for (auto &[m, c] : terms_) {
            Rational t = c;
            for (auto &[v, e] : m) {
                auto it = env.find(v);
                if (it == env.end()) throw Error("polynomial", "unassigned variable '" + v + "'");
                for (unsigned i = 0; i < e; ++i) t *= it->second;
            }
            r += t;
        }
        return r;
    }
    Polynomial partial_eval(const std::map<Var, Rational> &env) const {
        std::map<Var, Polynomial> s;
        for (auto &[v, q] : env) s[v] = Polynomial(q);
        return substitute(s);
    }

    /// Coefficients of the powers of v: result[i] is the coefficient of v^i.
    std::vector<Polynomial> coefficients_in(const Var &v) const {
        std::vector<Polynomial> out(degree(v) + 1);
        for (auto &[m, c] : terms_) {
            Monomial rest = m;
            unsigned e = 0;
            if (auto it = rest.find(v); it != rest.end()) {
                e = it->second;
                rest.erase(it);
            }
            out[e].add_term(rest, c);
        }
        return out;
    }

    std::optional<lin::LinTerm> as_linear() const {
        lin::LinTerm t;
        for (auto &[m, c] : terms_) {
            unsigned d = loopsum::total_degree(m);
            if (d == 0)
                t.add_constant(c);
            else if (d == 1)
                t.add(m.begin()->first, c);
            else
                return std::nullopt;
        }
        return t;
    }

    /// Graded order, constant last.
    std::string to_string() const { return to_string(Var{}); }

    /// With a lead variable: lead-free terms first, then by descending
    /// degree in `lead`, constant last. `lead` is printed first in each
    /// monomial. Matches the usual way closed forms in a counter are read.
    std::string to_string(const Var &lead) const {
        if (terms_.empty()) return "0";
        std::vector<std::pair<Monomial, Rational>> ts(terms_.begin(), terms_.end());
        if (!lead.empty()) {
            auto key = [&](const Monomial &m) {
                auto it = m.find(lead);
                unsigned d = it == m.end() ? 0 : it->second;
                int group = m.empty() ? 2 : d == 0 ? 0 : 1;
                return std::pair<int, int>(group, -static_cast<int>(d));
            };
            std::stable_sort(ts.begin(), ts.end(), [&](auto &a, auto &b) { return key(a.first) < key(b.first); });
        }
        std::string out;
        for (auto &[m, c] : ts) {
            Rational a = abs(c);
            if (out.empty())
                out += c < 0 ? "-" : "";
            else
                out += c < 0 ? " - " : " + ";
            std::string mono;
            auto put = [&](const Var &v, unsigned e) {
                if (!mono.empty()) mono += "*";
                mono += v;
                if (e > 1) mono += "^" + std::to_string(e);
            };
            if (auto it = m.find(lead); !lead.empty() && it != m.end()) put(lead, it->second);
            for (auto &[v, e] : m)
                if (v != lead) put(v, e);
            if (mono.empty())
                out += loopsum::to_string(a);
            else if (a == 1)
                out += mono;
            else
                out += loopsum::to_string(a) + "*" + mono;
        }
        return out;
    }

private:
    Terms terms_;
};

/// `var = poly` with a polynomial right-hand side.
struct PolyDef {
    Var var;
    Polynomial rhs;
    friend bool operator==(const PolyDef &a, const PolyDef &b) { return a.var == b.var && a.rhs == b.rhs; }
};

/// Solves linear equalities and polynomial definitions for as many
/// variables as possible in terms of `known`. A linear equality resolves
/// its single unresolved variable; a definition resolves its variable once
/// its right-hand side is fully resolved.
inline std::map<Var, Polynomial> resolve_definitions(const lin::ConstraintStore &store,
                                                     const std::vector<PolyDef> &defs,
                                                     const VarSet &known) {
    std::map<Var, Polynomial> res;
    auto is_resolved = [&](const Var &v) { return known.count(v) || res.count(v); };
    auto value = [&](const Var &v) { return known.count(v) ? Polynomial::var(v) : res.at(v); };
    bool changed = true;
    while (changed) {
        changed = false;
        for (auto &d : defs) {
            if (is_resolved(d.var)) continue;
            VarSet vs = d.rhs.vars();
            if (!std::all_of(vs.begin(), vs.end(), is_resolved)) continue;
            std::map<Var, Polynomial> s;
            for (auto &v : vs) s[v] = value(v);
            res[d.var] = d.rhs.substitute(s);
            changed = true;
        }
        for (auto &c : store) {
            if (c.rel != lin::Rel::Eq) continue;
            std::optional<Var> open;
            int n_open = 0;
            for (auto &[v, a] : c.lhs.coeffs())
                if (!is_resolved(v)) {
                    open = v;
                    ++n_open;
                }
            if (n_open != 1) continue;
            Rational a = c.lhs.coeff(*open);
            Polynomial rest(c.lhs.constant());
            for (auto &[v, k] : c.lhs.coeffs())
                if (v != *open) rest += Polynomial(k) * value(v);
            res[*open] = rest * Polynomial(Rational(-1) / a);
            changed = true;
        }
    }
    return res;
}

/// Power sum sum_{j=1}^{n} j^m as a polynomial in n.
inline Polynomial power_sum(unsigned m, const Var &n) {
    static std::map<unsigned, Polynomial> cache; // keyed on m, in variable "n"
    const Var nv = "n";
    std::function<Polynomial(unsigned)> s = [&](unsigned d) -> Polynomial {
        if (auto it = cache.find(d); it != cache.end()) return it->second;
        // (n+1)^{d+1} - 1 = sum_{i=0}^{d} C(d+1, i) S_i(n)
        Polynomial acc = (Polynomial::var(nv) + Polynomial(1)).pow(d + 1) - Polynomial(1);
        Rational binom = 1;
        for (unsigned i = 0; i < d; ++i) {
            acc -= Polynomial(binom) * s(i);
            binom = binom * (d + 1 - i) / (i + 1);
        }
        Polynomial r = acc * Polynomial(Rational(1, d + 1));
        cache[d] = r;
        return r;
    };
    return s(m).substitute(nv, Polynomial::var(n));
}

/// sum_{j=1}^{v} p[v := j], where other variables are treated as constants.
inline Polynomial sum_poly(const Polynomial &p, const Var &v) {
    auto cs = p.coefficients_in(v);
    const Var tmp = "#n";
    Polynomial r;
    for (unsigned i = 0; i < cs.size(); ++i)
        if (!cs[i].is_zero()) r += cs[i] * power_sum(i, tmp);
    return r.substitute(tmp, Polynomial::var(v));
}

/// Parses `1/2*k^2 - k*(X + 1)`: integers, +, -, *, division by a
/// constant, natural powers, parentheses and identifiers.
inline Polynomial parse_polynomial(const std::string &text) {
    std::size_t i = 0;
    auto ws = [&] {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    };
    auto fail = [&](const std::string &m) -> Polynomial {
        throw Error("parse", m + " at offset " + std::to_string(i) + " in '" + text + "'");
    };
    std::function<Polynomial()> sum, product, power, atom;
    atom = [&]() -> Polynomial {
        ws();
        if (i >= text.size()) return fail("unexpected end");
        char c = text[i];
        if (c == '(') {
            ++i;
            Polynomial p = sum();
            ws();
            if (i >= text.size() || text[i] != ')') return fail("expected ')'");
            ++i;
            return p;
        }
        if (c == '-') {
            ++i;
            return Polynomial(-1) * power();
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            std::size_t j = i;
            while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
            Rational r = parse_rational(text.substr(i, j - i));
            i = j;
            return Polynomial(r);
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '#' || c == '@') {
            std::size_t j = i + 1;
            while (j < text.size() && (std::isalnum(static_cast<unsigned char>(text[j])) || text[j] == '_')) ++j;
            Var v = text.substr(i, j - i);
            i = j;
            return Polynomial::var(v);
        }
        return fail(std::string("unexpected '") + c + "'");
    };
    power = [&]() -> Polynomial {
        Polynomial b = atom();
        ws();
        if (i < text.size() && text[i] == '^') {
            ++i;
            ws();
            std::size_t j = i;
            while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
            if (j == i) return fail("expected exponent");
            unsigned e = static_cast<unsigned>(std::stoul(text.substr(i, j - i)));
            i = j;
            return b.pow(e);
        }
        return b;
    };
    product = [&]() -> Polynomial {
        Polynomial p = power();
        for (;;) {
            ws();
            if (i < text.size() && text[i] == '*') {
                ++i;
                p = p * power();
            } else if (i < text.size() && text[i] == '/') {
                ++i;
                Polynomial d = power();
                if (!d.is_constant() || d.constant_term() == 0) return fail("division by a non-constant");
                p = p * Polynomial(Rational(1) / d.constant_term());
            } else {
                return p;
            }
        }
    };
    sum = [&]() -> Polynomial {
        Polynomial p = product();
        for (;;) {
            ws();
            if (i < text.size() && text[i] == '+') {
                ++i;
                p += product();
            } else if (i < text.size() && text[i] == '-') {
                ++i;
                p -= product();
            } else {
                return p;
            }
        }
    };
    Polynomial p = sum();
    ws();
    if (i != text.size()) return fail("trailing input");
    return p;
}

} // namespace loopsum
