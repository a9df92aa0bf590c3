#pragma once

// Exact linear arithmetic over the rationals: satisfiability, entailment,
// projection and bound extraction by Fourier-Motzkin elimination.

#include "loopsum/rational.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace loopsum::lin {

using Var = std::string;
using VarSet = std::set<Var>;

/// Linear expression sum(coeff * var) + constant. Zero coefficients are
/// never stored, so structural equality is semantic equality.
class LinTerm {
public:
    LinTerm() = default;
    explicit LinTerm(Rational c) : constant_(std::move(c)) {}
    static LinTerm var(const Var &v, Rational c = 1) {
        LinTerm t;
        t.add(v, c);
        return t;
    }

    const std::map<Var, Rational> &coeffs() const { return coeffs_; }
    const Rational &constant() const { return constant_; }

    Rational coeff(const Var &v) const {
        auto it = coeffs_.find(v);
        return it == coeffs_.end() ? Rational(0) : it->second;
    }
    bool has(const Var &v) const { return coeffs_.count(v) != 0; }
    bool is_constant() const { return coeffs_.empty(); }
    bool is_zero() const { return coeffs_.empty() && constant_ == 0; }

    void add(const Var &v, const Rational &c) {
        if (c == 0) return;
        auto [it, inserted] = coeffs_.emplace(v, c);
        if (!inserted) {
            it->second += c;
            if (it->second == 0) coeffs_.erase(it);
        }
    }
    void add_constant(const Rational &c) { constant_ += c; }

    VarSet vars() const {
        VarSet s;
        for (auto &[v, c] : coeffs_) s.insert(v);
        return s;
    }

    LinTerm &operator+=(const LinTerm &o) {
        for (auto &[v, c] : o.coeffs_) add(v, c);
        constant_ += o.constant_;
        return *this;
    }
    LinTerm &operator-=(const LinTerm &o) {
        for (auto &[v, c] : o.coeffs_) add(v, -c);
        constant_ -= o.constant_;
        return *this;
    }
    LinTerm &operator*=(const Rational &k) {
        if (k == 0) {
            coeffs_.clear();
            constant_ = 0;
            return *this;
        }
        for (auto &[v, c] : coeffs_) c *= k;
        constant_ *= k;
        return *this;
    }
    friend LinTerm operator+(LinTerm a, const LinTerm &b) { return a += b; }
    friend LinTerm operator-(LinTerm a, const LinTerm &b) { return a -= b; }
    friend LinTerm operator*(LinTerm a, const Rational &k) { return a *= k; }
    friend LinTerm operator*(const Rational &k, LinTerm a) { return a *= k; }
    LinTerm operator-() const { return *this * Rational(-1); }

    friend bool operator==(const LinTerm &a, const LinTerm &b) {
        return a.constant_ == b.constant_ && a.coeffs_ == b.coeffs_;
    }
    friend bool operator<(const LinTerm &a, const LinTerm &b) {
        if (a.coeffs_ != b.coeffs_) return a.coeffs_ < b.coeffs_;
        return a.constant_ < b.constant_;
    }

    /// Replaces v by t.
    LinTerm substitute(const Var &v, const LinTerm &t) const {
        auto it = coeffs_.find(v);
        if (it == coeffs_.end()) return *this;
        Rational c = it->second;
        LinTerm r = *this;
        r.coeffs_.erase(v);
        r += t * c;
        return r;
    }
    LinTerm rename(const std::map<Var, Var> &m) const {
        LinTerm r(constant_);
        for (auto &[v, c] : coeffs_) {
            auto it = m.find(v);
            r.add(it == m.end() ? v : it->second, c);
        }
        return r;
    }
    /// Evaluates with the given assignment; unassigned variables stay symbolic.
    LinTerm partial_eval(const std::map<Var, Rational> &env) const {
        LinTerm r(constant_);
        for (auto &[v, c] : coeffs_) {
            auto it = env.find(v);
            if (it == env.end())
                r.add(v, c);
            else
                r.constant_ += c * it->second;
        }
        return r;
    }

    std::string to_string() const {
        std::string out;
        auto term = [&](const Rational &c, const std::string &name) {
            Rational a = abs(c);
            if (out.empty())
                out += c < 0 ? "-" : "";
            else
                out += c < 0 ? " - " : " + ";
            if (name.empty())
                out += loopsum::to_string(a);
            else if (a == 1)
                out += name;
            else
                out += loopsum::to_string(a) + "*" + name;
        };
        for (auto &[v, c] : coeffs_) term(c, v);
        if (constant_ != 0 || out.empty()) {
            if (out.empty() && constant_ == 0) return "0";
            term(constant_, "");
        }
        return out;
    }

private:
    std::map<Var, Rational> coeffs_;
    Rational constant_{0};
};

enum class Rel { Eq, Le, Lt };
enum class RelOp { Eq, Le, Lt, Ge, Gt };

/// Canonical constraint `lhs REL 0` with REL in {=, <=, <}.
struct LinConstraint {
    LinTerm lhs;
    Rel rel = Rel::Le;

    /// Builds `a OP b`, normalising >= and > by negation.
    static LinConstraint make(const LinTerm &a, RelOp op, const LinTerm &b) {
        switch (op) {
        case RelOp::Eq: return {a - b, Rel::Eq};
        case RelOp::Le: return {a - b, Rel::Le};
        case RelOp::Lt: return {a - b, Rel::Lt};
        case RelOp::Ge: return {b - a, Rel::Le};
        case RelOp::Gt: return {b - a, Rel::Lt};
        }
        return {};
    }
    static LinConstraint eq(const LinTerm &a, const LinTerm &b) { return make(a, RelOp::Eq, b); }
    static LinConstraint le(const LinTerm &a, const LinTerm &b) { return make(a, RelOp::Le, b); }
    static LinConstraint lt(const LinTerm &a, const LinTerm &b) { return make(a, RelOp::Lt, b); }
    static LinConstraint ge(const LinTerm &a, const LinTerm &b) { return make(a, RelOp::Ge, b); }
    static LinConstraint gt(const LinTerm &a, const LinTerm &b) { return make(a, RelOp::Gt, b); }

    VarSet vars() const { return lhs.vars(); }

    /// Truth value of a variable-free constraint.
    bool holds_constant() const {
        const Rational &c = lhs.constant();
        switch (rel) {
        case Rel::Eq: return c == 0;
        case Rel::Le: return c <= 0;
        case Rel::Lt: return c < 0;
        }
        return false;
    }

    bool holds(const std::map<Var, Rational> &env) const {
        LinTerm t = lhs.partial_eval(env);
        return LinConstraint{t, rel}.holds_constant();
    }

    /// Negations of the constraint; an equality yields two disjuncts.
    std::vector<LinConstraint> negate() const {
        switch (rel) {
        case Rel::Le: return {{-lhs, Rel::Lt}};
        case Rel::Lt: return {{-lhs, Rel::Le}};
        case Rel::Eq: return {{lhs, Rel::Lt}, {-lhs, Rel::Lt}};
        }
        return {};
    }

    LinConstraint substitute(const Var &v, const LinTerm &t) const { return {lhs.substitute(v, t), rel}; }
    LinConstraint rename(const std::map<Var, Var> &m) const { return {lhs.rename(m), rel}; }

    friend bool operator==(const LinConstraint &a, const LinConstraint &b) {
        return a.rel == b.rel && a.lhs == b.lhs;
    }
    friend bool operator<(const LinConstraint &a, const LinConstraint &b) {
        if (a.rel != b.rel) return a.rel < b.rel;
        return a.lhs < b.lhs;
    }

    /// Human-readable form with the constant moved to the right and the
    /// relation flipped when every coefficient is negative. Mixed-sign
    /// terms put negative coefficients on the right: `B_1 = B_2 - 1`.
    std::string to_string() const {
        LinTerm l = lhs;
        Rational rhs = -l.constant();
        l.add_constant(rhs);
        std::string op0 = rel == Rel::Eq ? "=" : rel == Rel::Le ? "<=" : "<";
        bool has_pos = std::any_of(l.coeffs().begin(), l.coeffs().end(), [](auto &p) { return p.second > 0; });
        bool has_neg = std::any_of(l.coeffs().begin(), l.coeffs().end(), [](auto &p) { return p.second < 0; });
        if (has_pos && has_neg) {
            LinTerm pos, neg(rhs);
            for (auto &[v, c] : l.coeffs()) {
                if (c > 0) pos.add(v, c);
                else neg.add(v, -c);
            }
            return pos.to_string() + " " + op0 + " " + neg.to_string();
        }
        bool flip = !l.is_constant() &&
                    std::all_of(l.coeffs().begin(), l.coeffs().end(),
                                [](auto &p) { return p.second < 0; });
        std::string op = rel == Rel::Eq ? "=" : rel == Rel::Le ? "<=" : "<";
        if (flip) {
            l = -l;
            rhs = -rhs;
            op = rel == Rel::Eq ? "=" : rel == Rel::Le ? ">=" : ">";
        }
        return l.to_string() + " " + op + " " + loopsum::to_string(rhs);
    }
};

/// A conjunction of linear constraints.
class ConstraintStore {
public:
    ConstraintStore() = default;
    ConstraintStore(std::initializer_list<LinConstraint> cs) : cs_(cs) {}
    explicit ConstraintStore(std::vector<LinConstraint> cs) : cs_(std::move(cs)) {}

    const std::vector<LinConstraint> &constraints() const { return cs_; }
    bool empty() const { return cs_.empty(); }
    std::size_t size() const { return cs_.size(); }
    auto begin() const { return cs_.begin(); }
    auto end() const { return cs_.end(); }

    void add(LinConstraint c) { cs_.push_back(std::move(c)); }
    void add_all(const ConstraintStore &o) { cs_.insert(cs_.end(), o.cs_.begin(), o.cs_.end()); }

    VarSet vars() const {
        VarSet s;
        for (auto &c : cs_)
            for (auto &[v, k] : c.lhs.coeffs()) s.insert(v);
        return s;
    }

    ConstraintStore conj(const ConstraintStore &o) const {
        ConstraintStore r = *this;
        r.add_all(o);
        return r;
    }
    ConstraintStore with(LinConstraint c) const {
        ConstraintStore r = *this;
        r.add(std::move(c));
        return r;
    }
    ConstraintStore substitute(const Var &v, const LinTerm &t) const {
        ConstraintStore r;
        for (auto &c : cs_) r.add(c.substitute(v, t));
        return r;
    }
    ConstraintStore rename(const std::map<Var, Var> &m) const {
        ConstraintStore r;
        for (auto &c : cs_) r.add(c.rename(m));
        return r;
    }
    bool holds(const std::map<Var, Rational> &env) const {
        return std::all_of(cs_.begin(), cs_.end(), [&](auto &c) { return c.holds(env); });
    }

    /// Removes syntactic duplicates and trivially true constraints,
    /// preserving first-occurrence order.
    ConstraintStore deduped() const {
        ConstraintStore r;
        std::set<LinConstraint> seen;
        for (auto &c : cs_) {
            if (c.lhs.is_constant() && c.holds_constant()) continue;
            if (seen.insert(c).second) r.add(c);
        }
        return r;
    }

    std::string to_string() const {
        if (cs_.empty()) return "true";
        std::string s;
        for (auto &c : cs_) {
            if (!s.empty()) s += ", ";
            s += c.to_string();
        }
        return s;
    }

private:
    std::vector<LinConstraint> cs_;
};

class SizeBlowup : public Error {
public:
    explicit SizeBlowup(std::size_t n)
        : Error("linarith", "Fourier-Motzkin intermediate constraint count exceeded cap (" +
                                std::to_string(n) + ")") {}
};

inline constexpr std::size_t kDefaultFmCap = 10000;

namespace detail {

// Scales so that the coefficient of the smallest variable is +1 or -1
// (equalities: +1). Returns false for a constant constraint.
inline bool normalize(LinConstraint &c) {
    if (c.lhs.is_constant()) return false;
    Rational lead = c.lhs.coeffs().begin()->second;
    Rational s = 1 / abs(lead);
    if (c.rel == Rel::Eq && lead < 0) s = -s;
    c.lhs *= s;
    return true;
}

// Working set keyed by the coefficient vector; for a given direction only
// the strongest constant is retained.
class FmSet {
public:
    explicit FmSet(std::size_t cap) : cap_(cap) {}

    /// Adds c; returns false if c is a violated constant constraint.
    bool add(LinConstraint c) {
        if (!normalize(c)) return c.holds_constant();
        if (c.rel == Rel::Eq) {
            eqs_.push_back(std::move(c));
            return true;
        }
        LinTerm key = c.lhs;
        key.add_constant(-key.constant());
        auto it = ineqs_.find(key);
        if (it == ineqs_.end()) {
            ineqs_.emplace(std::move(key), std::move(c));
            if (ineqs_.size() > cap_) throw SizeBlowup(cap_);
            return true;
        }
        // t + c1 REL 0 vs t + c2 REL 0: bigger constant is stronger.
        LinConstraint &old = it->second;
        const Rational &c1 = old.lhs.constant(), &c2 = c.lhs.constant();
        if (c2 > c1 || (c2 == c1 && c.rel == Rel::Lt)) old = std::move(c);
        return true;
    }

    std::vector<LinConstraint> eqs_;
    std::map<LinTerm, LinConstraint> ineqs_;
    std::size_t cap_;
};

// Picks the variable whose elimination produces the fewest new constraints.
inline std::optional<Var> pick_var(const std::map<LinTerm, LinConstraint> &ineqs,
                                   const VarSet &eliminable) {
    std::map<Var, std::pair<std::size_t, std::size_t>> counts;
    for (auto &[k, c] : ineqs)
        for (auto &[v, a] : c.lhs.coeffs())
            if (eliminable.count(v)) (a > 0 ? counts[v].first : counts[v].second)++;
    std::optional<Var> best;
    long long best_cost = 0;
    for (auto &[v, pn] : counts) {
        long long cost = static_cast<long long>(pn.first * pn.second) -
                         static_cast<long long>(pn.first + pn.second);
        if (!best || cost < best_cost) {
            best = v;
            best_cost = cost;
        }
    }
    return best;
}

struct FmResult {
    bool sat = true;
    std::vector<LinConstraint> constraints;
};

// Eliminates every variable in `elim` from `in`. Equalities are used for
// substitution first; inequalities are combined pairwise.
inline FmResult eliminate(const std::vector<LinConstraint> &in, const VarSet &elim, std::size_t cap) {
    FmSet set(cap);
    for (auto &c : in)
        if (!set.add(c)) return {false, {}};

    std::vector<LinConstraint> kept_eqs;
    // Gaussian elimination on equalities.
    while (!set.eqs_.empty()) {
        LinConstraint e = std::move(set.eqs_.back());
        set.eqs_.pop_back();
        std::optional<Var> pivot;
        for (auto &[v, a] : e.lhs.coeffs())
            if (elim.count(v)) {
                pivot = v;
                break;
            }
        if (!pivot) {
            kept_eqs.push_back(std::move(e));
            continue;
        }
        Rational a = e.lhs.coeff(*pivot);
        LinTerm def = e.lhs;
        def.add(*pivot, -a);
        def *= Rational(-1) / a; // pivot = def
        auto old_ineqs = std::move(set.ineqs_);
        set.ineqs_.clear();
        auto old_eqs = std::move(set.eqs_);
        set.eqs_.clear();
        for (auto &c : old_eqs)
            if (!set.add(c.substitute(*pivot, def))) return {false, {}};
        for (auto &[k, c] : old_ineqs)
            if (!set.add(c.substitute(*pivot, def))) return {false, {}};
        std::vector<LinConstraint> ke = std::move(kept_eqs);
        kept_eqs.clear();
        for (auto &c : ke) {
            LinConstraint s = c.substitute(*pivot, def);
            if (!normalize(s)) {
                if (!s.holds_constant()) return {false, {}};
                continue;
            }
            kept_eqs.push_back(std::move(s));
        }
    }

    // Equalities among kept variables participate as two inequalities only
    // when they still mention an eliminable variable (cannot happen here),
    // so inequalities are processed on their own.
    while (auto v = pick_var(set.ineqs_, elim)) {
        std::vector<LinConstraint> pos, neg, rest;
        for (auto &[k, c] : set.ineqs_) {
            Rational a = c.lhs.coeff(*v);
            if (a > 0)
                pos.push_back(c);
            else if (a < 0)
                neg.push_back(c);
            else
                rest.push_back(c);
        }
        set.ineqs_.clear();
        for (auto &c : rest) set.add(c);
        for (auto &p : pos)
            for (auto &n : neg) {
                Rational a = p.lhs.coeff(*v), b = -n.lhs.coeff(*v);
                LinConstraint comb{p.lhs * b + n.lhs * a,
                                   (p.rel == Rel::Lt || n.rel == Rel::Lt) ? Rel::Lt : Rel::Le};
                if (!set.add(std::move(comb))) return {false, {}};
            }
    }

    FmResult r;
    r.constraints = std::move(kept_eqs);
    for (auto &[k, c] : set.ineqs_) r.constraints.push_back(c);
    // Kept equalities may be mutually inconsistent with remaining inequalities
    // only if they share variables; the caller decides via a full check.
    return r;
}

} // namespace detail

/// True iff the conjunction has a rational solution.
inline bool is_sat(const ConstraintStore &phi, std::size_t cap = kDefaultFmCap) {
    auto r = detail::eliminate(phi.constraints(), phi.vars(), cap);
    return r.sat;
}

/// True iff every rational solution of phi satisfies c.
inline bool entails(const ConstraintStore &phi, const LinConstraint &c, std::size_t cap = kDefaultFmCap) {
    for (auto &n : c.negate())
        if (is_sat(phi.with(n), cap)) return false;
    return true;
}

inline bool entails_all(const ConstraintStore &phi, const ConstraintStore &cs, std::size_t cap = kDefaultFmCap) {
    return std::all_of(cs.begin(), cs.end(), [&](auto &c) { return entails(phi, c, cap); });
}

/// Two stores with the same solution set.
inline bool equivalent(const ConstraintStore &a, const ConstraintStore &b, std::size_t cap = kDefaultFmCap) {
    return entails_all(a, b, cap) && entails_all(b, a, cap);
}

inline const ConstraintStore &false_store() {
    static const ConstraintStore f{LinConstraint{LinTerm(1), Rel::Le}};
    return f;
}

/// Projects phi onto `keep`: the result mentions only kept variables and
/// its solutions are exactly the restrictions of phi's solutions.
inline ConstraintStore project(const ConstraintStore &phi, const VarSet &keep,
                               std::size_t cap = kDefaultFmCap) {
    VarSet elim;
    for (auto &v : phi.vars())
        if (!keep.count(v)) elim.insert(v);
    auto r = detail::eliminate(phi.constraints(), elim, cap);
    if (!r.sat || !is_sat(ConstraintStore(r.constraints), cap)) return false_store();
    std::vector<LinConstraint> cs = std::move(r.constraints);
    std::sort(cs.begin(), cs.end());
    // Drop constraints implied by the others while the result is small.
    if (cs.size() <= 40) {
        for (std::size_t i = cs.size(); i-- > 0;) {
            if (cs[i].rel == Rel::Eq) continue;
            std::vector<LinConstraint> others;
            for (std::size_t j = 0; j < cs.size(); ++j)
                if (j != i) others.push_back(cs[j]);
            if (entails(ConstraintStore(others), cs[i], cap)) cs = std::move(others);
        }
    }
    return ConstraintStore(std::move(cs));
}

struct Bounds {
    std::optional<LinTerm> lower;
    std::optional<LinTerm> upper;
};

/// Tightest linear bounds on v expressed over `params`, read off the
/// projection of phi onto {v} and params. Strictness is dropped.
inline Bounds var_bounds(const ConstraintStore &phi, const Var &v, const VarSet &params,
                         std::size_t cap = kDefaultFmCap) {
    VarSet keep = params;
    keep.insert(v);
    ConstraintStore proj = project(phi, keep, cap);
    std::vector<LinTerm> lows, ups;
    for (auto &c : proj) {
        Rational a = c.lhs.coeff(v);
        if (a == 0) continue;
        LinTerm rest = c.lhs;
        rest.add(v, -a);
        LinTerm b = rest * (Rational(-1) / a);
        if (c.rel == Rel::Eq) {
            lows.push_back(b);
            ups.push_back(b);
        } else if (a > 0) {
            ups.push_back(b);
        } else {
            lows.push_back(b);
        }
    }
    auto pick = [&](std::vector<LinTerm> &cands, bool upper) -> std::optional<LinTerm> {
        if (cands.empty()) return std::nullopt;
        std::sort(cands.begin(), cands.end(), [](auto &a, auto &b) {
            auto sa = a.vars().size(), sb = b.vars().size();
            if (sa != sb) return sa < sb;
            return a < b;
        });
        cands.erase(std::unique(cands.begin(), cands.end()), cands.end());
        for (auto &c : cands) {
            bool dominates = true;
            for (auto &o : cands) {
                if (&o == &c) continue;
                LinConstraint cmp = upper ? LinConstraint::le(c, o) : LinConstraint::ge(c, o);
                if (!entails(proj, cmp, cap)) {
                    dominates = false;
                    break;
                }
            }
            if (dominates) return c;
        }
        return cands.front();
    };
    return {pick(lows, false), pick(ups, true)};
}

/// Integer normalisation: scales each constraint to integer coefficients
/// and rounds constants, turning strict inequalities into non-strict ones
/// (t < 0 becomes t + 1 <= 0). Equalities with no integer solution become
/// `1 <= 0`. Only valid when every variable ranges over the integers.
inline ConstraintStore tighten_integer(const ConstraintStore &phi) {
    ConstraintStore out;
    for (auto c : phi) {
        if (c.lhs.is_constant()) {
            out.add(c);
            continue;
        }
        Integer l = 1;
        for (auto &[v, a] : c.lhs.coeffs()) l = boost::multiprecision::lcm(l, denominator(a));
        LinTerm scaled = c.lhs * Rational(l);
        Integer g = 0;
        for (auto &[v, a] : scaled.coeffs()) g = boost::multiprecision::gcd(g, numerator(a));
        LinTerm core = scaled;
        core.add_constant(-core.constant());
        core *= Rational(1, g);
        Rational k = scaled.constant() / Rational(g); // core + k REL 0
        if (c.rel == Rel::Eq) {
            if (!is_integer(k)) {
                out.add(false_store().constraints().front());
                continue;
            }
            core.add_constant(k);
            out.add({core, Rel::Eq});
            continue;
        }
        // core <= -k  (or < -k)
        Rational bound = -k;
        Integer b = c.rel == Rel::Lt ? ceil_int(bound) - 1 : floor_int(bound);
        core.add_constant(-Rational(b));
        out.add({core, Rel::Le});
    }
    return out;
}

} // namespace loopsum::lin

namespace loopsum {
using lin::Var;
using lin::VarSet;
} // namespace loopsum
