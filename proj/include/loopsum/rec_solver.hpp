#pragma once

// Closed forms for first-order linear recurrences
//   f(k) = a*f(k-1) + p(k)  (k > 0),   f(0) = b
// with rational a and polynomial p, b. Every solution is checked as a
// polynomial identity and by exact iteration before it is returned.

#include "loopsum/rd_sc.hpp"

#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace loopsum::rec {

inline constexpr unsigned kDefaultMaxDegree = 8;

class DegreeCap : public Error {
public:
    DegreeCap(unsigned d, unsigned cap)
        : Error("solver", "degree " + std::to_string(d) + " exceeds the cap of " + std::to_string(cap)) {}
};

class UnsupportedRecurrence : public Error {
public:
    explicit UnsupportedRecurrence(const std::string &why) : Error("solver", why) {}
};

/// poly(k) + exp_coeff * exp_base^k.
struct ClosedForm {
    std::string fn;
    Var counter;
    std::vector<Var> params;
    Polynomial poly;
    Rational exp_base = 1;
    Polynomial exp_coeff;

    bool is_polynomial() const { return exp_coeff.is_zero(); }

    Rational evaluate(const std::map<Var, Rational> &env) const {
        Rational r = poly.evaluate(env);
        if (!is_polynomial()) {
            Rational k = env.at(counter);
            if (!is_integer(k) || k < 0) throw Error("solver", "exponential term needs a natural counter");
            Rational pw = 1;
            for (Integer i = 0; i < numerator(k); ++i) pw *= exp_base;
            r += exp_coeff.evaluate(env) * pw;
        }
        return r;
    }
    std::string head() const {
        std::string s = fn + "(" + counter;
        for (auto &p : params) s += "," + p;
        return s + ")";
    }
    std::string rhs_string() const {
        std::string s = poly.to_string(counter);
        if (!is_polynomial()) {
            std::string e = "(" + exp_coeff.to_string() + ")*" + loopsum::to_string(exp_base) + "^" + counter;
            s = poly.is_zero() ? e : s + " + " + e;
        }
        return s;
    }
    std::string to_string() const { return head() + " = " + rhs_string(); }
};

/// sum_{i=1}^{k} p(i) with a degree check.
inline Polynomial sum_poly_capped(const Polynomial &p, const Var &k, unsigned cap = kDefaultMaxDegree) {
    if (p.degree(k) + 1 > cap) throw DegreeCap(p.degree(k) + 1, cap);
    return sum_poly(p, k);
}

struct FirstOrder {
    Var k;
    Rational a = 1;
    Polynomial p; // in k and constants
    Polynomial b; // constants only
};

namespace detail {

inline Polynomial shift_down(const Polynomial &f, const Var &k) {
    return f.substitute(k, Polynomial::var(k) - Polynomial(1));
}

inline Rational binom(unsigned n, unsigned r) {
    Rational c = 1;
    for (unsigned i = 0; i < r; ++i) c = c * (n - i) / (i + 1);
    return c;
}

} // namespace detail

/// Throws if `cf` does not satisfy the recurrence, symbolically or by
/// iterating it for k = 0..25 under random rational constants.
inline void verify(const ClosedForm &cf, const FirstOrder &r) {
    const Var &k = r.k;
    // Base: f(0) = b.
    Polynomial at0 = cf.poly.substitute(k, Polynomial(0)) + cf.exp_coeff.substitute(k, Polynomial(0));
    if (!(at0 - r.b).is_zero()) throw Error("solver", "closed form fails the base case: " + cf.rhs_string());
    // Step: for the polynomial part g(k) - a*g(k-1) = p(k); the exponential
    // part satisfies the homogeneous equation when its base is a.
    Polynomial step = cf.poly - Polynomial(r.a) * detail::shift_down(cf.poly, k) - r.p;
    if (!step.is_zero()) throw Error("solver", "closed form fails the step: " + cf.rhs_string());
    if (!cf.is_polynomial() && (cf.exp_base != r.a || cf.exp_coeff.has(k)))
        throw Error("solver", "closed form has a stray exponential term");

    std::mt19937 rng(20240501);
    std::uniform_int_distribution<int> num(-7, 7), den(1, 3);
    for (int trial = 0; trial < 3; ++trial) {
        std::map<Var, Rational> env;
        VarSet vs = r.p.vars();
        for (auto &v : r.b.vars()) vs.insert(v);
        for (auto &v : cf.poly.vars()) vs.insert(v);
        for (auto &v : cf.exp_coeff.vars()) vs.insert(v);
        for (auto &v : vs)
            if (v != k) env[v] = make_rational(num(rng), den(rng));
        env[k] = 0;
        Rational f = r.b.evaluate(env);
        for (int i = 0; i <= 25; ++i) {
            env[k] = i;
            if (i > 0) f = r.a * f + r.p.evaluate(env);
            if (cf.evaluate(env) != f) throw Error("solver", "closed form disagrees with iteration at k=" + std::to_string(i));
        }
    }
}

/// Solves f(k) = a f(k-1) + p(k), f(0) = b.
inline ClosedForm solve_first_order(const FirstOrder &r, unsigned cap = kDefaultMaxDegree) {
    ClosedForm cf;
    cf.counter = r.k;
    if (r.b.has(r.k)) throw UnsupportedRecurrence("base case depends on the counter");
    if (r.a == 1) {
        cf.poly = r.b + sum_poly_capped(r.p, r.k, cap);
    } else {
        // Polynomial particular solution g, then f = g + (b - g(0)) a^k.
        auto pc = r.p.coefficients_in(r.k);
        unsigned d = pc.empty() ? 0 : static_cast<unsigned>(pc.size() - 1);
        if (d > cap) throw DegreeCap(d, cap);
        std::vector<Polynomial> g(d + 1);
        for (int j = static_cast<int>(d); j >= 0; --j) {
            Polynomial acc = static_cast<std::size_t>(j) < pc.size() ? pc[j] : Polynomial();
            for (unsigned i = j + 1; i <= d; ++i) {
                Rational sign = (i - j) % 2 ? -1 : 1;
                acc += Polynomial(r.a * detail::binom(i, j) * sign) * g[i];
            }
            g[j] = acc * Polynomial(Rational(1) / (1 - r.a));
        }
        for (unsigned i = 0; i <= d; ++i) cf.poly += g[i] * Polynomial::var(r.k).pow(i);
        cf.exp_base = r.a;
        cf.exp_coeff = r.b - cf.poly.substitute(r.k, Polynomial(0));
        if (cf.exp_coeff.is_zero()) cf.exp_base = 1;
    }
    if (cf.poly.total_degree() > cap) throw DegreeCap(cf.poly.total_degree(), cap);
    verify(cf, r);
    return cf;
}

/// Replaces every application of `solved` in `target` by its closed form
/// at k-1.
inline EqSystem substitute_solution(const EqSystem &target, const ClosedForm &solved) {
    EqSystem out = target;
    const Var sym = call_symbol(solved.fn);
    for (auto &e : out.eqs) {
        if (e.fn == solved.fn || !e.rhs.has(sym)) continue;
        if (!solved.is_polynomial())
            throw UnsupportedRecurrence("cannot substitute exponential solution of " + solved.fn + " into " + e.fn);
        Polynomial at = solved.poly.substitute(solved.counter, Polynomial::var(e.counter) - Polynomial(1));
        e.rhs = e.rhs.substitute(sym, at);
    }
    return out;
}

struct SolveOptions {
    unsigned max_degree = kDefaultMaxDegree;
};

/// Intermediate results kept for reporting.
struct Solution {
    std::vector<std::string> order;
    std::map<std::string, ClosedForm> forms;
    std::map<std::string, EqSystem> reduced;   // single-function systems after constant removal
    std::map<std::string, RdAssignment> rd;    // on the substituted single-function systems
    std::map<std::string, VarSet> constants;
};

inline Solution solve_system_traced(const EqSystem &s, const SolveOptions &opt = {}) {
    Solution sol;
    EqSystem cur = s;
    for (auto &group : scc_order(s)) {
        const std::string &f = group.front();
        sol.order.push_back(f);
        EqSystem one = cur.subsystem({f});
        for (auto &e : one.eqs)
            for (auto &c : e.calls())
                if (c != f) throw UnsupportedRecurrence(f + " still applies unsolved " + c);
        VarSet args(one.params.begin(), one.params.end());
        args.insert(one.counter);
        sol.rd[f] = reaching_definitions(one);
        VarSet consts = symbolic_constants(one, args);
        sol.constants[f] = consts;
        for (auto &p : one.params)
            if (!consts.count(p)) throw UnsupportedRecurrence("argument " + p + " of " + f + " is not a symbolic constant");
        EqSystem red = remove_constants(one, VarSet(one.params.begin(), one.params.end()));
        sol.reduced[f] = red;

        FirstOrder r;
        r.k = s.counter;
        const RecEq *base = red.base_of(f);
        if (!base) throw UnsupportedRecurrence(f + " has no base case");
        r.b = base->rhs;
        ClosedForm cf;
        if (const RecEq *step = red.step_of(f)) {
            const Var self = call_symbol(f);
            auto cs = step->rhs.coefficients_in(self);
            if (cs.size() > 2) throw UnsupportedRecurrence(f + " applies itself non-linearly");
            r.p = cs.empty() ? Polynomial() : cs[0];
            if (cs.size() == 2) {
                if (!cs[1].is_constant())
                    throw UnsupportedRecurrence(f + ": coefficient of the recursive call is not constant");
                r.a = cs[1].constant_term();
            } else {
                r.a = 0;
            }
            cf = solve_first_order(r, opt.max_degree);
        } else {
            cf.counter = r.k;
            cf.poly = r.b;
        }
        // Back to the original argument names.
        std::map<Var, Var> back;
        for (auto &p : one.params) back[constant_symbol(p)] = p;
        cf.poly = cf.poly.rename(back);
        cf.exp_coeff = cf.exp_coeff.rename(back);
        cf.fn = f;
        cf.params = s.params;
        sol.forms[f] = cf;
        cur = substitute_solution(cur, cf);
    }
    return sol;
}

inline std::map<std::string, ClosedForm> solve_system(const EqSystem &s, const SolveOptions &opt = {}) {
    return solve_system_traced(s, opt).forms;
}

} // namespace loopsum::rec
