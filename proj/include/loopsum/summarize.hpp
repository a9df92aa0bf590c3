#pragma once

// Loop summaries, bottom-up over the counted path program, and symbolic
// output intervals for the whole program.

#include "loopsum/ranking.hpp"
#include "loopsum/rec_solver.hpp"
#include "loopsum/simulate.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace loopsum::sum {

using chc::Atom;
using chc::Clause;
using lin::ConstraintStore;
using lin::LinConstraint;
using lin::LinTerm;

struct Options {
    rx::StarOrder star_order = rx::StarOrder::Ascending;
    bool assume_nonneg = true;  // every program input is >= 0
    VarSet nonneg;              // extra per-variable assumptions
    unsigned max_degree = rec::kDefaultMaxDegree;
    int grid = 4;               // audit grid [0, grid]^m; negative disables
    std::size_t max_steps = 500;
    bool fresh_counters = false;
};

/// Prime-suffixed name for the final value of an input.
inline Var final_name(const Var &v) { return v + "'"; }

// ---------------------------------------------------------------------
// Intervals.

struct SymInterval {
    std::optional<Polynomial> lower, upper;

    bool is_point() const { return lower && upper && *lower == *upper; }
    std::string to_string(const Var &lead = {}) const {
        auto s = [&](const std::optional<Polynomial> &p) { return p ? p->to_string(lead) : std::string("?"); };
        if (is_point()) return s(lower);
        return "[" + s(lower) + ", " + s(upper) + "]";
    }
    friend bool operator==(const SymInterval &a, const SymInterval &b) {
        return a.lower == b.lower && a.upper == b.upper;
    }
};

/// Sufficient test for p >= 0: every coefficient positive and every
/// variable either assumed non-negative or raised to an even power.
inline bool provably_nonneg(const Polynomial &p, const VarSet &nonneg) {
    for (auto &[m, c] : p.terms()) {
        if (c < 0) return false;
        for (auto &[v, e] : m)
            if (e % 2 && !nonneg.count(v)) return false;
    }
    return true;
}

/// A linear relation plus polynomial output definitions over inputs and
/// loop counters.
struct Relation {
    std::vector<Var> inputs;
    std::vector<Var> counters; // substitution order: outer loops first
    ConstraintStore cons;
    std::map<Var, Polynomial> outputs; // output -> polynomial over inputs and counters
};

struct IntervalResult {
    bool feasible = true;
    std::map<Var, SymInterval> outputs;
    std::map<Var, SymInterval> counters;
    ConstraintStore region;            // the relation projected onto the inputs
    std::map<Var, Polynomial> pinned;  // inputs the region fixes to a constant
};

/// p >= 0 everywhere in the region of `where`.
inline bool nonneg_in(const Polynomial &p, const IntervalResult &where, const VarSet &nonneg) {
    Polynomial q = p.substitute(where.pinned);
    if (provably_nonneg(q, nonneg)) return true;
    if (auto l = q.as_linear()) return lin::entails(where.region, LinConstraint::ge(*l, LinTerm{}));
    return false;
}

/// Endpoint of `v` over several cases: the candidate that provably bounds
/// every other case within that case's region.
inline std::optional<Polynomial> extremum(const std::vector<const IntervalResult *> &cases, const Var &v, bool lower,
                                          const VarSet &nonneg) {
    static const std::optional<Polynomial> none;
    auto end = [&](const IntervalResult *c) -> const std::optional<Polynomial> & {
        auto it = c->outputs.find(v);
        if (it == c->outputs.end()) return none;
        return lower ? it->second.lower : it->second.upper;
    };
    if (cases.empty()) return std::nullopt;
    for (auto *c : cases)
        if (!end(c)) return std::nullopt;
    // a is at least as tight as b in every case
    auto tighter = [&](const Polynomial &a, const Polynomial &b) {
        for (auto *o : cases)
            if (!nonneg_in(lower ? a - b : b - a, *o, nonneg)) return false;
        return true;
    };
    std::vector<Polynomial> valid;
    for (auto *c : cases) {
        const Polynomial &cand = *end(c);
        if (std::find(valid.begin(), valid.end(), cand) != valid.end()) continue;
        bool ok = true;
        for (auto *o : cases) {
            Polynomial d = lower ? *end(o) - cand : cand - *end(o);
            if (!nonneg_in(d, *o, nonneg)) {
                ok = false;
                break;
            }
        }
        if (ok) valid.push_back(cand);
    }
    for (auto &v : valid)
        if (std::all_of(valid.begin(), valid.end(), [&](const Polynomial &w) { return tighter(v, w); })) return v;
    if (!valid.empty()) return valid.front();
    return std::nullopt;
}

inline SymInterval hull_cases(const std::vector<const IntervalResult *> &cases, const Var &v, const VarSet &nonneg) {
    return {extremum(cases, v, true, nonneg), extremum(cases, v, false, nonneg)};
}

/// Hull of plain intervals, with no region information.
inline SymInterval hull(const std::vector<SymInterval> &xs, const VarSet &nonneg) {
    std::vector<IntervalResult> rs(xs.size());
    std::vector<const IntervalResult *> ps;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        rs[i].outputs["v"] = xs[i];
        ps.push_back(&rs[i]);
    }
    return hull_cases(ps, "v", nonneg);
}

/// Replaces counters by their bounds over the inputs and evaluates each
/// output polynomial with interval arithmetic. A counter whose bounds
/// coincide is substituted exactly.
inline IntervalResult intervalize(const Relation &r, const VarSet &nonneg) {
    IntervalResult res;
    ConstraintStore E = r.cons;
    for (auto &v : r.inputs)
        if (nonneg.count(v)) E.add(LinConstraint::ge(LinTerm::var(v), LinTerm{}));
    for (auto &k : r.counters) E.add(LinConstraint::ge(LinTerm::var(k), LinTerm{}));
    for (auto &[v, p] : r.outputs)
        if (auto l = p.as_linear()) E.add(LinConstraint::eq(LinTerm::var(v), *l));
    if (!lin::is_sat(E)) {
        res.feasible = false;
        return res;
    }
    VarSet ins(r.inputs.begin(), r.inputs.end());
    VarSet sign_ok = nonneg;
    for (auto &k : r.counters) sign_ok.insert(k);
    try {
        res.region = lin::project(E, ins);
    } catch (const lin::SizeBlowup &) {
        res.region = {};
    }
    for (auto &v : r.inputs) {
        lin::Bounds b = lin::var_bounds(res.region, v, {});
        if (b.lower && b.upper && *b.lower == *b.upper) res.pinned[v] = Polynomial::from_lin(*b.lower);
    }

    std::map<Var, Polynomial> fixed;
    std::map<Var, std::pair<Polynomial, std::optional<Polynomial>>> range;
    for (auto &k : r.counters) {
        lin::Bounds b;
        try {
            b = lin::var_bounds(E, k, ins);
        } catch (const lin::SizeBlowup &) {
            b = {};
        }
        if (b.lower && b.upper && *b.lower == *b.upper) {
            fixed[k] = Polynomial::from_lin(*b.lower);
            res.counters[k] = {fixed[k], fixed[k]};
            continue;
        }
        Polynomial lo = 0;
        if (b.lower && lin::entails(E, LinConstraint::ge(*b.lower, LinTerm{}))) lo = Polynomial::from_lin(*b.lower);
        std::optional<Polynomial> hi;
        if (b.upper) hi = Polynomial::from_lin(*b.upper);
        range[k] = {lo, hi};
        res.counters[k] = {lo, hi};
    }

    auto pin = [&](std::optional<Polynomial> &p) {
        if (p) p = p->substitute(res.pinned);
    };
    for (auto &[v, p0] : r.outputs) {
        Polynomial p = p0.substitute(fixed);
        std::optional<Polynomial> lo = Polynomial(), hi = Polynomial();
        for (auto &[m, c] : p.terms()) {
            Polynomial inpart(c), cl(1);
            std::optional<Polynomial> cu = Polynomial(1);
            bool has_counter = false, unknown_var = false;
            for (auto &[x, e] : m) {
                if (auto it = range.find(x); it != range.end()) {
                    has_counter = true;
                    cl *= it->second.first.pow(e);
                    if (cu && it->second.second) *cu *= it->second.second->pow(e);
                    else cu.reset();
                } else if (ins.count(x)) {
                    inpart *= Polynomial::var(x).pow(e);
                } else {
                    unknown_var = true;
                }
            }
            if (unknown_var) {
                lo.reset();
                hi.reset();
                break;
            }
            std::optional<Polynomial> tl, th;
            if (!has_counter) {
                tl = th = inpart;
            } else if (provably_nonneg(inpart, sign_ok)) {
                tl = inpart * cl;
                if (cu) th = inpart * *cu;
            } else if (provably_nonneg(Polynomial(-1) * inpart, sign_ok)) {
                if (cu) tl = inpart * *cu;
                th = inpart * cl;
            }
            if (lo && tl) *lo += *tl;
            else lo.reset();
            if (hi && th) *hi += *th;
            else hi.reset();
        }
        pin(lo);
        pin(hi);
        res.outputs[v] = {lo, hi};
    }
    for (auto &[k, iv] : res.counters) {
        pin(iv.lower);
        pin(iv.upper);
    }
    return res;
}

/// Bounds that hold once `counter` is at least one. With zero iterations
/// the loop's ranking bound says nothing, so each guard splits the
/// relation into a zero case and a running case. The running case keeps
/// k = 0 as well; those points are real whenever the bounds admit them.
struct Guard {
    Var counter;
    ConstraintStore running;
};

inline constexpr std::size_t kMaxGuardSplit = 8;

inline std::vector<IntervalResult> interval_cases(const Relation &r, const std::vector<Guard> &guards,
                                                  const VarSet &nonneg) {
    std::vector<IntervalResult> out;
    if (guards.size() > kMaxGuardSplit) {
        // Too many cases: keep only the bounds valid in every case.
        out.push_back(intervalize(r, nonneg));
        return out;
    }
    for (std::size_t mask = 0; mask < (std::size_t{1} << guards.size()); ++mask) {
        Relation c = r;
        for (std::size_t i = 0; i < guards.size(); ++i) {
            LinTerm k = LinTerm::var(guards[i].counter);
            if (mask >> i & 1) {
                c.cons.add_all(guards[i].running);
            } else {
                c.cons.add(LinConstraint::eq(k, LinTerm{}));
            }
        }
        IntervalResult res = intervalize(c, nonneg);
        if (res.feasible) out.push_back(std::move(res));
    }
    return out;
}

// ---------------------------------------------------------------------
// Loop summaries.

struct CounterInfo {
    Var name;
    Polynomial lower;
    std::optional<Polynomial> upper;
    std::optional<Polynomial> ranking;
};

struct LoopSummary {
    std::string pred;
    Var counter;
    std::vector<Var> in, out;
    std::map<Var, Polynomial> forms;  // out var -> closed form
    std::map<Var, rec::ClosedForm> exponential; // out vars whose form is not polynomial
    std::vector<Var> carried;         // inner counters appearing in forms
    ConstraintStore always;              // counter facts valid for every k
    ConstraintStore running;             // valid once k >= 1
    ConstraintStore counter_constraints; // both, for display
    std::vector<CounterInfo> counters; // own counter first
    std::optional<LinTerm> ranking;    // over in
    rec::EqSystem system;
    rec::Solution solution;
    std::map<Var, SymInterval> intervals; // loop-level, keyed by out var
    std::vector<std::string> notes;

    /// `wh2(A,B,A_1,B_1) <- A_1 = A, B_1 = B - k1, 0 <= k1, k1 <= B`
    std::string to_string() const {
        std::string s = pred + "(";
        for (std::size_t i = 0; i < in.size(); ++i) s += (i ? "," : "") + in[i];
        for (auto &o : out) s += "," + o;
        s += ") <- ";
        std::string body;
        for (auto &o : out) {
            auto it = forms.find(o);
            std::string rhs = it != forms.end() ? it->second.to_string(counter) : exponential.at(o).rhs_string();
            body += (body.empty() ? "" : ", ") + o + " = " + rhs;
        }
        for (auto &c : counter_constraints) body += ", " + c.to_string();
        return s + body;
    }
};

namespace detail {

// Renames every variable of `c` so that the listed head positions carry
// the given names; all other variables avoid those names.
inline Clause rename_head(const Clause &c, const std::map<std::size_t, Var> &pos) {
    VarSet taken;
    for (auto &[i, v] : pos) taken.insert(v);
    VarSet used = c.vars();
    used.insert(taken.begin(), taken.end());
    std::map<Var, Var> ren;
    for (auto &[i, v] : pos) ren[c.head.args[i]] = v;
    for (auto &v : c.vars()) {
        if (ren.count(v)) continue;
        ren[v] = taken.count(v) ? chc::fresh_var(v, used) : v;
        used.insert(ren[v]);
    }
    Clause out = c;
    out.constraint = c.constraint.rename(ren);
    for (auto &a : out.head.args) a = ren.at(a);
    for (auto &b : out.body)
        for (auto &a : b.args) a = ren.at(a);
    return out;
}

struct Inlined {
    std::vector<PolyDef> defs;
    ConstraintStore bounds; // valid for every value of the call-site counter
    Guard guard;            // the rest, valid once it is at least one
    std::vector<Var> counters; // call-site counter, then callee's carried ones
};

// Summary of the callee at a call site Q(kq, u, v).
inline Inlined inline_call(const Atom &call, const LoopSummary &s) {
    Inlined r;
    std::map<Var, Var> ren;
    const std::size_t n = s.in.size();
    ren[s.counter] = call.args[0];
    for (std::size_t i = 0; i < n; ++i) ren[s.in[i]] = call.args[1 + i];
    for (std::size_t j = 0; j < s.out.size(); ++j) ren[s.out[j]] = call.args[1 + n + j];
    for (std::size_t j = 0; j < s.out.size(); ++j)
        if (auto it = s.forms.find(s.out[j]); it != s.forms.end())
            r.defs.push_back(PolyDef{call.args[1 + n + j], it->second.rename(ren)});
    r.bounds = s.always.rename(ren);
    r.guard = {call.args[0], s.running.rename(ren)};
    r.counters.push_back(call.args[0]);
    for (auto &c : s.carried) r.counters.push_back(c);
    return r;
}

// k <= t loosened to k <= t' with t' >= t under the guard: the bound is
// rewritten over `known` and terms the guard makes non-positive dropped.
inline ConstraintStore loosen_bounds(const ConstraintStore &bounds, const VarSet &counters, const ConstraintStore &guard,
                                     const VarSet &known, std::vector<std::string> *zero_notes = nullptr) {
    auto defs = resolve_definitions(guard, {}, known);
    std::map<Var, LinTerm> lin_defs;
    for (auto &[v, p] : defs)
        if (auto l = p.as_linear()) lin_defs[v] = *l;
    ConstraintStore out;
    for (auto &c : bounds) {
        std::optional<Var> k;
        for (auto &[v, a] : c.lhs.coeffs())
            if (counters.count(v) && a > 0 && c.rel != lin::Rel::Eq) k = v;
        if (!k) {
            out.add(c);
            continue;
        }
        Rational a = c.lhs.coeff(*k);
        LinTerm t = c.lhs;
        t.add(*k, -a);
        t *= Rational(-1) / a; // k <= t
        for (auto &[v, d] : lin_defs) t = t.substitute(v, d);
        bool other_counter = false;
        for (auto &v : t.vars())
            if (counters.count(v)) other_counter = true;
        if (other_counter) {
            out.add(c);
            continue;
        }
        LinTerm kept(t.constant());
        for (auto &[v, b] : t.coeffs()) {
            LinTerm term = LinTerm::var(v, b);
            if (!lin::entails(guard, LinConstraint::le(term, LinTerm{}))) kept = kept + term;
        }
        // Also valid with zero inner iterations only if the bound is non-negative.
        if (zero_notes && !lin::entails(guard, LinConstraint::ge(kept, LinTerm{})))
            zero_notes->push_back("bound " + *k + " <= " + kept.to_string() +
                                  " is assumed for zero inner iterations as well");
        out.add(c.rel == lin::Rel::Lt ? LinConstraint::lt(LinTerm::var(*k), kept)
                                      : LinConstraint::le(LinTerm::var(*k), kept));
    }
    return out;
}

inline VarSet nonneg_inputs(const std::vector<Var> &ins, const Options &opt) {
    VarSet s = opt.nonneg;
    if (opt.assume_nonneg) s.insert(ins.begin(), ins.end());
    return s;
}

} // namespace detail

inline LoopSummary summarize_loop(const pc::CountedLoop &L, const std::map<std::string, LoopSummary> &done,
                                  const Options &opt = {}) {
    LoopSummary S;
    S.pred = L.pred;
    S.counter = L.counter;
    S.in = L.in;
    S.out = L.out;
    const LinTerm k = LinTerm::var(L.counter);
    S.always.add(LinConstraint::ge(k, LinTerm{}));

    rec::LoopStep st;
    st.pred = L.pred;
    st.counter = L.counter;
    st.in = L.in;
    ConstraintStore rank_body;
    if (L.step.head.pred.empty()) {
        st.has_step = false;
        st.prev = st.next = L.in;
        S.always.add(LinConstraint::le(k, LinTerm{}));
    } else {
        const std::size_t n = L.in.size();
        std::map<std::size_t, Var> pos{{0, L.counter}};
        for (std::size_t i = 0; i < n; ++i) pos[1 + i] = L.in[i];
        Clause c = detail::rename_head(L.step, pos);
        const Atom &self = c.body.front();
        st.next.assign(c.head.args.begin() + 1 + static_cast<long>(n), c.head.args.end());
        st.prev.assign(self.args.begin() + 1 + static_cast<long>(n), self.args.end());
        for (auto &con : c.constraint)
            if (!con.vars().count(L.counter) && !con.vars().count(self.args[0])) st.guard.add(con);
        VarSet known(st.prev.begin(), st.prev.end());
        known.insert(L.in.begin(), L.in.end());
        VarSet counters;
        ConstraintStore inner_bounds, inner_running;
        for (std::size_t i = 1; i < c.body.size(); ++i) {
            const Atom &call = c.body[i];
            auto it = done.find(call.pred);
            if (it == done.end()) throw Error("summarize", "inner loop " + call.pred + " of " + L.pred + " not summarized");
            if (!it->second.exponential.empty())
                throw rec::UnsupportedRecurrence("inner loop " + call.pred + " has an exponential closed form");
            auto in = detail::inline_call(call, it->second);
            for (auto &d : in.defs) st.defs.push_back(d);
            for (auto &kc : in.counters)
                if (std::find(st.carried.begin(), st.carried.end(), kc) == st.carried.end()) st.carried.push_back(kc);
            inner_bounds.add_all(in.bounds);
            inner_running.add_all(in.guard.running);
        }
        counters.insert(st.carried.begin(), st.carried.end());
        st.carried_bounds = detail::loosen_bounds(inner_bounds, counters, st.guard, known);
        st.carried_bounds.add_all(detail::loosen_bounds(inner_running, counters, st.guard, known, &S.notes));

        // Linear view of the step for ranking and for carrying bounds out.
        rank_body = st.guard;
        rank_body.add_all(st.carried_bounds);
        for (auto &kc : st.carried) rank_body.add(LinConstraint::ge(LinTerm::var(kc), LinTerm{}));
        VarSet known_all = known;
        known_all.insert(st.carried.begin(), st.carried.end());
        for (auto &[v, p] : resolve_definitions(st.guard, st.defs, known_all))
            if (auto l = p.as_linear()) rank_body.add(LinConstraint::eq(LinTerm::var(v), *l));

        try {
            lin::RankingFn r = lin::synth_ranking(rank_body, st.prev, st.next);
            std::map<Var, Var> to_in;
            for (std::size_t i = 0; i < n; ++i) to_in[st.prev[i]] = L.in[i];
            S.ranking = r.term.rename(to_in);
            S.running.add(LinConstraint::le(k, *S.ranking));
        } catch (const lin::NoRankingFound &) {
            S.notes.push_back("no linear ranking function for " + L.pred + "; counter " + L.counter + " is unbounded");
        }
    }

    S.system = rec::extract(st, opt.fresh_counters);
    S.solution = rec::solve_system_traced(S.system, {opt.max_degree});
    for (std::size_t j = 0; j < L.in.size(); ++j) {
        const auto &cf = S.solution.forms.at(S.system.functions[j]);
        if (cf.is_polynomial()) {
            S.forms[L.out[j]] = cf.poly;
        } else {
            S.exponential[L.out[j]] = cf;
            S.notes.push_back("closed form of " + cf.fn + " is exponential; " + L.in[j] + " gets no interval");
        }
    }
    S.carried = st.carried;

    // Carried counters: bounds over this loop's outputs.
    if (!st.carried.empty()) {
        std::map<Var, Var> to_out;
        for (std::size_t j = 0; j < st.next.size(); ++j) to_out[st.next[j]] = L.out[j];
        VarSet outs(st.next.begin(), st.next.end());
        for (auto &kc : st.carried) {
            lin::Bounds b = lin::var_bounds(rank_body, kc, outs);
            S.always.add(LinConstraint::ge(LinTerm::var(kc), LinTerm{}));
            if (b.lower && !b.lower->is_zero()) S.running.add(LinConstraint::ge(LinTerm::var(kc), b.lower->rename(to_out)));
            if (b.upper) S.running.add(LinConstraint::le(LinTerm::var(kc), b.upper->rename(to_out)));
        }
    }
    S.counter_constraints = S.always.conj(S.running);

    CounterInfo own{L.counter, 0, std::nullopt, std::nullopt};
    if (S.ranking) own.upper = own.ranking = Polynomial::from_lin(*S.ranking);
    if (!st.has_step) own.upper = Polynomial(0);
    S.counters.push_back(own);
    for (auto &kc : st.carried) {
        VarSet outs(L.out.begin(), L.out.end());
        lin::Bounds b = lin::var_bounds(S.counter_constraints, kc, outs);
        S.counters.push_back({kc, b.lower ? Polynomial::from_lin(*b.lower) : Polynomial(0),
                              b.upper ? std::optional<Polynomial>(Polynomial::from_lin(*b.upper)) : std::nullopt,
                              std::nullopt});
    }

    Relation rel;
    rel.inputs = L.in;
    rel.counters = {L.counter};
    rel.counters.insert(rel.counters.end(), st.carried.begin(), st.carried.end());
    rel.cons = S.always;
    rel.outputs = S.forms;
    VarSet nonneg = detail::nonneg_inputs(L.in, opt);
    auto cases = interval_cases(rel, {Guard{L.counter, S.running}}, nonneg);
    std::vector<const IntervalResult *> ps;
    for (auto &c : cases) ps.push_back(&c);
    for (auto &[o, p] : S.forms) S.intervals[o] = hull_cases(ps, o, nonneg);
    return S;
}

// ---------------------------------------------------------------------
// Whole programs.

struct Branch {
    std::string clause;
    bool feasible = true;
    Relation relation;
    std::vector<Guard> guards;
    std::vector<IntervalResult> cases; // feasible ones only
};

struct CheckRow {
    std::vector<Rational> input;
    std::string status; // exact | enclosed | VIOLATION | timeout | stuck
    std::string detail;
};

struct CheckReport {
    std::vector<Var> inputs;
    std::vector<CheckRow> rows;
    std::size_t violations = 0;
};

struct ProgramSummary {
    std::string entry;
    std::vector<Var> inputs;
    Cfg cfg;
    rx::Re raw_expr, expr;
    pc::PathProgram paths;
    pc::CountedProgram counted;
    std::vector<LoopSummary> loops; // callee-first
    std::vector<Branch> branches;
    std::map<Var, SymInterval> outputs; // keyed by final_name(input)
    std::vector<Var> output_order;
    VarSet assumptions;
    std::vector<std::string> fidelity_notes;
    std::optional<CheckReport> check;

    const LoopSummary *loop(const std::string &pred) const {
        for (auto &l : loops)
            if (l.pred == pred) return &l;
        return nullptr;
    }
};

enum class Stage { Cfg, PathExpr, PathProgram, Counted, Summary };

/// Differential audit: simulate every grid point and compare terminal
/// values against the output intervals.
inline CheckReport check_program(const chc::Program &p, const ProgramSummary &s, int grid, std::size_t max_steps) {
    CheckReport rep;
    rep.inputs = s.inputs;
    const std::size_t m = p.entry_arity;
    std::vector<int> pt(m, 0);
    if (grid < 0) return rep;
    for (bool more = true; more;) {
        std::vector<Rational> in(pt.begin(), pt.end());
        std::map<Var, Rational> env;
        for (std::size_t i = 0; i < m && i < s.inputs.size(); ++i) env[s.inputs[i]] = in[i];
        SimResult r = simulate(p, in, max_steps);
        if (r.status != SimStatus::Ok) {
            rep.rows.push_back({in, r.status == SimStatus::Timeout ? "timeout" : "stuck", ""});
        }
        for (auto &t : r.terminals) {
            CheckRow row{in, "exact", ""};
            for (std::size_t j = 0; j < s.output_order.size() && j < t.values.size(); ++j) {
                const Var &o = s.output_order[j];
                auto it = s.outputs.find(o);
                if (it == s.outputs.end() || !t.values[j]) continue;
                const Rational &val = *t.values[j];
                const SymInterval &iv = it->second;
                std::optional<Rational> lo, hi;
                if (iv.lower) lo = iv.lower->evaluate(env);
                if (iv.upper) hi = iv.upper->evaluate(env);
                bool inside = (!lo || *lo <= val) && (!hi || val <= *hi);
                bool point = lo && hi && *lo == *hi && *lo == val;
                if (!inside) {
                    row.status = "VIOLATION";
                    row.detail += o + " = " + to_string(val) + " outside [" + (lo ? to_string(*lo) : "?") + ", " +
                                  (hi ? to_string(*hi) : "?") + "]; ";
                } else if (!point && row.status == "exact") {
                    row.status = "enclosed";
                }
            }
            if (row.status == "VIOLATION") ++rep.violations;
            rep.rows.push_back(row);
        }
        std::size_t i = 0;
        for (; i < m; ++i) {
            if (pt[i] < grid) {
                ++pt[i];
                break;
            }
            pt[i] = 0;
        }
        more = i < m;
    }
    return rep;
}

/// Full pipeline up to `upto`, filling `S` stage by stage so that a
/// caller catching an error still sees the earlier stages.
inline void summarize_into(ProgramSummary &S, const chc::Program &p, const Options &opt = {},
                           Stage upto = Stage::Summary) {
    S.entry = p.entry;
    S.cfg = build_cfg(p);
    if (upto == Stage::Cfg) return;
    S.raw_expr = rx::path_expression(S.cfg, p.entry, chc::kTrue);
    S.expr = rx::eliminate_multipath(S.raw_expr, opt.star_order);
    if (upto == Stage::PathExpr) return;
    if (S.expr->kind == rx::Kind::Empty) throw Error("pathexpr", "no path from " + p.entry + " to true");
    S.paths = pc::unfold_simplify(pc::generate(p, S.expr, p.entry));
    S.inputs = S.paths.root_in;
    if (upto == Stage::PathProgram) return;
    S.counted = pc::add_counters(S.paths);
    if (upto == Stage::Counted) return;

    std::map<std::string, LoopSummary> done;
    for (auto &L : S.counted.loops) {
        LoopSummary ls = summarize_loop(L, done, opt);
        done[L.pred] = ls;
        S.loops.push_back(ls);
        for (auto &n : ls.notes) S.fidelity_notes.push_back(n);
    }

    VarSet nonneg = detail::nonneg_inputs(S.inputs, opt);
    S.assumptions = nonneg;
    const std::size_t n = S.inputs.size();
    for (auto &v : S.inputs) S.output_order.push_back(final_name(v));
    std::vector<const IntervalResult *> all_cases;
    for (auto &top : S.counted.top) {
        std::map<std::size_t, Var> pos;
        for (std::size_t i = 0; i < n; ++i) pos[i] = S.inputs[i];
        Clause c = detail::rename_head(top, pos);
        Branch b;
        b.clause = top.id;
        Relation &rel = b.relation;
        rel.inputs = S.inputs;
        rel.cons = c.constraint;
        std::vector<PolyDef> defs;
        for (auto &call : c.body) {
            auto in = detail::inline_call(call, done.at(call.pred));
            for (auto &d : in.defs) defs.push_back(d);
            rel.cons.add_all(in.bounds);
            b.guards.push_back(in.guard);
            for (auto &k : in.counters)
                if (std::find(rel.counters.begin(), rel.counters.end(), k) == rel.counters.end())
                    rel.counters.push_back(k);
        }
        VarSet known(S.inputs.begin(), S.inputs.end());
        known.insert(rel.counters.begin(), rel.counters.end());
        auto resolved = resolve_definitions(rel.cons, defs, known);
        // Intermediate linear values feed the counter bounds.
        for (auto &[v, poly] : resolved)
            if (auto l = poly.as_linear()) rel.cons.add(LinConstraint::eq(LinTerm::var(v), *l));
        for (std::size_t j = 0; j < n && n + j < c.head.args.size(); ++j) {
            const Var &o = c.head.args[n + j];
            auto it = resolved.find(o);
            if (it != resolved.end()) rel.outputs[final_name(S.inputs[j])] = it->second;
        }
        b.cases = interval_cases(rel, b.guards, nonneg);
        b.feasible = !b.cases.empty();
        S.branches.push_back(std::move(b));
    }
    for (auto &b : S.branches)
        for (auto &c : b.cases) all_cases.push_back(&c);
    if (!all_cases.empty())
        for (auto &o : S.output_order) S.outputs[o] = hull_cases(all_cases, o, nonneg);

    if (opt.grid >= 0) {
        S.check = check_program(p, S, opt.grid, opt.max_steps);
        for (auto &row : S.check->rows) {
            if (row.status != "VIOLATION") continue;
            std::string pt;
            for (std::size_t i = 0; i < row.input.size(); ++i)
                pt += (i ? ", " : "") + (i < S.inputs.size() ? S.inputs[i] : "#" + std::to_string(i)) + "=" +
                      to_string(row.input[i]);
            S.fidelity_notes.push_back("grid point (" + pt + "): " + row.detail.substr(0, row.detail.size() - 2));
        }
    }
}

inline ProgramSummary summarize_program(const chc::Program &p, const Options &opt = {},
                                        Stage upto = Stage::Summary) {
    ProgramSummary S;
    summarize_into(S, p, opt, upto);
    return S;
}

} // namespace loopsum::sum
