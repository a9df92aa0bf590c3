#pragma once

// Recurrence equations for counted loops. Each output position j of a loop
// P gives a function P^xj(k, params) whose value is x_j after k iterations.
// Inside a right-hand side the symbol "@f" stands for f(k-1, params).

#include "loopsum/path_clauses.hpp"
#include "loopsum/polynomial.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace loopsum::rec {

using lin::ConstraintStore;
using lin::LinConstraint;
using lin::LinTerm;

class NonDeterministicUpdate : public Error {
public:
    explicit NonDeterministicUpdate(const Var &v)
        : Error("recurrences", "update of " + v + " is not uniquely determined by the loop step"), var_(v) {}
    const Var &var() const { return var_; }

private:
    Var var_;
};

class NonPolynomialUpdate : public Error {
public:
    explicit NonPolynomialUpdate(const Var &v)
        : Error("recurrences", "update of " + v + " is not a polynomial in the previous state") {}
};

class CyclicDependency : public Error {
public:
    explicit CyclicDependency(const std::vector<std::string> &fns)
        : Error("recurrences", "coupled recurrences: " + join(fns)) {}

private:
    static std::string join(const std::vector<std::string> &v) {
        std::string s;
        for (auto &x : v) s += (s.empty() ? "" : ", ") + x;
        return s;
    }
};

class UnsupportedShape : public Error {
public:
    explicit UnsupportedShape(const std::string &why) : Error("recurrences", why) {}
};

inline Var call_symbol(const std::string &fn) { return "@" + fn; }
inline bool is_call_symbol(const Var &v) { return !v.empty() && v[0] == '@'; }

/// Step relation of a counted loop with inner loops already replaced by
/// their closed forms: prev is the state before an iteration, next after.
struct LoopStep {
    std::string pred;
    Var counter;
    std::vector<Var> in, prev, next;
    ConstraintStore guard;          // linear guards and updates
    std::vector<PolyDef> defs;      // polynomial updates from inner loops
    std::vector<Var> carried;       // inner counters used in defs
    ConstraintStore carried_bounds; // constraints on carried counters
    bool has_step = true;
};

struct RecEq {
    std::string id;
    std::string fn;
    Var counter;
    std::vector<Var> params;
    Polynomial rhs;
    ConstraintStore condition;
    bool base = false;

    std::set<std::string> calls() const {
        std::set<std::string> out;
        for (auto &v : rhs.vars())
            if (is_call_symbol(v)) out.insert(v.substr(1));
        return out;
    }
    std::string head() const {
        std::string s = fn + "(" + counter;
        for (auto &p : params) s += "," + p;
        return s + ")";
    }
    /// Right-hand side with call symbols written as applications.
    std::string rhs_string() const {
        std::map<Var, Var> show;
        for (auto &f : calls()) {
            std::string s = f + "(" + counter + "-1";
            for (auto &p : params) s += "," + p;
            show[call_symbol(f)] = s + ")";
        }
        return rhs.rename(show).to_string(counter);
    }
    std::string condition_string() const {
        std::string cond;
        for (auto &c : condition) cond += (cond.empty() ? "" : ", ") + c.to_string();
        return cond;
    }
    /// `f(k,x) = f(k-1,x) - 1  for k > 0`
    std::string to_string() const { return head() + " = " + rhs_string() + "  for " + condition_string(); }
};

struct EqSystem {
    std::string pred;
    Var counter;
    std::vector<Var> params;             // loop inputs then carried counters
    std::vector<std::string> functions;  // one per loop input, in order
    std::map<std::string, Var> var_of;   // function -> loop input it tracks
    std::vector<RecEq> eqs;

    const RecEq *base_of(const std::string &fn) const {
        for (auto &e : eqs)
            if (e.fn == fn && e.base) return &e;
        return nullptr;
    }
    const RecEq *step_of(const std::string &fn) const {
        for (auto &e : eqs)
            if (e.fn == fn && !e.base) return &e;
        return nullptr;
    }
    std::map<std::string, Polynomial> base_cases() const {
        std::map<std::string, Polynomial> m;
        for (auto &e : eqs)
            if (e.base) m[e.fn] = e.rhs;
        return m;
    }
    /// The equations of the listed functions only.
    EqSystem subsystem(const std::set<std::string> &fns) const {
        EqSystem s = *this;
        s.functions.clear();
        s.eqs.clear();
        for (auto &f : functions)
            if (fns.count(f)) s.functions.push_back(f);
        for (auto &e : eqs)
            if (fns.count(e.fn)) s.eqs.push_back(e);
        return s;
    }
    std::string to_string() const {
        std::string s;
        for (auto &e : eqs) s += "[" + e.id + "] " + e.to_string() + "\n";
        return s;
    }
    /// One case block per function, base first.
    std::string to_cases() const {
        std::string s;
        for (auto &f : functions) {
            const RecEq *b = base_of(f), *st = step_of(f);
            const RecEq &any = b ? *b : *st;
            s += any.head() + " =\n";
            std::size_t w = 0;
            for (const RecEq *e : {b, st})
                if (e) w = std::max(w, e->rhs_string().size());
            for (const RecEq *e : {b, st}) {
                if (!e) continue;
                std::string r = e->rhs_string();
                s += "    " + r + std::string(w - r.size() + 2, ' ') + "if " + e->condition_string() + "   [" + e->id + "]\n";
            }
        }
        return s;
    }
};

inline std::string function_name(const std::string &pred, const Var &v) { return pred + "^" + v; }

/// Step relation of a counted loop whose step calls no other loop.
inline LoopStep loop_step(const pc::CountedLoop &L) {
    LoopStep s;
    s.pred = L.pred;
    s.counter = L.counter;
    s.in = L.in;
    if (L.step.head.pred.empty()) {
        s.has_step = false;
        s.next = s.prev = L.in;
        return s;
    }
    const chc::Clause &st = L.step;
    if (st.body.size() != 1)
        throw Error("recurrences", "step of " + L.pred + " calls inner loop " + st.body[1].pred + "; inline it first");
    const std::size_t n = L.in.size();
    s.next.assign(st.head.args.begin() + 1 + static_cast<long>(n), st.head.args.end());
    s.prev.assign(st.body[0].args.begin() + 1 + static_cast<long>(n), st.body[0].args.end());
    const Var &k_prev = st.body[0].args[0];
    for (auto &c : st.constraint)
        if (!c.vars().count(L.counter) && !c.vars().count(k_prev)) s.guard.add(c);
    return s;
}

/// Recurrence system for a loop step.
/// With `fresh_counters`, carried counters keep their lower bounds in the
/// step condition, so they no longer count as symbolic constants.
inline EqSystem extract(const LoopStep &st, bool fresh_counters = false) {
    EqSystem s;
    s.pred = st.pred;
    s.counter = st.counter;
    s.params = st.in;
    s.params.insert(s.params.end(), st.carried.begin(), st.carried.end());
    for (auto &v : st.in) {
        std::string f = function_name(st.pred, v);
        s.functions.push_back(f);
        s.var_of[f] = v;
    }
    std::map<Var, Polynomial> step_rhs;
    if (st.has_step) {
        VarSet known(st.prev.begin(), st.prev.end());
        known.insert(st.in.begin(), st.in.end());
        known.insert(st.carried.begin(), st.carried.end());
        auto res = resolve_definitions(st.guard, st.defs, known);
        std::map<Var, Polynomial> to_calls;
        for (std::size_t j = 0; j < st.prev.size(); ++j)
            to_calls[st.prev[j]] = Polynomial::var(call_symbol(s.functions[j]));
        for (std::size_t j = 0; j < st.next.size(); ++j) {
            const Var &x2 = st.next[j];
            Polynomial p;
            if (known.count(x2)) p = Polynomial::var(x2);
            else if (auto it = res.find(x2); it != res.end()) p = it->second;
            else throw NonDeterministicUpdate(st.in[j]);
            for (auto &v : p.vars())
                if (!known.count(v)) throw NonPolynomialUpdate(st.in[j]);
            step_rhs[s.functions[j]] = p.substitute(to_calls);
        }
    }
    const LinTerm k = LinTerm::var(st.counter);
    int id = 0;
    for (std::size_t j = 0; j < s.functions.size(); ++j) {
        const std::string &f = s.functions[j];
        if (st.has_step) {
            RecEq e;
            e.id = "e" + std::to_string(++id);
            e.fn = f;
            e.counter = st.counter;
            e.params = s.params;
            e.rhs = step_rhs.at(f);
            e.condition.add(LinConstraint::gt(k, LinTerm{}));
            if (fresh_counters)
                for (auto &c : st.carried) e.condition.add(LinConstraint::ge(LinTerm::var(c), LinTerm{}));
            s.eqs.push_back(e);
        }
        RecEq b;
        b.id = "e" + std::to_string(++id);
        b.fn = f;
        b.counter = st.counter;
        b.params = s.params;
        b.rhs = Polynomial::var(st.in[j]);
        b.condition.add(LinConstraint::eq(k, LinTerm{}));
        b.base = true;
        s.eqs.push_back(b);
    }
    return s;
}

// ---------------------------------------------------------------------
// Equation graph.

inline const std::string kEntry = "entry";
inline const std::string kHalt = "halt";

struct EqEdge {
    std::string from, eq, to;
};

struct EqGraph {
    std::vector<std::string> nodes;
    std::vector<EqEdge> edges;
    std::string entry = kEntry, exit = kHalt;
};

/// Nodes are the functions plus entry and halt. Entry edges (e0) lead to
/// functions no other function calls; base equations lead to halt and a
/// recursive equation has one edge per function it applies.
inline EqGraph build_eq_graph(const EqSystem &s) {
    EqGraph g;
    g.nodes.push_back(kEntry);
    for (auto &f : s.functions) g.nodes.push_back(f);
    g.nodes.push_back(kHalt);
    std::set<std::string> called;
    for (auto &e : s.eqs)
        for (auto &c : e.calls())
            if (c != e.fn) called.insert(c);
    std::vector<std::string> roots;
    for (auto &f : s.functions)
        if (!called.count(f)) roots.push_back(f);
    if (roots.empty() && !s.functions.empty()) roots.push_back(s.functions.front());
    for (auto &f : roots) g.edges.push_back({kEntry, "e0", f});
    for (auto &e : s.eqs) {
        if (e.base) {
            g.edges.push_back({e.fn, e.id, kHalt});
            continue;
        }
        for (auto &c : e.calls()) g.edges.push_back({e.fn, e.id, c});
    }
    return g;
}

/// Function groups in callee-first order. Self-recursion is fine; an SCC
/// with two or more functions is rejected.
inline std::vector<std::vector<std::string>> scc_order(const EqSystem &s) {
    std::map<std::string, std::vector<std::string>> succ;
    for (auto &e : s.eqs)
        for (auto &c : e.calls())
            if (c != e.fn) succ[e.fn].push_back(c);
    std::map<std::string, int> index, low;
    std::vector<std::string> stack;
    std::set<std::string> on_stack;
    std::vector<std::vector<std::string>> out;
    int counter = 0;
    std::function<void(const std::string &)> strong = [&](const std::string &v) {
        index[v] = low[v] = counter++;
        stack.push_back(v);
        on_stack.insert(v);
        for (auto &w : succ[v]) {
            if (!index.count(w)) {
                strong(w);
                low[v] = std::min(low[v], low[w]);
            } else if (on_stack.count(w)) {
                low[v] = std::min(low[v], index[w]);
            }
        }
        if (low[v] == index[v]) {
            std::vector<std::string> comp;
            std::string w;
            do {
                w = stack.back();
                stack.pop_back();
                on_stack.erase(w);
                comp.push_back(w);
            } while (w != v);
            std::sort(comp.begin(), comp.end());
            if (comp.size() > 1) throw CyclicDependency(comp);
            out.push_back(comp);
        }
    };
    for (auto &f : s.functions)
        if (!index.count(f)) strong(f);
    return out;
}

// ---------------------------------------------------------------------
// Unfold-fold to an accumulating loop.

/// f(x) = e(x) + a*f(call_args(x)) when guard holds, f(x) = base(x) when
/// base_guard holds.
struct NonTailRec {
    std::string name;
    std::vector<Var> params;
    ConstraintStore guard;
    std::vector<LinTerm> call_args;
    Polynomial add;
    Rational coeff = 1;
    std::size_t n_calls = 1;
    Polynomial base;
    ConstraintStore base_guard;

    /// Direct recursive evaluation; nullopt if no case applies or depth runs out.
    std::optional<Rational> eval(std::vector<Rational> x, std::size_t depth = 10000) const {
        Rational acc = 0, scale = 1;
        for (std::size_t d = 0; d < depth; ++d) {
            std::map<Var, Rational> env;
            for (std::size_t i = 0; i < params.size(); ++i) env[params[i]] = x[i];
            if (guard.holds(env)) {
                acc += scale * add.evaluate(env);
                scale *= coeff;
                std::vector<Rational> nx;
                for (auto &t : call_args) nx.push_back(t.partial_eval(env).constant());
                x = std::move(nx);
            } else if (base_guard.holds(env)) {
                return acc + scale * base.evaluate(env);
            } else {
                return std::nullopt;
            }
        }
        return std::nullopt;
    }
};

/// Emits `name(x, W)` delegating to the tail-recursive `name_aux(x, Z, W)`
/// where Z accumulates e(x) and W carries the result unchanged.
inline chc::Program to_accumulator(const NonTailRec &r) {
    if (r.n_calls != 1) throw UnsupportedShape(r.name + ": expected exactly one recursive call");
    if (r.coeff != 1) throw UnsupportedShape(r.name + ": recursive call has coefficient " + to_string(r.coeff));
    auto e = r.add.as_linear();
    auto b = r.base.as_linear();
    if (!e || !b) throw UnsupportedShape(r.name + ": accumulated term is not linear");
    if (r.call_args.size() != r.params.size()) throw UnsupportedShape(r.name + ": call arity mismatch");

    const std::string aux = r.name + "_aux";
    const std::size_t n = r.params.size();
    VarSet used(r.params.begin(), r.params.end());
    std::vector<Var> x2;
    for (auto &v : r.params) x2.push_back(chc::fresh_var(v, used));
    auto pick = [&](const Var &base) {
        if (used.insert(base).second) return base;
        return chc::fresh_var(base, used);
    };
    Var z = pick("Z"), z2 = pick("Z"), w = pick("W"), w2 = pick("W");
    std::map<Var, LinTerm> call;
    for (std::size_t i = 0; i < n; ++i) call[r.params[i]] = r.call_args[i];

    auto head_args = [&](std::vector<Var> xs, std::initializer_list<Var> extra) {
        xs.insert(xs.end(), extra);
        return xs;
    };
    chc::Program p;
    p.entry = r.name;
    p.entry_arity = n + 1;

    // name(x, W) :- guard, X2 = call(x), Z2 = e(x), name_aux(X2, Z2, W).
    chc::Clause top;
    top.id = "c1";
    top.head = chc::Atom{r.name, head_args(r.params, {w})};
    top.constraint = r.guard;
    for (std::size_t i = 0; i < n; ++i) top.constraint.add(LinConstraint::eq(LinTerm::var(x2[i]), r.call_args[i]));
    top.constraint.add(LinConstraint::eq(LinTerm::var(z2), *e));
    top.body = {chc::Atom{aux, head_args(x2, {z2, w})}};

    chc::Clause top_base;
    top_base.id = "c2";
    top_base.head = chc::Atom{r.name, head_args(r.params, {w})};
    top_base.constraint = r.base_guard;
    top_base.constraint.add(LinConstraint::eq(LinTerm::var(w), *b));

    chc::Clause step;
    step.id = "c3";
    step.head = chc::Atom{aux, head_args(r.params, {z, w})};
    step.constraint = r.guard;
    for (std::size_t i = 0; i < n; ++i) step.constraint.add(LinConstraint::eq(LinTerm::var(x2[i]), r.call_args[i]));
    step.constraint.add(LinConstraint::eq(LinTerm::var(z2), *e + LinTerm::var(z)));
    step.constraint.add(LinConstraint::eq(LinTerm::var(w2), LinTerm::var(w)));
    step.body = {chc::Atom{aux, head_args(x2, {z2, w2})}};

    chc::Clause exit;
    exit.id = "c4";
    exit.head = chc::Atom{aux, head_args(r.params, {z, w})};
    exit.constraint = r.base_guard;
    exit.constraint.add(LinConstraint::eq(LinTerm::var(w), LinTerm::var(z) + *b));

    p.clauses = {top, top_base, step, exit};
    return p;
}

} // namespace loopsum::rec
