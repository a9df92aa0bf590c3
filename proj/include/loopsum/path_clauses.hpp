#pragma once

// Path clauses: one predicate path_e(p(x), q(x')) per subexpression e of a
// path expression, start node p and end node q. A path predicate takes the
// start-node arguments followed by the end-node arguments.

#include "loopsum/regex.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace loopsum::pc {

using chc::Atom;
using chc::Clause;
using lin::ConstraintStore;
using lin::LinConstraint;
using lin::LinTerm;

/// Canonical argument names of every CFG node. Predicates take the head
/// arguments of their first defining clause. `true` carries the state of
/// the exiting predicate when all exits agree on arity, so the top-level
/// path predicate exposes the final values; `false` has no arguments.
inline std::map<std::string, std::vector<Var>> node_args(const chc::Program &p) {
    std::map<std::string, std::vector<Var>> out;
    for (auto &c : p.clauses) {
        if (c.head.pred != chc::kFalse && !out.count(c.head.pred)) out[c.head.pred] = c.head.args;
    }
    for (auto &c : p.clauses)
        for (auto &a : c.body)
            if (a.pred != chc::kFalse && !out.count(a.pred)) out[a.pred] = a.args;
    // Only exits reachable from the entry name the true node's arguments.
    std::set<std::string> reach;
    std::vector<std::string> todo;
    if (!p.entry.empty()) todo.push_back(p.entry);
    while (!todo.empty()) {
        std::string n = todo.back();
        todo.pop_back();
        if (!reach.insert(n).second) continue;
        for (auto &c : p.clauses)
            if (c.head.pred == n)
                for (auto &a : c.body) todo.push_back(a.pred);
    }
    std::optional<std::vector<Var>> exit;
    bool uniform = true;
    for (auto &c : p.clauses) {
        if (!c.is_fact() || c.head.pred == chc::kFalse) continue;
        if (!p.entry.empty() && !reach.count(c.head.pred)) continue;
        const auto &args = out.at(c.head.pred);
        if (!exit) exit = args;
        else if (exit->size() != args.size()) uniform = false;
    }
    out[chc::kTrue] = uniform && exit ? *exit : std::vector<Var>{};
    out[chc::kFalse] = {};
    return out;
}

struct PathPred {
    std::string name;
    rx::Re expr;
    std::string start, end;
    std::size_t in_arity = 0, out_arity = 0;
    bool is_star = false;
    int index = 0; // preorder position of expr in the full expression
};

struct PathProgram {
    std::vector<PathPred> preds;
    std::vector<Clause> clauses;
    std::string root;
    std::vector<Var> root_in; // canonical start-node names

    const PathPred *pred(const std::string &name) const {
        for (auto &p : preds)
            if (p.name == name) return &p;
        return nullptr;
    }
    std::vector<const Clause *> clauses_of(const std::string &name) const {
        std::vector<const Clause *> out;
        for (auto &c : clauses)
            if (c.head.pred == name) out.push_back(&c);
        return out;
    }
    /// Star predicates in preorder-index order.
    std::vector<const PathPred *> stars() const {
        std::vector<const PathPred *> out;
        for (auto &p : preds)
            if (p.is_star) out.push_back(&p);
        std::sort(out.begin(), out.end(), [](auto *a, auto *b) { return a->index < b->index; });
        return out;
    }
    std::string to_string() const {
        const PathPred *r = pred(root);
        std::string s = "entry(" + root + "/" + std::to_string(r ? r->in_arity + r->out_arity : 0) + ").\n";
        for (auto &c : clauses) s += c.to_string() + "\n";
        return s;
    }
};

namespace detail {

struct ReLess {
    bool operator()(const rx::Re &a, const rx::Re &b) const { return rx::compare(a, b) < 0; }
};

// First preorder index of every distinct subexpression.
inline std::map<rx::Re, int, ReLess> preorder(const rx::Re &e) {
    std::map<rx::Re, int, ReLess> idx;
    int n = 0;
    std::function<void(const rx::Re &)> go = [&](const rx::Re &x) {
        ++n;
        idx.emplace(x, n);
        if (x->a) go(x->a);
        if (x->b) go(x->b);
    };
    go(e);
    return idx;
}

class Generator {
public:
    Generator(const chc::Program &p, const Cfg &g) : prog_(p), cfg_(g), args_(node_args(p)) {}

    PathProgram run(const rx::Re &e, const std::string &start) {
        index_ = preorder(e);
        root_ = e;
        out_.root = "path";
        out_.root_in = args_.at(start);
        auto ends = gen(e, start);
        if (ends.empty()) out_.root.clear();
        return std::move(out_);
    }

private:
    const chc::Program &prog_;
    const Cfg &cfg_;
    std::map<std::string, std::vector<Var>> args_;
    std::map<rx::Re, int, ReLess> index_;
    rx::Re root_;
    PathProgram out_;
    std::map<std::pair<rx::Re, std::string>, std::map<std::string, std::string>,
             std::function<bool(const std::pair<rx::Re, std::string> &, const std::pair<rx::Re, std::string> &)>>
        memo_{[](auto &x, auto &y) {
            int c = rx::compare(x.first, y.first);
            return c != 0 ? c < 0 : x.second < y.second;
        }};
    int clause_counter_ = 0;

    const std::vector<Var> &args(const std::string &n) const { return args_.at(n); }

    std::string name_for(const rx::Re &e, const std::string &p, const std::string &end, std::size_t n_ends) {
        std::string base = (e == root_ || rx::same(e, root_)) && p == prog_.entry ? "path"
                                                                                   : p + std::to_string(index_.at(e));
        if (base == "path" && p != prog_.entry) base = p + std::to_string(index_.at(e));
        return n_ends > 1 ? base + "_" + end : base;
    }

    // Fresh clause skeleton: head args are start names then fresh end names.
    struct Frame {
        VarSet used;
        std::vector<Var> in, out;
    };
    Frame frame(const std::string &p, const std::string &q) {
        Frame f;
        f.in = args(p);
        f.used.insert(f.in.begin(), f.in.end());
        for (auto &v : args(q)) f.out.push_back(chc::fresh_var(v, f.used));
        return f;
    }
    std::vector<Var> fresh_tuple(const std::string &q, VarSet &used) {
        std::vector<Var> r;
        for (auto &v : args(q)) r.push_back(chc::fresh_var(v, used));
        return r;
    }
    static std::vector<Var> cat(const std::vector<Var> &a, const std::vector<Var> &b) {
        std::vector<Var> r = a;
        r.insert(r.end(), b.begin(), b.end());
        return r;
    }
    void emit(const std::string &pred, const std::vector<Var> &head, ConstraintStore cs, std::vector<Atom> body) {
        Clause c;
        c.id = "p" + std::to_string(++clause_counter_);
        c.head = Atom{pred, head};
        c.constraint = std::move(cs);
        c.body = std::move(body);
        out_.clauses.push_back(std::move(c));
    }
    std::string declare(const rx::Re &e, const std::string &p, const std::string &q, std::size_t n_ends) {
        PathPred pp;
        pp.name = name_for(e, p, q, n_ends);
        pp.expr = e;
        pp.start = p;
        pp.end = q;
        pp.in_arity = args(p).size();
        pp.out_arity = args(q).size();
        pp.is_star = e->kind == rx::Kind::Star;
        pp.index = index_.at(e);
        out_.preds.push_back(pp);
        return pp.name;
    }

    static ConstraintStore identity(const std::vector<Var> &out, const std::vector<Var> &in) {
        ConstraintStore s;
        for (std::size_t i = 0; i < out.size(); ++i) s.add(LinConstraint::eq(LinTerm::var(out[i]), LinTerm::var(in[i])));
        return s;
    }

    // Returns end node -> predicate name.
    std::map<std::string, std::string> gen(const rx::Re &e, const std::string &p) {
        auto key = std::make_pair(e, p);
        if (auto it = memo_.find(key); it != memo_.end()) return it->second;
        std::map<std::string, std::string> res;
        switch (e->kind) {
        case rx::Kind::Empty: break;
        case rx::Kind::Letter: {
            const CfgEdge &edge = rx::edge_of(cfg_, e->letter);
            if (edge.from != p) break;
            const Clause &c = prog_.at(e->letter);
            std::string q = c.target();
            std::string name = declare(e, p, q, 1);
            res[q] = name;
            Frame f = frame(p, q);
            std::map<Var, Var> ren;
            for (std::size_t i = 0; i < c.head.args.size(); ++i) ren[c.head.args[i]] = f.in[i];
            for (auto &v : c.vars())
                if (!ren.count(v)) ren[v] = chc::fresh_var(v, f.used);
            ConstraintStore cs = c.constraint.rename(ren);
            if (!c.body.empty()) {
                for (std::size_t i = 0; i < c.body[0].args.size(); ++i)
                    cs.add(LinConstraint::eq(LinTerm::var(f.out[i]), LinTerm::var(ren.at(c.body[0].args[i]))));
            } else if (f.out.size() == f.in.size()) {
                cs.add_all(identity(f.out, f.in));
            }
            emit(name, cat(f.in, f.out), cs, {});
            break;
        }
        case rx::Kind::Epsilon: {
            std::string name = declare(e, p, p, 1);
            res[p] = name;
            Frame f = frame(p, p);
            emit(name, cat(f.in, f.out), identity(f.out, f.in), {});
            break;
        }
        case rx::Kind::Concat: {
            auto m1 = gen(e->a, p);
            std::map<std::string, std::vector<std::pair<std::string, std::string>>> by_end; // r -> (q, pred2)
            std::map<std::string, std::map<std::string, std::string>> m2s;
            for (auto &[q, n1] : m1) {
                m2s[q] = gen(e->b, q);
                for (auto &[r, n2] : m2s[q]) by_end[r].push_back({q, n2});
            }
            for (auto &[r, parts] : by_end) res[r] = declare(e, p, r, by_end.size());
            for (auto &[r, parts] : by_end)
                for (auto &[q, n2] : parts) {
                    Frame f = frame(p, r);
                    std::vector<Var> mid = fresh_tuple(q, f.used);
                    emit(res[r], cat(f.in, f.out), {}, {Atom{m1.at(q), cat(f.in, mid)}, Atom{n2, cat(mid, f.out)}});
                }
            break;
        }
        case rx::Kind::Alt: {
            auto m1 = gen(e->a, p), m2 = gen(e->b, p);
            std::set<std::string> ends;
            for (auto &[r, n] : m1) ends.insert(r);
            for (auto &[r, n] : m2) ends.insert(r);
            for (auto &r : ends) res[r] = declare(e, p, r, ends.size());
            for (auto &r : ends)
                for (auto *m : {&m1, &m2})
                    if (m->count(r)) {
                        Frame f = frame(p, r);
                        emit(res[r], cat(f.in, f.out), {}, {Atom{m->at(r), cat(f.in, f.out)}});
                    }
            break;
        }
        case rx::Kind::Star: {
            auto mb = gen(e->a, p);
            std::string name = declare(e, p, p, 1);
            res[p] = name;
            Frame f = frame(p, p);
            emit(name, cat(f.in, f.out), identity(f.out, f.in), {});
            if (mb.count(p)) {
                Frame g = frame(p, p);
                std::vector<Var> mid = fresh_tuple(p, g.used);
                emit(name, cat(g.in, g.out), {}, {Atom{name, cat(g.in, mid)}, Atom{mb.at(p), cat(mid, g.out)}});
            }
            break;
        }
        }
        memo_.emplace(key, res);
        return res;
    }
};

} // namespace detail

/// Path clauses for `e` starting at `start`.
inline PathProgram generate(const chc::Program &p, const rx::Re &e, const std::string &start) {
    Cfg g = build_cfg(p);
    return detail::Generator(p, g).run(e, start);
}

// ---------------------------------------------------------------------
// Unfolding and simplification.

namespace detail {

inline VarSet atom_vars(const Clause &c) {
    VarSet s(c.head.args.begin(), c.head.args.end());
    for (auto &a : c.body) s.insert(a.args.begin(), a.args.end());
    return s;
}

inline void substitute_clause(Clause &c, const Var &v, const LinTerm &t) {
    c.constraint = c.constraint.substitute(v, t);
}

inline bool atoms_distinct_after(const Clause &c, const Var &from, const Var &to) {
    auto ok = [&](const Atom &a) {
        std::set<Var> seen;
        for (auto v : a.args) {
            if (v == from) v = to;
            if (!seen.insert(v).second) return false;
        }
        return true;
    };
    if (!ok(c.head)) return false;
    return std::all_of(c.body.begin(), c.body.end(), ok);
}

inline void rename_in_atoms(Clause &c, const Var &from, const Var &to) {
    for (auto &v : c.head.args)
        if (v == from) v = to;
    for (auto &a : c.body)
        for (auto &v : a.args)
            if (v == from) v = to;
}

} // namespace detail

/// Eliminates variables outside atoms through equalities, merges variable
/// aliases where atoms stay duplicate-free, and removes duplicate or
/// trivially true constraints. Returns nullopt if the clause is infeasible.
inline std::optional<Clause> simplify_clause(Clause c) {
    // Pass 1: solve equalities for variables not occurring in atoms.
    for (bool changed = true; changed;) {
        changed = false;
        VarSet in_atoms = detail::atom_vars(c);
        const auto &cs = c.constraint.constraints();
        for (std::size_t i = 0; i < cs.size() && !changed; ++i) {
            if (cs[i].rel != lin::Rel::Eq) continue;
            for (auto &[v, a] : cs[i].lhs.coeffs()) {
                if (in_atoms.count(v)) continue;
                LinTerm t = cs[i].lhs;
                t.add(v, -a);
                t *= Rational(-1) / a;
                ConstraintStore rest;
                for (std::size_t j = 0; j < cs.size(); ++j)
                    if (j != i) rest.add(cs[j].substitute(v, t));
                c.constraint = rest;
                changed = true;
                break;
            }
        }
    }
    // Pass 2: merge v = w between atom variables.
    for (bool changed = true; changed;) {
        changed = false;
        const auto &cs = c.constraint.constraints();
        for (std::size_t i = 0; i < cs.size() && !changed; ++i) {
            const auto &l = cs[i].lhs;
            if (cs[i].rel != lin::Rel::Eq || l.constant() != 0 || l.coeffs().size() != 2) continue;
            auto it = l.coeffs().begin();
            auto [v, a] = *it++;
            auto [w, b] = *it;
            if (a != -b) continue;
            auto in_body = [&](const Var &x) {
                for (auto &at : c.body)
                    if (std::count(at.args.begin(), at.args.end(), x)) return true;
                return false;
            };
            // Replace a head-only variable by its body-side alias.
            Var from = w, to = v;
            if (in_body(w) && !in_body(v)) std::swap(from, to);
            else if (in_body(v) == in_body(w) && v > w) std::swap(from, to);
            if (!detail::atoms_distinct_after(c, from, to)) {
                std::swap(from, to);
                if (!detail::atoms_distinct_after(c, from, to)) continue;
            }
            ConstraintStore rest;
            for (std::size_t j = 0; j < cs.size(); ++j)
                if (j != i) rest.add(cs[j].substitute(from, LinTerm::var(to)));
            c.constraint = rest;
            detail::rename_in_atoms(c, from, to);
            changed = true;
        }
    }
    ConstraintStore kept;
    for (auto &k : c.constraint.deduped()) {
        if (k.lhs.is_constant()) {
            if (!k.holds_constant()) return std::nullopt;
            continue;
        }
        kept.add(k);
    }
    c.constraint = kept;
    if (!lin::is_sat(c.constraint)) return std::nullopt;
    return c;
}

/// Inlines every predicate other than the root and the star predicates,
/// then simplifies. Output order: root clauses, then each star predicate
/// (base before step) by preorder index.
inline PathProgram unfold_simplify(const PathProgram &in) {
    std::set<std::string> keep{in.root};
    for (auto *s : in.stars()) keep.insert(s->name);
    std::map<std::string, std::vector<Clause>> defs;
    for (auto &c : in.clauses) defs[c.head.pred].push_back(c);

    std::function<std::vector<Clause>(const Clause &)> expand = [&](const Clause &c) -> std::vector<Clause> {
        for (std::size_t i = 0; i < c.body.size(); ++i) {
            const Atom &atom = c.body[i];
            if (keep.count(atom.pred)) continue;
            std::vector<Clause> out;
            for (auto &d : defs[atom.pred]) {
                VarSet used = c.vars();
                std::map<Var, Var> ren;
                for (std::size_t j = 0; j < d.head.args.size(); ++j) ren[d.head.args[j]] = atom.args[j];
                for (auto &v : d.vars())
                    if (!ren.count(v)) {
                        std::string base = v;
                        if (auto us = base.find('_'); us != std::string::npos) base = base.substr(0, us);
                        ren[v] = chc::fresh_var(base, used);
                    }
                Clause n = c;
                n.constraint = c.constraint.conj(d.constraint.rename(ren));
                n.body.clear();
                for (std::size_t j = 0; j < i; ++j) n.body.push_back(c.body[j]);
                for (auto &b : d.body) {
                    Atom r{b.pred, {}};
                    for (auto &v : b.args) r.args.push_back(ren.at(v));
                    n.body.push_back(r);
                }
                for (std::size_t j = i + 1; j < c.body.size(); ++j) n.body.push_back(c.body[j]);
                for (auto &e : expand(n)) out.push_back(std::move(e));
            }
            return out;
        }
        return {c};
    };

    PathProgram out;
    out.root = in.root;
    out.root_in = in.root_in;
    std::vector<std::string> order{in.root};
    for (auto *s : in.stars())
        if (s->name != in.root) order.push_back(s->name);
    int n = 0;
    for (auto &name : order) {
        if (const PathPred *p = in.pred(name)) out.preds.push_back(*p);
        // Base clauses (no body atom of the same predicate) before steps.
        std::vector<Clause> base, step;
        for (auto &c : defs[name]) {
            bool rec = std::any_of(c.body.begin(), c.body.end(), [&](const Atom &a) { return a.pred == name; });
            for (auto &e : expand(c))
                if (auto s = simplify_clause(e)) (rec ? step : base).push_back(*s);
        }
        for (auto *v : {&base, &step})
            for (auto &c : *v) {
                c.id = "p" + std::to_string(++n);
                out.clauses.push_back(c);
            }
    }
    return out;
}

// ---------------------------------------------------------------------
// Counters.

class NotDirectlyRecursive : public Error {
public:
    explicit NotDirectlyRecursive(const std::string &pred)
        : Error("counters", "predicate " + pred + " is not a directly recursive single-path loop") {}
};

struct CountedLoop {
    std::string pred;
    Var counter;
    std::vector<Var> in, out; // head arguments after the counter
    Clause base, step;
    std::vector<std::string> callees; // other loops called from the step
};

struct CountedProgram {
    std::string root;
    std::vector<Var> root_in;
    std::vector<CountedLoop> loops; // callees first
    std::vector<Clause> top;

    const CountedLoop *loop(const std::string &pred) const {
        for (auto &l : loops)
            if (l.pred == pred) return &l;
        return nullptr;
    }
    std::string to_string() const {
        std::size_t ar = top.empty() ? 0 : top.front().head.args.size();
        std::string s = "entry(" + root + "/" + std::to_string(ar) + ").\n";
        for (auto &c : top) s += c.to_string() + "\n";
        for (auto &l : loops) s += l.base.to_string() + "\n" + l.step.to_string() + "\n";
        return s;
    }
};

/// Adds a leading counter argument to every star predicate. Counters are
/// named k1, k2, ... in callee-first order; each call site uses the callee's
/// counter name the first time it is called and a fresh kN afterwards.
inline CountedProgram add_counters(const PathProgram &pp) {
    CountedProgram out;
    out.root = pp.root;
    out.root_in = pp.root_in;
    std::vector<const PathPred *> stars = pp.stars();
    std::set<std::string> star_names;
    for (auto *s : stars) star_names.insert(s->name);

    // Shape check and call graph.
    std::map<std::string, const Clause *> base_of, step_of;
    std::map<std::string, std::set<std::string>> calls;
    for (auto *s : stars) {
        for (auto *c : pp.clauses_of(s->name)) {
            bool rec = false;
            for (auto &a : c->body) {
                if (a.pred == s->name) rec = true;
                else if (star_names.count(a.pred)) calls[s->name].insert(a.pred);
            }
            auto &slot = rec ? step_of[s->name] : base_of[s->name];
            if (slot) throw NotDirectlyRecursive(s->name);
            slot = c;
            if (rec) {
                const Atom &first = c->body.front();
                std::size_t n = s->in_arity;
                bool shape = first.pred == s->name && std::count_if(c->body.begin(), c->body.end(), [&](const Atom &a) {
                                                          return a.pred == s->name;
                                                      }) == 1;
                for (std::size_t i = 0; shape && i < n; ++i) shape = first.args[i] == c->head.args[i];
                if (!shape) throw NotDirectlyRecursive(s->name);
            }
        }
        if (!base_of[s->name]) throw NotDirectlyRecursive(s->name);
    }
    // Callee-first order, ties by preorder index; reject cycles.
    std::vector<const PathPred *> order;
    std::set<std::string> done, active;
    std::function<void(const PathPred *)> visit = [&](const PathPred *s) {
        if (done.count(s->name)) return;
        if (active.count(s->name)) throw NotDirectlyRecursive(s->name);
        active.insert(s->name);
        for (auto *t : stars)
            if (calls[s->name].count(t->name)) visit(t);
        active.erase(s->name);
        done.insert(s->name);
        order.push_back(s);
    };
    for (auto *s : stars) visit(s);

    std::map<std::string, Var> counter_of;
    int next = 0;
    for (auto *s : order) counter_of[s->name] = "k" + std::to_string(++next);
    std::set<std::string> used_sites;
    auto site_counter = [&](const std::string &callee) {
        if (used_sites.insert(callee).second) return counter_of.at(callee);
        return Var("k" + std::to_string(++next));
    };
    auto instrument_calls = [&](Clause &c, const std::string &self) {
        for (auto &a : c.body)
            if (star_names.count(a.pred) && a.pred != self) a.args.insert(a.args.begin(), site_counter(a.pred));
    };

    for (auto *s : order) {
        CountedLoop L;
        L.pred = s->name;
        L.counter = counter_of.at(s->name);
        const Clause &b = *base_of.at(s->name);
        L.in.assign(b.head.args.begin(), b.head.args.begin() + static_cast<long>(s->in_arity));
        L.out.assign(b.head.args.begin() + static_cast<long>(s->in_arity), b.head.args.end());
        L.base = b;
        L.base.head.args.insert(L.base.head.args.begin(), L.counter);
        L.base.constraint.add(LinConstraint::eq(LinTerm::var(L.counter), LinTerm{}));
        if (auto it = step_of.find(s->name); it != step_of.end() && it->second) {
            Clause st = *it->second;
            VarSet used = st.vars();
            used.insert(L.counter);
            Var prev = chc::fresh_var(L.counter, used);
            st.head.args.insert(st.head.args.begin(), L.counter);
            st.body.front().args.insert(st.body.front().args.begin(), prev);
            ConstraintStore cs;
            cs.add(LinConstraint::gt(LinTerm::var(L.counter), LinTerm{}));
            cs.add(LinConstraint::eq(LinTerm::var(prev), LinTerm::var(L.counter) - LinTerm(1)));
            cs.add_all(st.constraint);
            st.constraint = cs;
            instrument_calls(st, s->name);
            L.step = st;
            for (auto &c : calls[s->name]) L.callees.push_back(c);
        } else {
            // A star whose body never returns: only the base exists.
            L.step = Clause{};
        }
        out.loops.push_back(std::move(L));
    }
    for (auto &c : pp.clauses) {
        if (c.head.pred != pp.root || star_names.count(pp.root)) continue;
        Clause t = c;
        instrument_calls(t, "");
        out.top.push_back(std::move(t));
    }
    return out;
}

// ---------------------------------------------------------------------
// Bounded evaluation of path programs on concrete inputs. Used as an
// oracle: the relation computed for the root must match the terminal
// states found by direct simulation.

class EvalBudget : public Error {
public:
    EvalBudget() : Error("eval", "evaluation budget exhausted") {}
};

class Evaluator {
public:
    using Tuple = std::vector<Rational>;

    /// `in_arity` gives, per predicate, how many leading arguments are inputs.
    Evaluator(std::vector<Clause> clauses, std::map<std::string, std::size_t> in_arity, std::size_t budget = 200)
        : clauses_(std::move(clauses)), in_arity_(std::move(in_arity)), budget_(budget) {}

    std::set<Tuple> solve(const std::string &pred, const Tuple &in) {
        auto key = std::make_pair(pred, in);
        if (auto it = done_.find(key); it != done_.end()) return it->second;
        if (auto it = partial_.find(key); it != partial_.end()) return it->second;
        partial_[key] = {};
        for (std::size_t round = 0;; ++round) {
            if (round > budget_) throw EvalBudget();
            std::set<Tuple> next;
            for (auto &c : clauses_)
                if (c.head.pred == pred)
                    for (auto &t : eval_clause(c, in)) next.insert(t);
            if (next == partial_[key]) break;
            partial_[key] = next;
        }
        std::set<Tuple> r = partial_[key];
        partial_.erase(key);
        done_[key] = r;
        return r;
    }

private:
    std::vector<Clause> clauses_;
    std::map<std::string, std::size_t> in_arity_;
    std::size_t budget_;
    std::map<std::pair<std::string, Tuple>, std::set<Tuple>> done_, partial_;

    using Env = std::map<Var, Rational>;

    // Propagates equalities with a single unknown variable.
    static void propagate(const ConstraintStore &cs, Env &env) {
        for (bool changed = true; changed;) {
            changed = false;
            for (auto &c : cs) {
                if (c.rel != lin::Rel::Eq) continue;
                LinTerm t = c.lhs.partial_eval(env);
                if (t.coeffs().size() != 1) continue;
                auto [v, a] = *t.coeffs().begin();
                env[v] = -t.constant() / a;
                changed = true;
            }
        }
    }
    // True if some already-ground constraint fails.
    static bool violated(const ConstraintStore &cs, const Env &env) {
        for (auto &k : cs) {
            LinTerm t = k.lhs.partial_eval(env);
            if (t.is_constant() && !LinConstraint{t, k.rel}.holds_constant()) return true;
        }
        return false;
    }
    static Rational need(const Env &env, const Var &v) {
        auto it = env.find(v);
        if (it == env.end()) throw Error("eval", "variable " + v + " is not determined");
        return it->second;
    }

    std::vector<Tuple> eval_clause(const Clause &c, const Tuple &in) {
        std::size_t n_in = in_arity_.at(c.head.pred);
        Env env0;
        for (std::size_t i = 0; i < n_in; ++i) env0[c.head.args[i]] = in[i];
        std::vector<Env> envs{env0};
        for (auto &atom : c.body) {
            std::vector<Env> next;
            std::size_t k = in_arity_.at(atom.pred);
            for (auto &e0 : envs) {
                Env e = e0;
                propagate(c.constraint, e);
                if (violated(c.constraint, e)) continue;
                Tuple ain;
                for (std::size_t i = 0; i < k; ++i) ain.push_back(need(e, atom.args[i]));
                for (auto &res : solve(atom.pred, ain)) {
                    Env e2 = e;
                    bool ok = true;
                    for (std::size_t i = k; i < atom.args.size(); ++i) {
                        auto [it, fresh] = e2.emplace(atom.args[i], res[i - k]);
                        if (!fresh && it->second != res[i - k]) ok = false;
                    }
                    if (ok) next.push_back(std::move(e2));
                }
            }
            envs = std::move(next);
        }
        std::vector<Tuple> out;
        for (auto &e : envs) {
            propagate(c.constraint, e);
            bool ok = true;
            for (auto &k : c.constraint) {
                LinTerm t = k.lhs.partial_eval(e);
                if (!t.is_constant()) throw Error("eval", "constraint " + k.to_string() + " not ground");
                if (!lin::LinConstraint{t, k.rel}.holds_constant()) ok = false;
            }
            if (!ok) continue;
            Tuple t;
            for (std::size_t i = n_in; i < c.head.args.size(); ++i) t.push_back(need(e, c.head.args[i]));
            out.push_back(t);
        }
        return out;
    }
};

/// Terminal valuations of a path program for concrete inputs of its root.
inline std::set<std::vector<Rational>> eval_path_program(const PathProgram &pp, const std::vector<Rational> &in,
                                                         std::size_t budget = 200) {
    std::map<std::string, std::size_t> ar;
    for (auto &p : pp.preds) ar[p.name] = p.in_arity;
    Evaluator ev(pp.clauses, ar, budget);
    return ev.solve(pp.root, in);
}

} // namespace loopsum::pc
