#pragma once

// Regular expressions over clause identifiers, path expressions of a CFG
// by state elimination, and removal of alternation under stars.

#include "loopsum/cfg.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

namespace loopsum::rx {

enum class Kind { Letter, Epsilon, Empty, Concat, Alt, Star };

class RegExpr;
using Re = std::shared_ptr<const RegExpr>;

class RegExpr {
public:
    Kind kind;
    std::string letter; // Letter only
    Re a, b;            // operands (b unused for Star)

    RegExpr(Kind k, std::string l, Re x, Re y) : kind(k), letter(std::move(l)), a(std::move(x)), b(std::move(y)) {}
};

/// Total structural order; equal iff structurally identical.
inline int compare(const Re &x, const Re &y) {
    if (x == y) return 0;
    if (x->kind != y->kind) return x->kind < y->kind ? -1 : 1;
    switch (x->kind) {
    case Kind::Letter:
        if (x->letter == y->letter) return 0;
        return natural_less(x->letter, y->letter) ? -1 : 1;
    case Kind::Epsilon:
    case Kind::Empty: return 0;
    case Kind::Star: return compare(x->a, y->a);
    default:
        if (int c = compare(x->a, y->a)) return c;
        return compare(x->b, y->b);
    }
}
inline bool same(const Re &x, const Re &y) { return compare(x, y) == 0; }

inline Re epsilon() {
    static const Re e = std::make_shared<RegExpr>(Kind::Epsilon, "", nullptr, nullptr);
    return e;
}
inline Re empty() {
    static const Re e = std::make_shared<RegExpr>(Kind::Empty, "", nullptr, nullptr);
    return e;
}
inline Re letter(const std::string &c) { return std::make_shared<RegExpr>(Kind::Letter, c, nullptr, nullptr); }

inline Re concat(const Re &x, const Re &y) {
    if (x->kind == Kind::Empty || y->kind == Kind::Empty) return empty();
    if (x->kind == Kind::Epsilon) return y;
    if (y->kind == Kind::Epsilon) return x;
    if (x->kind == Kind::Concat) return concat(x->a, concat(x->b, y));
    return std::make_shared<RegExpr>(Kind::Concat, "", x, y);
}
inline Re alt(const Re &x, const Re &y) {
    if (x->kind == Kind::Empty) return y;
    if (y->kind == Kind::Empty) return x;
    if (same(x, y)) return x;
    return std::make_shared<RegExpr>(Kind::Alt, "", x, y);
}
inline Re star(const Re &x) {
    if (x->kind == Kind::Empty || x->kind == Kind::Epsilon) return epsilon();
    if (x->kind == Kind::Star) return x;
    return std::make_shared<RegExpr>(Kind::Star, "", x, nullptr);
}
inline Re concat_all(const std::vector<Re> &xs) {
    Re r = epsilon();
    for (auto it = xs.rbegin(); it != xs.rend(); ++it) r = concat(*it, r);
    return r;
}

// Precedence for printing: Alt < Concat < Star/atoms.
inline std::string to_string(const Re &e, int ctx = 0) {
    auto paren = [&](int prec, const std::string &s) { return prec < ctx ? "(" + s + ")" : s; };
    switch (e->kind) {
    case Kind::Letter: return e->letter;
    case Kind::Epsilon: return "eps";
    case Kind::Empty: return "empty";
    case Kind::Alt: return paren(0, to_string(e->a, 0) + " + " + to_string(e->b, 0));
    case Kind::Concat: return paren(1, to_string(e->a, 2) + " " + to_string(e->b, 1));
    case Kind::Star: return to_string(e->a, 2) + "*";
    }
    return "?";
}

inline bool nullable(const Re &e) {
    switch (e->kind) {
    case Kind::Letter:
    case Kind::Empty: return false;
    case Kind::Epsilon:
    case Kind::Star: return true;
    case Kind::Concat: return nullable(e->a) && nullable(e->b);
    case Kind::Alt: return nullable(e->a) || nullable(e->b);
    }
    return false;
}

using LetterSet = std::set<std::string, NaturalLess>;

inline LetterSet first(const Re &e) {
    switch (e->kind) {
    case Kind::Letter: return {e->letter};
    case Kind::Epsilon:
    case Kind::Empty: return {};
    case Kind::Star: return first(e->a);
    case Kind::Alt: {
        auto s = first(e->a);
        auto t = first(e->b);
        s.insert(t.begin(), t.end());
        return s;
    }
    case Kind::Concat: {
        auto s = first(e->a);
        if (nullable(e->a)) {
            auto t = first(e->b);
            s.insert(t.begin(), t.end());
        }
        return s;
    }
    }
    return {};
}

inline LetterSet letters(const Re &e) {
    if (e->kind == Kind::Letter) return {e->letter};
    LetterSet s;
    if (e->a) s = letters(e->a);
    if (e->b) {
        auto t = letters(e->b);
        s.insert(t.begin(), t.end());
    }
    return s;
}

class UnknownLabel : public Error {
public:
    explicit UnknownLabel(const std::string &l) : Error("pathexpr", "no CFG edge labelled '" + l + "'") {}
};

inline const CfgEdge &edge_of(const Cfg &g, const std::string &label) {
    for (auto &e : g.edges)
        if (e.clause == label) return e;
    throw UnknownLabel(label);
}

/// Source nodes of the first letters of e.
inline std::set<std::string> firstpred(const Re &e, const Cfg &g) {
    std::set<std::string> out;
    for (auto &l : first(e)) out.insert(edge_of(g, l).from);
    return out;
}

/// Brzozowski derivative with respect to one letter.
inline Re derive(const Re &e, const std::string &c) {
    switch (e->kind) {
    case Kind::Letter: return e->letter == c ? epsilon() : empty();
    case Kind::Epsilon:
    case Kind::Empty: return empty();
    case Kind::Alt: return alt(derive(e->a, c), derive(e->b, c));
    case Kind::Star: return concat(derive(e->a, c), e);
    case Kind::Concat: {
        Re d = concat(derive(e->a, c), e->b);
        return nullable(e->a) ? alt(d, derive(e->b, c)) : d;
    }
    }
    return empty();
}

inline bool lang_member(const Re &e, const std::vector<std::string> &w) {
    Re cur = e;
    for (auto &c : w) {
        cur = derive(cur, c);
        if (cur->kind == Kind::Empty) return false;
    }
    return nullable(cur);
}

// ---------------------------------------------------------------------
// Alternation removal under stars.

enum class StarOrder { Ascending, Reverse };

/// True when some Star has an Alt anywhere in its body.
inline bool has_multipath_loop(const Re &e, bool under_star = false) {
    switch (e->kind) {
    case Kind::Alt:
        if (under_star) return true;
        [[fallthrough]];
    case Kind::Concat: return has_multipath_loop(e->a, under_star) || has_multipath_loop(e->b, under_star);
    case Kind::Star: return has_multipath_loop(e->a, true);
    default: return false;
    }
}

namespace detail {

// Alternation-free operands whose union is L(e) (stars already rewritten
// are treated as atoms).
inline std::vector<Re> paths(const Re &e) {
    switch (e->kind) {
    case Kind::Empty: return {};
    case Kind::Alt: {
        auto l = paths(e->a), r = paths(e->b);
        l.insert(l.end(), r.begin(), r.end());
        return l;
    }
    case Kind::Concat: {
        std::vector<Re> out;
        auto tails = paths(e->b);
        for (auto &h : paths(e->a))
            for (auto &t : tails) out.push_back(concat(h, t));
        return out;
    }
    default: return {e};
    }
}

inline std::string min_first(const Re &e) {
    auto f = first(e);
    return f.empty() ? std::string() : *f.begin();
}

// (o1 + ... + om)*  with alternation-free operands.
inline Re fold_star(const std::vector<Re> &ops, std::size_t m) {
    if (m == 0) return epsilon();
    if (m == 1) return star(ops[0]);
    Re inner = fold_star(ops, m - 1);
    return concat(inner, star(concat(ops[m - 1], inner)));
}

} // namespace detail

/// Rewrites every (e1 + e2)* into e1*(e2 e1*)*, recursively, so that the
/// result has no alternation under any star. Operands are ordered by their
/// smallest first clause id (ascending or reversed).
inline Re eliminate_multipath(const Re &e, StarOrder order = StarOrder::Ascending) {
    switch (e->kind) {
    case Kind::Concat: return concat(eliminate_multipath(e->a, order), eliminate_multipath(e->b, order));
    case Kind::Alt: return alt(eliminate_multipath(e->a, order), eliminate_multipath(e->b, order));
    case Kind::Star: {
        Re body = eliminate_multipath(e->a, order);
        std::vector<Re> ops;
        for (auto &p : detail::paths(body))
            if (p->kind != Kind::Epsilon) ops.push_back(p);
        std::stable_sort(ops.begin(), ops.end(), [](const Re &x, const Re &y) {
            return natural_less(detail::min_first(x), detail::min_first(y));
        });
        if (order == StarOrder::Reverse) std::reverse(ops.begin(), ops.end());
        std::vector<Re> uniq;
        for (auto &o : ops)
            if (std::none_of(uniq.begin(), uniq.end(), [&](const Re &u) { return same(u, o); })) uniq.push_back(o);
        return detail::fold_star(uniq, uniq.size());
    }
    default: return e;
    }
}

// ---------------------------------------------------------------------
// Path expressions.

namespace detail {

// Nodes ordered sinks-first over the SCC condensation, ties by name.
inline std::vector<std::string> elimination_order(const std::set<std::string> &nodes,
                                                  const std::vector<CfgEdge> &edges) {
    std::map<std::string, std::set<std::string>> succ;
    for (auto &e : edges) succ[e.from].insert(e.to);
    // Tarjan's SCC.
    std::map<std::string, int> index, low;
    std::map<std::string, std::size_t> comp;
    std::vector<std::string> stack;
    std::set<std::string> on_stack;
    std::vector<std::set<std::string>> comps;
    int counter = 0;
    std::function<void(const std::string &)> dfs = [&](const std::string &v) {
        index[v] = low[v] = counter++;
        stack.push_back(v);
        on_stack.insert(v);
        for (auto &w : succ[v]) {
            if (!nodes.count(w)) continue;
            if (!index.count(w)) {
                dfs(w);
                low[v] = std::min(low[v], low[w]);
            } else if (on_stack.count(w)) {
                low[v] = std::min(low[v], index[w]);
            }
        }
        if (low[v] == index[v]) {
            std::set<std::string> c;
            for (;;) {
                std::string w = stack.back();
                stack.pop_back();
                on_stack.erase(w);
                c.insert(w);
                comp[w] = comps.size();
                if (w == v) break;
            }
            comps.push_back(c);
        }
    };
    for (auto &n : nodes)
        if (!index.count(n)) dfs(n);
    // Kahn on the reversed condensation: repeatedly take a component with no
    // unprocessed successors, smallest member name first.
    std::vector<std::set<std::size_t>> csucc(comps.size());
    for (auto &e : edges)
        if (nodes.count(e.from) && nodes.count(e.to) && comp[e.from] != comp[e.to])
            csucc[comp[e.from]].insert(comp[e.to]);
    std::vector<bool> done(comps.size(), false);
    std::vector<std::string> order;
    for (std::size_t round = 0; round < comps.size(); ++round) {
        std::optional<std::size_t> pick;
        for (std::size_t c = 0; c < comps.size(); ++c) {
            if (done[c]) continue;
            bool ready = std::all_of(csucc[c].begin(), csucc[c].end(), [&](std::size_t d) { return done[d]; });
            if (ready && (!pick || *comps[c].begin() < *comps[*pick].begin())) pick = c;
        }
        done[*pick] = true;
        order.insert(order.end(), comps[*pick].begin(), comps[*pick].end());
    }
    return order;
}

} // namespace detail

/// Regular expression for the labelled paths from `from` to `to`.
inline Re path_expression(const Cfg &g, const std::string &from, const std::string &to) {
    if (!g.nodes.count(from) || !g.nodes.count(to)) throw Error("pathexpr", "unknown CFG node");
    // Restrict to nodes on some from -> to path.
    auto reach = [&](const std::string &start, bool forward) {
        std::set<std::string> seen{start};
        std::vector<std::string> work{start};
        while (!work.empty()) {
            std::string n = work.back();
            work.pop_back();
            for (auto &e : g.edges) {
                const std::string &src = forward ? e.from : e.to, &dst = forward ? e.to : e.from;
                if (src == n && seen.insert(dst).second) work.push_back(dst);
            }
        }
        return seen;
    };
    auto fwd = reach(from, true), bwd = reach(to, false);
    if (!fwd.count(to)) return empty();
    std::set<std::string> nodes;
    for (auto &n : fwd)
        if (bwd.count(n)) nodes.insert(n);
    std::vector<CfgEdge> edges;
    for (auto &e : g.edges)
        if (nodes.count(e.from) && nodes.count(e.to)) edges.push_back(e);

    const std::string S = "#S", T = "#T";
    std::map<std::pair<std::string, std::string>, Re> R;
    auto get = [&](const std::string &u, const std::string &v) {
        auto it = R.find({u, v});
        return it == R.end() ? empty() : it->second;
    };
    auto put = [&](const std::string &u, const std::string &v, const Re &e) {
        R[{u, v}] = alt(get(u, v), e);
    };
    put(S, from, epsilon());
    put(to, T, epsilon());
    for (auto &e : edges) put(e.from, e.to, letter(e.clause)); // edges are in clause-id order

    std::set<std::string> live = nodes;
    live.insert(S);
    live.insert(T);
    for (auto &n : detail::elimination_order(nodes, edges)) {
        live.erase(n);
        Re loop = star(get(n, n));
        for (auto &p : live) {
            Re pn = get(p, n);
            if (pn->kind == Kind::Empty) continue;
            for (auto &q : live) {
                Re nq = get(n, q);
                if (nq->kind == Kind::Empty) continue;
                put(p, q, concat(pn, concat(loop, nq)));
            }
        }
        for (auto it = R.begin(); it != R.end();)
            it = (it->first.first == n || it->first.second == n) ? R.erase(it) : std::next(it);
    }
    return get(S, T);
}

} // namespace loopsum::rx
