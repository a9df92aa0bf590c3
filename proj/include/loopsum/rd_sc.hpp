#pragma once

// Reaching definitions over equation graphs and symbolic-constant removal.

#include "loopsum/recurrences.hpp"

#include <map>
#include <set>
#include <string>
#include <vector>

namespace loopsum::rec {

struct Classification {
    bool defined = false;
    bool constrained = false;
};

/// `defined`: the equation's condition rules out v keeping its value in the
/// recursive call. `constrained`: v survives projection of the condition
/// onto the head arguments.
inline Classification classify(const RecEq &eq, const Var &v) {
    Classification c;
    VarSet head{eq.counter};
    head.insert(eq.params.begin(), eq.params.end());
    c.constrained = lin::project(eq.condition, head).vars().count(v) > 0;
    if (!eq.calls().empty()) {
        // Recursive calls pass (k-1, params).
        LinTerm arg = v == eq.counter ? LinTerm::var(v) - LinTerm(1) : LinTerm::var(v);
        c.defined = !lin::is_sat(eq.condition.with(LinConstraint::eq(LinTerm::var(v), arg)));
    }
    return c;
}

/// (variable, equation id)
using RdFact = std::pair<Var, std::string>;
using RdAssignment = std::map<std::string, std::set<RdFact>>;

/// Least fixpoint of rd(to) >= (rd(from) - kill(e)) + gen(e), where gen(e)
/// holds the variables defined or constrained by e and kill(e) every fact
/// about those variables. The entry edge e0 generates nothing.
inline RdAssignment reaching_definitions(const EqSystem &s, const EqGraph &g) {
    std::map<std::string, const RecEq *> by_id;
    for (auto &e : s.eqs) by_id[e.id] = &e;
    std::map<std::string, std::set<Var>> gen;
    for (auto &[id, e] : by_id) {
        std::vector<Var> args{e->counter};
        args.insert(args.end(), e->params.begin(), e->params.end());
        for (auto &v : args) {
            auto c = classify(*e, v);
            if (c.defined || c.constrained) gen[id].insert(v);
        }
    }
    RdAssignment rd;
    for (auto &n : g.nodes) rd[n];
    for (bool changed = true; changed;) {
        changed = false;
        for (auto &edge : g.edges) {
            const auto &gv = gen[edge.eq];
            std::set<RdFact> out;
            for (auto &f : rd[edge.from])
                if (!gv.count(f.first)) out.insert(f);
            for (auto &v : gv) out.insert({v, edge.eq});
            auto &dst = rd[edge.to];
            std::size_t before = dst.size();
            dst.insert(out.begin(), out.end());
            if (dst.size() != before) changed = true;
        }
    }
    return rd;
}

inline RdAssignment reaching_definitions(const EqSystem &s) { return reaching_definitions(s, build_eq_graph(s)); }

/// Variables of interest with no fact reaching the exit node.
inline VarSet symbolic_constants(const EqSystem &s, const VarSet &vars) {
    EqGraph g = build_eq_graph(s);
    RdAssignment rd = reaching_definitions(s, g);
    VarSet reached;
    for (auto &[v, id] : rd[g.exit]) reached.insert(v);
    VarSet out;
    for (auto &v : vars)
        if (!reached.count(v)) out.insert(v);
    return out;
}

class NotConstant : public Error {
public:
    explicit NotConstant(const Var &v) : Error("rd", v + " is not a symbolic constant") {}
};

inline Var constant_symbol(const Var &v) { return "c_" + v; }

/// Drops `consts` from every argument list, replacing their occurrences by
/// constant symbols c_v.
inline EqSystem remove_constants(const EqSystem &s, const VarSet &consts) {
    VarSet all(s.params.begin(), s.params.end());
    all.insert(s.counter);
    VarSet sc = symbolic_constants(s, all);
    std::map<Var, Var> ren;
    for (auto &v : consts) {
        if (!sc.count(v)) throw NotConstant(v);
        ren[v] = constant_symbol(v);
    }
    EqSystem out = s;
    out.params.clear();
    for (auto &p : s.params)
        if (!consts.count(p)) out.params.push_back(p);
    for (auto &e : out.eqs) {
        e.params = out.params;
        e.rhs = e.rhs.rename(ren);
        e.condition = e.condition.rename(ren);
    }
    return out;
}

} // namespace loopsum::rec
