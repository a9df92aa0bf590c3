#pragma once

// Clause-set isomorphism up to predicate and variable renaming. Constraints
// are compared semantically after projecting onto atom variables.

#include "loopsum/chc.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace loopsum::testing {

inline std::map<std::string, std::vector<const chc::Clause *>> by_pred(const std::vector<chc::Clause> &cs) {
    std::map<std::string, std::vector<const chc::Clause *>> m;
    for (auto &c : cs) m[c.head.pred].push_back(&c);
    return m;
}

// Extends `vm` (expected var -> actual var) along aligned atoms.
inline bool align(const chc::Atom &e, const chc::Atom &a, const std::map<std::string, std::string> &pm,
                  std::map<Var, Var> &vm, std::map<Var, Var> &inv) {
    if (e.args.size() != a.args.size()) return false;
    auto it = pm.find(e.pred);
    std::string want = it == pm.end() ? e.pred : it->second;
    if (want != a.pred) return false;
    for (std::size_t i = 0; i < e.args.size(); ++i) {
        auto [x, nx] = vm.emplace(e.args[i], a.args[i]);
        auto [y, ny] = inv.emplace(a.args[i], e.args[i]);
        if (x->second != a.args[i] || y->second != e.args[i]) return false;
    }
    return true;
}

inline bool clause_iso(const chc::Clause &e, const chc::Clause &a, const std::map<std::string, std::string> &pm) {
    if (e.body.size() != a.body.size()) return false;
    std::vector<std::size_t> perm(a.body.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    do {
        std::map<Var, Var> vm, inv;
        if (!align(e.head, a.head, pm, vm, inv)) return false;
        bool ok = true;
        for (std::size_t i = 0; ok && i < e.body.size(); ++i) ok = align(e.body[i], a.body[perm[i]], pm, vm, inv);
        if (!ok) continue;
        VarSet keep;
        for (auto &[x, y] : vm) keep.insert(y);
        // Expected non-atom variables get names that cannot clash.
        std::map<Var, Var> ren = vm;
        for (auto &v : e.constraint.vars())
            if (!ren.count(v)) ren[v] = "#e" + v;
        auto pe = lin::project(e.constraint.rename(ren), keep);
        auto pa = lin::project(a.constraint, keep);
        if (lin::equivalent(pe, pa)) return true;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return false;
}

/// True if the clause sets match under some predicate bijection.
inline bool programs_isomorphic(const std::vector<chc::Clause> &expected, const std::vector<chc::Clause> &actual) {
    auto E = by_pred(expected), A = by_pred(actual);
    if (E.size() != A.size()) return false;
    std::vector<std::string> en, an;
    for (auto &[k, v] : E) en.push_back(k);
    for (auto &[k, v] : A) an.push_back(k);
    std::sort(an.begin(), an.end());
    do {
        std::map<std::string, std::string> pm;
        bool ok = true;
        for (std::size_t i = 0; i < en.size(); ++i) {
            pm[en[i]] = an[i];
            if (E[en[i]].size() != A[an[i]].size()) ok = false;
        }
        for (std::size_t i = 0; ok && i < en.size(); ++i) {
            // Greedy matching suffices for the small clause groups here.
            std::vector<bool> used(A[an[i]].size(), false);
            for (auto *ec : E[en[i]]) {
                bool found = false;
                for (std::size_t j = 0; j < used.size() && !found; ++j)
                    if (!used[j] && clause_iso(*ec, *A[an[i]][j], pm)) used[j] = found = true;
                if (!found) ok = false;
            }
        }
        if (ok) return true;
    } while (std::next_permutation(an.begin(), an.end()));
    return false;
}

} // namespace loopsum::testing
