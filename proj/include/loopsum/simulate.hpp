#pragma once

// Bounded breadth-first interpreter for linear CHC programs. Each state is
// a predicate plus a constraint store over its argument slots, so
// nondeterministic clauses are explored symbolically; values fixed by the
// store are substituted back as constants.

#include "loopsum/cfg.hpp"

#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace loopsum {

enum class SimStatus { Ok, Timeout, Stuck };

inline const char *to_string(SimStatus s) {
    switch (s) {
    case SimStatus::Ok: return "ok";
    case SimStatus::Timeout: return "timeout";
    case SimStatus::Stuck: return "stuck";
    }
    return "?";
}

/// Argument values at the moment a true-headed exit fires; nullopt where
/// the value is not determined by the derivation.
using Valuation = std::vector<std::optional<Rational>>;

struct Terminal {
    std::string pred;
    std::string exit_clause;
    Valuation values;
    std::vector<std::string> path; // clause ids, exit last
    friend bool operator<(const Terminal &a, const Terminal &b) {
        return std::tie(a.pred, a.values, a.exit_clause) < std::tie(b.pred, b.values, b.exit_clause);
    }
};

struct SimResult {
    SimStatus status = SimStatus::Stuck;
    std::vector<Terminal> terminals; // in discovery order, deduplicated
    std::size_t steps = 0;           // derivation layers explored
};

struct SimOptions {
    bool integer = true;
    std::size_t max_states = 100000;
};

namespace detail {

inline Var slot(std::size_t i) { return "#s" + std::to_string(i); }
inline Var next_slot(std::size_t i) { return "#n" + std::to_string(i); }

struct SimState {
    std::string pred;
    lin::ConstraintStore store; // over slot(i)
    std::vector<std::string> path;
};

// Replaces slots that the store pins to a constant.
inline lin::ConstraintStore concretize(const lin::ConstraintStore &s, std::size_t arity, Valuation &vals) {
    vals.assign(arity, std::nullopt);
    lin::ConstraintStore out = s;
    for (std::size_t i = 0; i < arity; ++i) {
        auto b = lin::var_bounds(out, slot(i), {});
        if (b.lower && b.upper && *b.lower == *b.upper && b.lower->is_constant()) vals[i] = b.lower->constant();
    }
    lin::ConstraintStore pinned;
    VarSet fixed;
    for (std::size_t i = 0; i < arity; ++i)
        if (vals[i]) {
            pinned.add(lin::LinConstraint::eq(lin::LinTerm::var(slot(i)), lin::LinTerm(*vals[i])));
            fixed.insert(slot(i));
        }
    VarSet rest;
    for (auto &v : out.vars())
        if (!fixed.count(v)) rest.insert(v);
    if (rest.empty()) return pinned;
    // Keep the relational part on the unfixed slots.
    lin::ConstraintStore sub = out;
    for (std::size_t i = 0; i < arity; ++i)
        if (vals[i]) sub = sub.substitute(slot(i), lin::LinTerm(*vals[i]));
    for (auto &c : sub)
        if (!c.lhs.is_constant()) pinned.add(c);
    return pinned;
}

} // namespace detail

/// Runs `p` from its entry with the given argument values (by position).
inline SimResult simulate(const chc::Program &p, const std::vector<Rational> &input, std::size_t max_steps,
                          const SimOptions &opt = {}) {
    if (input.size() != p.entry_arity)
        throw Error("simulate", "entry " + p.entry + "/" + std::to_string(p.entry_arity) + " given " +
                                    std::to_string(input.size()) + " inputs");
    SimResult res;
    detail::SimState init{p.entry, {}, {}};
    for (std::size_t i = 0; i < input.size(); ++i)
        init.store.add(lin::LinConstraint::eq(lin::LinTerm::var(detail::slot(i)), lin::LinTerm(input[i])));
    std::vector<detail::SimState> frontier{init};
    std::set<Terminal> seen_terminals;
    std::size_t explored = 0;

    for (std::size_t step = 0; step < max_steps && !frontier.empty(); ++step) {
        std::vector<detail::SimState> next;
        for (auto &st : frontier) {
            for (auto &c : p.clauses) {
                if (c.head.pred != st.pred) continue;
                // Rename apart: head args to current slots, body args to next slots.
                std::map<Var, Var> ren;
                for (std::size_t i = 0; i < c.head.args.size(); ++i) ren[c.head.args[i]] = detail::slot(i);
                if (!c.body.empty())
                    for (std::size_t i = 0; i < c.body[0].args.size(); ++i) {
                        const Var &a = c.body[0].args[i];
                        if (ren.count(a)) continue; // shared with head: handled below
                        ren[a] = detail::next_slot(i);
                    }
                std::size_t k = 0;
                for (auto &v : c.vars())
                    if (!ren.count(v)) ren[v] = "#t" + std::to_string(k++);
                lin::ConstraintStore s = st.store.conj(c.constraint.rename(ren));
                if (!c.body.empty())
                    for (std::size_t i = 0; i < c.body[0].args.size(); ++i) {
                        Var r = ren.at(c.body[0].args[i]);
                        if (r != detail::next_slot(i))
                            s.add(lin::LinConstraint::eq(lin::LinTerm::var(detail::next_slot(i)), lin::LinTerm::var(r)));
                    }
                lin::ConstraintStore check = opt.integer ? lin::tighten_integer(s) : s;
                if (!lin::is_sat(check)) continue;
                std::vector<std::string> path = st.path;
                path.push_back(c.id);
                if (c.body.empty()) {
                    if (c.head.pred == chc::kFalse) continue;
                    Terminal t{st.pred, c.id, {}, path};
                    detail::concretize(lin::project(check, [&] {
                        VarSet keep;
                        for (std::size_t i = 0; i < c.head.args.size(); ++i) keep.insert(detail::slot(i));
                        return keep;
                    }()), c.head.args.size(), t.values);
                    if (seen_terminals.insert(t).second) res.terminals.push_back(t);
                    continue;
                }
                const chc::Atom &b = c.body[0];
                if (b.pred == chc::kFalse) continue;
                VarSet keep;
                std::map<Var, Var> back;
                for (std::size_t i = 0; i < b.args.size(); ++i) {
                    keep.insert(detail::next_slot(i));
                    back[detail::next_slot(i)] = detail::slot(i);
                }
                lin::ConstraintStore proj = lin::project(check, keep).rename(back);
                Valuation vals;
                detail::SimState ns{b.pred, detail::concretize(proj, b.args.size(), vals), std::move(path)};
                next.push_back(std::move(ns));
                if (++explored > opt.max_states) throw Error("simulate", "state limit exceeded");
            }
        }
        frontier = std::move(next);
        res.steps = step + 1;
    }
    if (!frontier.empty())
        res.status = SimStatus::Timeout;
    else
        res.status = res.terminals.empty() ? SimStatus::Stuck : SimStatus::Ok;
    return res;
}

} // namespace loopsum
