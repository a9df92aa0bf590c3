#pragma once

// Linear ranking-function synthesis via Farkas' lemma.
//
// For a loop body relating pre-state x and post-state x', we look for
// r(x) = rho.x + rho0 such that the body entails
//   r(x) >= 0,   r(x) - r(x') >= 1,   r(x') >= 0.
// The third condition makes `k <= r(x0)` a sound bound on the iteration
// count k. Among all such functions we pick one minimising sum|rho|, then
// rho0.

#include "loopsum/linarith.hpp"
#include "loopsum/simplex.hpp"

#include <vector>

namespace loopsum::lin {

class NoRankingFound : public Error {
public:
    explicit NoRankingFound(const std::string &why) : Error("ranking", "no linear ranking function: " + why) {}
};

struct RankingFn {
    LinTerm term;
};

namespace detail {

// Column layout of the Farkas LP.
struct FarkasLayout {
    std::size_t n_state;   // |pre|
    std::size_t n_cons;    // body constraints
    std::size_t rho_pos() const { return 0; }
    std::size_t rho_neg() const { return n_state; }
    std::size_t rho0_pos() const { return 2 * n_state; }
    std::size_t rho0_neg() const { return 2 * n_state + 1; }
    // multiplier blocks: for each of 3 conditions, n_cons nonnegative
    // multipliers plus, for equalities, a second (negative part) column.
    std::size_t lambda(std::size_t cond, std::size_t i) const { return 2 * n_state + 2 + cond * 2 * n_cons + i; }
    std::size_t lambda_neg(std::size_t cond, std::size_t i) const { return lambda(cond, i) + n_cons; }
    std::size_t n_cols() const { return 2 * n_state + 2 + 3 * 2 * n_cons + 3; } // +3 slacks
    std::size_t slack(std::size_t cond) const { return 2 * n_state + 2 + 3 * 2 * n_cons + cond; }
};

} // namespace detail

/// Returns a ranking function over `pre` for the relation `body`.
/// With `integer` set, the body is first tightened under integer semantics.
inline RankingFn synth_ranking(const ConstraintStore &body_in, const std::vector<Var> &pre,
                               const std::vector<Var> &post, bool integer = true) {
    if (pre.size() != post.size()) throw Error("ranking", "pre/post variable lists differ in length");
    ConstraintStore body = integer ? tighten_integer(body_in) : body_in;
    if (!is_sat(body)) return {LinTerm{}};

    std::vector<Var> vars;
    {
        VarSet all = body.vars();
        for (auto &v : pre) all.insert(v);
        for (auto &v : post) all.insert(v);
        vars.assign(all.begin(), all.end());
    }
    std::map<Var, std::size_t> pre_idx, post_idx;
    for (std::size_t i = 0; i < pre.size(); ++i) {
        pre_idx[pre[i]] = i;
        post_idx[post[i]] = i;
    }

    const auto &cs = body.constraints();
    detail::FarkasLayout L{pre.size(), cs.size()};
    const std::size_t N = L.n_cols();
    lp::Problem prob;
    prob.c.assign(N, Rational(0));

    auto row = [&] { return lp::Row(N, Rational(0)); };
    // Condition k: sum_i lambda_i * a_i[v] = c_k[v](rho) for every variable v,
    // and sum_i lambda_i * d_i - d_k(rho0) - slack = 0.
    // c_0 = -rho on pre; c_1 = -rho on pre + rho on post; c_2 = -rho on post.
    // d_0 = -rho0; d_1 = 1; d_2 = -rho0.
    for (std::size_t k = 0; k < 3; ++k) {
        for (auto &v : vars) {
            lp::Row r = row();
            for (std::size_t i = 0; i < cs.size(); ++i) {
                Rational a = cs[i].lhs.coeff(v);
                r[L.lambda(k, i)] = a;
                if (cs[i].rel == Rel::Eq) r[L.lambda_neg(k, i)] = -a;
            }
            auto put_rho = [&](std::size_t idx, int sign) {
                // subtract sign*rho[idx] from the left side
                r[L.rho_pos() + idx] -= sign;
                r[L.rho_neg() + idx] += sign;
            };
            bool on_pre = pre_idx.count(v), on_post = post_idx.count(v);
            if ((k == 0 || k == 1) && on_pre) put_rho(pre_idx[v], -1);
            if (k == 1 && on_post) put_rho(post_idx[v], +1);
            if (k == 2 && on_post) put_rho(post_idx[v], -1);
            prob.a.push_back(std::move(r));
            prob.b.push_back(0);
        }
        lp::Row r = row();
        for (std::size_t i = 0; i < cs.size(); ++i) {
            Rational d = cs[i].lhs.constant();
            r[L.lambda(k, i)] = d;
            if (cs[i].rel == Rel::Eq) r[L.lambda_neg(k, i)] = -d;
        }
        r[L.slack(k)] = -1;
        Rational rhs = 0;
        if (k == 1) {
            rhs = 1;
        } else {
            // + rho0 moved to the left: sum lambda d + rho0 - slack = 0
            r[L.rho0_pos()] = 1;
            r[L.rho0_neg()] = -1;
        }
        prob.a.push_back(std::move(r));
        prob.b.push_back(rhs);
    }
    // Unused lambda_neg columns (inequalities) are pinned by zero cost and
    // appear in no row, so they stay at zero in a basic solution.

    for (std::size_t i = 0; i < pre.size(); ++i) {
        prob.c[L.rho_pos() + i] = 1;
        prob.c[L.rho_neg() + i] = 1;
    }
    auto first = lp::minimize(prob);
    if (first.status != lp::Status::Optimal) throw NoRankingFound("Farkas system infeasible");

    // Second pass: fix sum|rho| and minimise rho0.
    lp::Problem second = prob;
    lp::Row fix = row();
    for (std::size_t i = 0; i < pre.size(); ++i) {
        fix[L.rho_pos() + i] = 1;
        fix[L.rho_neg() + i] = 1;
    }
    second.a.push_back(fix);
    second.b.push_back(first.value);
    second.c.assign(N, Rational(0));
    second.c[L.rho0_pos()] = 1;
    second.c[L.rho0_neg()] = -1;
    auto sol = lp::minimize(second);
    if (sol.status != lp::Status::Optimal) sol = first;

    LinTerm r(sol.x[L.rho0_pos()] - sol.x[L.rho0_neg()]);
    for (std::size_t i = 0; i < pre.size(); ++i) r.add(pre[i], sol.x[L.rho_pos() + i] - sol.x[L.rho_neg() + i]);

    // Independent re-verification of the postconditions.
    std::map<Var, Var> to_post;
    for (std::size_t i = 0; i < pre.size(); ++i) to_post[pre[i]] = post[i];
    LinTerm r_post = r.rename(to_post);
    if (!entails(body, LinConstraint::ge(r, LinTerm{})) ||
        !entails(body, LinConstraint::ge(r, r_post + LinTerm(1))) ||
        !entails(body, LinConstraint::ge(r_post, LinTerm{})))
        throw NoRankingFound("candidate failed verification");
    return {r};
}

} // namespace loopsum::lin
