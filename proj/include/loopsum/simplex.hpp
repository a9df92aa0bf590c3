#pragma once

// Dense two-phase simplex over exact rationals with Bland's rule.
// Solves: minimize c.x subject to A x = b, x >= 0.

#include "loopsum/rational.hpp"

#include <optional>
#include <vector>

namespace loopsum::lp {

using Row = std::vector<Rational>;

struct Problem {
    std::vector<Row> a; // m rows of n entries
    Row b;              // m entries
    Row c;              // n entries
};

enum class Status { Optimal, Infeasible, Unbounded };

struct Solution {
    Status status = Status::Infeasible;
    Row x;
    Rational value;
};

namespace detail {

struct Tableau {
    std::vector<Row> t; // m rows, n+1 columns (last = rhs)
    std::vector<std::size_t> basis;
    std::size_t n = 0;

    void pivot(std::size_t r, std::size_t col) {
        Rational p = t[r][col];
        for (auto &x : t[r]) x /= p;
        for (std::size_t i = 0; i < t.size(); ++i) {
            if (i == r || t[i][col] == 0) continue;
            Rational f = t[i][col];
            for (std::size_t j = 0; j <= n; ++j)
                if (t[r][j] != 0) t[i][j] -= f * t[r][j];
        }
        basis[r] = col;
    }

    // Reduced cost of column j for objective `cost`.
    Rational reduced(const Row &cost, std::size_t j) const {
        Rational r = cost[j];
        for (std::size_t i = 0; i < t.size(); ++i)
            if (t[i][j] != 0) r -= cost[basis[i]] * t[i][j];
        return r;
    }

    // Runs simplex on columns < `usable`; returns false if unbounded.
    bool optimize(const Row &cost, std::size_t usable) {
        for (;;) {
            std::optional<std::size_t> enter;
            for (std::size_t j = 0; j < usable; ++j)
                if (reduced(cost, j) < 0) {
                    enter = j;
                    break;
                }
            if (!enter) return true;
            std::optional<std::size_t> leave;
            Rational best;
            for (std::size_t i = 0; i < t.size(); ++i) {
                if (t[i][*enter] <= 0) continue;
                Rational ratio = t[i][n] / t[i][*enter];
                if (!leave || ratio < best || (ratio == best && basis[i] < basis[*leave])) {
                    leave = i;
                    best = ratio;
                }
            }
            if (!leave) return false;
            pivot(*leave, *enter);
        }
    }
};

} // namespace detail

inline Solution minimize(const Problem &p) {
    const std::size_t m = p.a.size(), n = p.c.size();
    detail::Tableau tab;
    tab.n = n + m; // originals then artificials
    tab.t.assign(m, Row(tab.n + 1, Rational(0)));
    tab.basis.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        bool neg = p.b[i] < 0;
        for (std::size_t j = 0; j < n; ++j) tab.t[i][j] = neg ? Rational(-p.a[i][j]) : p.a[i][j];
        tab.t[i][tab.n] = neg ? Rational(-p.b[i]) : p.b[i];
        tab.t[i][n + i] = 1;
        tab.basis[i] = n + i;
    }
    Row phase1(tab.n, Rational(0));
    for (std::size_t i = 0; i < m; ++i) phase1[n + i] = 1;
    tab.optimize(phase1, tab.n);
    Rational infeas = 0;
    for (std::size_t i = 0; i < m; ++i)
        if (tab.basis[i] >= n) infeas += tab.t[i][tab.n];
    if (infeas != 0) return {};

    // Drive remaining artificials out of the basis; drop redundant rows.
    for (std::size_t i = 0; i < tab.t.size();) {
        if (tab.basis[i] < n) {
            ++i;
            continue;
        }
        std::optional<std::size_t> col;
        for (std::size_t j = 0; j < n; ++j)
            if (tab.t[i][j] != 0) {
                col = j;
                break;
            }
        if (col) {
            tab.pivot(i, *col);
            ++i;
        } else {
            tab.t.erase(tab.t.begin() + static_cast<long>(i));
            tab.basis.erase(tab.basis.begin() + static_cast<long>(i));
        }
    }

    Row cost(tab.n, Rational(0));
    for (std::size_t j = 0; j < n; ++j) cost[j] = p.c[j];
    Solution s;
    if (!tab.optimize(cost, n)) {
        s.status = Status::Unbounded;
        return s;
    }
    s.status = Status::Optimal;
    s.x.assign(n, Rational(0));
    for (std::size_t i = 0; i < tab.t.size(); ++i)
        if (tab.basis[i] < n) s.x[tab.basis[i]] = tab.t[i][tab.n];
    s.value = 0;
    for (std::size_t j = 0; j < n; ++j) s.value += p.c[j] * s.x[j];
    return s;
}

} // namespace loopsum::lp
