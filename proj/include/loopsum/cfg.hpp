#pragma once

// Control-flow graph of a linear program: one node per predicate plus
// `true` and `false`, one edge per clause from head to body predicate.

#include "loopsum/chc.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <string>
#include <tuple>
#include <vector>

namespace loopsum {

/// Orders identifiers so that embedded numbers compare numerically
/// (c2 < c10).
inline bool natural_less(const std::string &a, const std::string &b) {
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        bool da = std::isdigit(static_cast<unsigned char>(a[i])), db = std::isdigit(static_cast<unsigned char>(b[j]));
        if (da && db) {
            std::size_t ie = i, je = j;
            while (ie < a.size() && std::isdigit(static_cast<unsigned char>(a[ie]))) ++ie;
            while (je < b.size() && std::isdigit(static_cast<unsigned char>(b[je]))) ++je;
            std::string na = a.substr(i, ie - i), nb = b.substr(j, je - j);
            na.erase(0, std::min(na.find_first_not_of('0'), na.size()));
            nb.erase(0, std::min(nb.find_first_not_of('0'), nb.size()));
            if (na.size() != nb.size()) return na.size() < nb.size();
            if (na != nb) return na < nb;
            i = ie;
            j = je;
        } else {
            if (a[i] != b[j]) return a[i] < b[j];
            ++i;
            ++j;
        }
    }
    if ((a.size() - i) != (b.size() - j)) return a.size() - i < b.size() - j;
    return a < b;
}

struct NaturalLess {
    bool operator()(const std::string &a, const std::string &b) const { return natural_less(a, b); }
};

struct CfgEdge {
    std::string from, clause, to;
    friend bool operator==(const CfgEdge &, const CfgEdge &) = default;
    friend bool operator<(const CfgEdge &a, const CfgEdge &b) {
        if (a.from != b.from) return a.from < b.from;
        if (a.clause != b.clause) return natural_less(a.clause, b.clause);
        return a.to < b.to;
    }
};

struct Cfg {
    std::set<std::string> nodes;
    std::vector<CfgEdge> edges; // sorted

    std::vector<CfgEdge> out(const std::string &n) const {
        std::vector<CfgEdge> r;
        for (auto &e : edges)
            if (e.from == n) r.push_back(e);
        return r;
    }
    std::string to_string() const {
        std::string s = "nodes:";
        for (auto &n : nodes) s += " " + n;
        s += "\nedges:\n";
        for (auto &e : edges) s += "  " + e.from + " -" + e.clause + "-> " + e.to + "\n";
        return s;
    }
};

inline Cfg build_cfg(const chc::Program &p) {
    Cfg g;
    g.nodes = {chc::kTrue, chc::kFalse};
    for (auto &c : p.clauses) {
        if (c.body.size() > 1) throw chc::NonLinearClause(c.id);
        g.nodes.insert(c.head.pred);
        g.nodes.insert(c.target());
        g.edges.push_back({c.head.pred, c.id, c.target()});
    }
    std::sort(g.edges.begin(), g.edges.end());
    return g;
}

} // namespace loopsum
