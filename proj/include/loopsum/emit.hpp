#pragma once

// Text and JSON renderings of every pipeline stage.

#include "loopsum/summarize.hpp"

#include <json.hpp>

#include <string>

namespace loopsum::emit {

using Json = nlohmann::ordered_json;

enum class Format { Text, Json };

// ---------------------------------------------------------------------
// Building blocks.

/// `"n/d"`, also for integers.
inline std::string rational_json(const Rational &r) { return numerator(r).str() + "/" + denominator(r).str(); }

inline Json poly_json(const Polynomial &p) {
    Json a = Json::array();
    for (auto &[m, c] : p.terms()) {
        Json pw = Json::object();
        for (auto &[v, e] : m) pw[v] = e;
        a.push_back({{"coeff", rational_json(c)}, {"powers", pw}});
    }
    return a;
}

inline Json poly_json(const std::optional<Polynomial> &p) { return p ? poly_json(*p) : Json(nullptr); }

inline Polynomial poly_from_json(const Json &j) {
    Polynomial p;
    for (auto &t : j) {
        Monomial m;
        for (auto &[v, e] : t.at("powers").items()) m[v] = e.get<unsigned>();
        p.add_term(m, parse_rational(t.at("coeff").get<std::string>()));
    }
    return p;
}

inline Json constraints_json(const lin::ConstraintStore &s) {
    Json a = Json::array();
    for (auto &c : s) a.push_back(c.to_string());
    return a;
}

inline Json atom_json(const chc::Atom &a) { return {{"predicate", a.pred}, {"args", a.args}}; }

inline Json clause_json(const chc::Clause &c) {
    Json body = Json::array();
    for (auto &b : c.body) body.push_back(atom_json(b));
    return {{"id", c.id}, {"head", atom_json(c.head)}, {"constraint", constraints_json(c.constraint)}, {"body", body}};
}

inline Json clauses_json(const std::vector<chc::Clause> &cs) {
    Json a = Json::array();
    for (auto &c : cs) a.push_back(clause_json(c));
    return a;
}

// ---------------------------------------------------------------------
// Stages.

inline Json cfg_json(const Cfg &g) {
    Json edges = Json::array();
    for (auto &e : g.edges) edges.push_back({{"from", e.from}, {"clause", e.clause}, {"to", e.to}});
    return {{"nodes", Json(std::vector<std::string>(g.nodes.begin(), g.nodes.end()))}, {"edges", edges}};
}

inline Json pathexpr_json(const sum::ProgramSummary &s) {
    return {{"raw", rx::to_string(s.raw_expr)}, {"rewritten", rx::to_string(s.expr)}};
}

inline std::string pathexpr_text(const sum::ProgramSummary &s) { return rx::to_string(s.expr) + "\n"; }

inline Json path_program_json(const pc::PathProgram &pp) {
    Json preds = Json::array();
    for (auto &p : pp.preds)
        preds.push_back({{"name", p.name},
                         {"expr", rx::to_string(p.expr)},
                         {"start", p.start},
                         {"end", p.end},
                         {"in_arity", p.in_arity},
                         {"out_arity", p.out_arity},
                         {"star", p.is_star}});
    return {{"root", pp.root}, {"inputs", pp.root_in}, {"predicates", preds}, {"clauses", clauses_json(pp.clauses)}};
}

inline Json counted_json(const pc::CountedProgram &cp) {
    Json loops = Json::array();
    for (auto &l : cp.loops)
        loops.push_back({{"predicate", l.pred},
                         {"counter", l.counter},
                         {"inputs", l.in},
                         {"outputs", l.out},
                         {"callees", l.callees},
                         {"base", clause_json(l.base)},
                         {"step", l.step.head.pred.empty() ? Json(nullptr) : clause_json(l.step)}});
    return {{"root", cp.root}, {"inputs", cp.root_in}, {"top", clauses_json(cp.top)}, {"loops", loops}};
}

inline Json equation_json(const rec::RecEq *e) {
    if (!e) return nullptr;
    return {{"id", e->id}, {"rhs", poly_json(e->rhs)}, {"text", e->rhs_string()},
            {"condition", constraints_json(e->condition)}};
}

inline Json system_json(const rec::EqSystem &s) {
    Json fns = Json::array();
    for (auto &f : s.functions)
        fns.push_back({{"function", f}, {"variable", s.var_of.at(f)}, {"base", equation_json(s.base_of(f))},
                       {"step", equation_json(s.step_of(f))}});
    return {{"predicate", s.pred}, {"counter", s.counter}, {"params", s.params}, {"functions", fns}};
}

inline Json recurrences_json(const sum::ProgramSummary &s) {
    Json a = Json::array();
    for (auto &l : s.loops) a.push_back(system_json(l.system));
    return a;
}

inline std::string recurrences_text(const sum::ProgramSummary &s) {
    std::string out;
    for (auto &l : s.loops) out += "% loop " + l.pred + "\n" + l.system.to_cases();
    return out;
}

inline Json rd_assignment_json(const rec::RdAssignment &rd) {
    Json o = Json::object();
    for (auto &[node, facts] : rd) {
        Json a = Json::array();
        for (auto &[v, id] : facts) a.push_back(Json::array({v, id}));
        o[node] = a;
    }
    return o;
}

inline Json rd_json(const sum::ProgramSummary &s) {
    Json a = Json::array();
    for (auto &l : s.loops)
        for (auto &f : l.solution.order) {
            auto &c = l.solution.constants.at(f);
            a.push_back({{"loop", l.pred},
                         {"function", f},
                         {"rd", rd_assignment_json(l.solution.rd.at(f))},
                         {"symbolic_constants", Json(std::vector<Var>(c.begin(), c.end()))}});
        }
    return a;
}

inline Json closed_form_json(const rec::ClosedForm &cf) {
    Json j = {{"function", cf.fn}, {"counter", cf.counter}, {"params", cf.params}, {"poly", poly_json(cf.poly)},
              {"text", cf.to_string()}};
    if (!cf.is_polynomial()) {
        j["exp_base"] = rational_json(cf.exp_base);
        j["exp_coeff"] = poly_json(cf.exp_coeff);
    }
    return j;
}

inline Json closed_forms_json(const sum::ProgramSummary &s) {
    Json a = Json::array();
    for (auto &l : s.loops)
        for (auto &f : l.solution.order) a.push_back(closed_form_json(l.solution.forms.at(f)));
    return a;
}

inline std::string closed_forms_text(const sum::ProgramSummary &s) {
    std::string out;
    for (auto &l : s.loops)
        for (auto &f : l.solution.order) out += l.solution.forms.at(f).to_string() + "\n";
    return out;
}

inline const char *kCounterSemantics = "counters are integers in simulation and rationals in bound derivation";

inline Json check_json(const sum::CheckReport &r) {
    Json rows = Json::array();
    for (auto &row : r.rows) {
        Json in = Json::array();
        for (auto &v : row.input) in.push_back(loopsum::to_string(v));
        rows.push_back({{"input", in}, {"status", row.status}, {"detail", row.detail}});
    }
    return {{"inputs", r.inputs}, {"violations", r.violations}, {"rows", rows}};
}

inline Json summary_json(const sum::ProgramSummary &s, bool with_check = false) {
    Json loops = Json::array();
    for (auto &l : s.loops) {
        Json forms = Json::object();
        for (std::size_t j = 0; j < l.in.size(); ++j)
            if (auto it = l.forms.find(l.out[j]); it != l.forms.end()) forms[l.in[j]] = poly_json(it->second);
        Json counters = Json::array();
        for (auto &c : l.counters)
            counters.push_back({{"name", c.name}, {"lower", poly_json(c.lower)}, {"upper", poly_json(c.upper)},
                                {"ranking", poly_json(c.ranking)}});
        loops.push_back({{"predicate", l.pred}, {"inputs", l.in}, {"closed_forms", forms}, {"counters", counters}});
    }
    Json outs = Json::object();
    for (auto &o : s.output_order)
        if (auto it = s.outputs.find(o); it != s.outputs.end())
            outs[o] = {{"lower", poly_json(it->second.lower)}, {"upper", poly_json(it->second.upper)}};
    Json nonneg = Json::array();
    for (auto &v : s.assumptions) nonneg.push_back(v);
    Json j = {{"entry", s.entry},
              {"loops", loops},
              {"outputs", outs},
              {"assumptions", {{"nonneg", nonneg}, {"counters", kCounterSemantics}}},
              {"fidelity_notes", s.fidelity_notes}};
    if (with_check && s.check) j["check"] = check_json(*s.check);
    return j;
}

inline std::string summary_text(const sum::ProgramSummary &s) {
    std::string out = "entry " + s.entry + "/" + std::to_string(s.inputs.size()) + "\n";
    for (auto &l : s.loops) {
        out += "loop " + l.to_string() + "\n";
        for (auto &c : l.counters) {
            out += "  " + c.name + " in " + sum::SymInterval{c.lower, c.upper}.to_string();
            if (c.ranking) out += "  (ranking " + c.ranking->to_string() + ")";
            out += "\n";
        }
    }
    out += "outputs:\n";
    for (auto &o : s.output_order) {
        auto it = s.outputs.find(o);
        if (it == s.outputs.end()) continue;
        out += "  " + o + (it->second.is_point() ? " = " : " in ") + it->second.to_string() + "\n";
    }
    std::string as;
    for (auto &v : s.assumptions) as += (as.empty() ? "" : ", ") + v + " >= 0";
    out += "assumptions: " + (as.empty() ? std::string("none") : as) + "\n";
    if (!s.fidelity_notes.empty()) {
        out += "fidelity notes:\n";
        for (auto &n : s.fidelity_notes) out += "  - " + n + "\n";
    }
    return out;
}

inline std::string check_text(const sum::CheckReport &r) {
    std::string out;
    for (auto &row : r.rows) {
        std::string pt;
        for (std::size_t i = 0; i < row.input.size(); ++i)
            pt += (i ? "," : "") + loopsum::to_string(row.input[i]);
        out += "(" + pt + ")  " + row.status;
        if (!row.detail.empty()) out += "  " + row.detail.substr(0, row.detail.size() - 2);
        out += "\n";
    }
    out += std::to_string(r.rows.size()) + " rows, " + std::to_string(r.violations) + " violations\n";
    return out;
}

} // namespace loopsum::emit
