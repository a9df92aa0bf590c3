#pragma once

// Linear constrained Horn clauses: program representation, parser and
// printer.

#include "loopsum/linarith.hpp"

#include <cctype>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace loopsum::chc {

using lin::ConstraintStore;
using lin::LinConstraint;
using lin::LinTerm;
using lin::Var;
using lin::VarSet;

inline const std::string kTrue = "true";
inline const std::string kFalse = "false";

struct Atom {
    std::string pred;
    std::vector<Var> args;
    friend bool operator==(const Atom &, const Atom &) = default;
    std::string to_string() const {
        if (args.empty() && (pred == kTrue || pred == kFalse)) return pred;
        std::string s = pred + "(";
        for (std::size_t i = 0; i < args.size(); ++i) s += (i ? "," : "") + args[i];
        return s + ")";
    }
};

/// A clause `head :- constraint, body`. A clause with no body atom is a
/// constrained fact and targets `true`. A `false` head is an Atom named
/// "false" with no arguments; a `false` body item likewise.
struct Clause {
    std::string id;
    Atom head;
    ConstraintStore constraint;
    std::vector<Atom> body;

    bool is_fact() const { return body.empty(); }
    const std::string &target() const { return body.empty() ? kTrue : body.front().pred; }
    VarSet vars() const {
        VarSet s = constraint.vars();
        for (auto &v : head.args) s.insert(v);
        for (auto &a : body)
            for (auto &v : a.args) s.insert(v);
        return s;
    }
    std::string to_string() const;
};

struct Program {
    std::vector<Clause> clauses;
    std::string entry;
    std::size_t entry_arity = 0;

    const Clause *find(const std::string &id) const {
        for (auto &c : clauses)
            if (c.id == id) return &c;
        return nullptr;
    }
    const Clause &at(const std::string &id) const {
        if (auto *c = find(id)) return *c;
        throw Error("chc", "unknown clause '" + id + "'");
    }
    /// Arity of a predicate as used in the program; nullopt if unused.
    std::optional<std::size_t> arity(const std::string &pred) const {
        for (auto &c : clauses) {
            if (c.head.pred == pred) return c.head.args.size();
            for (auto &a : c.body)
                if (a.pred == pred) return a.args.size();
        }
        return std::nullopt;
    }
    std::string to_string() const;
};

class ParseError : public Error {
public:
    ParseError(std::size_t line, std::size_t col, const std::string &msg)
        : Error("parse", std::to_string(line) + ":" + std::to_string(col) + ": " + msg), line_(line), col_(col) {}
    std::size_t line() const { return line_; }
    std::size_t column() const { return col_; }

private:
    std::size_t line_, col_;
};

class NonLinearClause : public Error {
public:
    explicit NonLinearClause(const std::string &id)
        : Error("parse", "clause " + id + " has more than one body atom"), id_(id) {}
    const std::string &clause_id() const { return id_; }

private:
    std::string id_;
};

inline bool is_variable_name(const std::string &s) {
    return !s.empty() && (std::isupper(static_cast<unsigned char>(s[0])) || s[0] == '_');
}

/// A name not in `used`, of the form Base_n, and records it.
inline Var fresh_var(const std::string &base, VarSet &used) {
    for (std::size_t n = 1;; ++n) {
        Var v = base + "_" + std::to_string(n);
        if (!used.count(v)) {
            used.insert(v);
            return v;
        }
    }
}

namespace detail {

enum class Tok { Ident, Var, Int, Punct, End };

struct Token {
    Tok kind;
    std::string text;
    std::size_t line, col;
};

inline std::vector<Token> lex(const std::string &src) {
    std::vector<Token> out;
    std::size_t i = 0, line = 1, col = 1;
    auto adv = [&](std::size_t n) {
        for (std::size_t k = 0; k < n; ++k) {
            if (src[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
            ++i;
        }
    };
    while (i < src.size()) {
        char c = src[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            adv(1);
            continue;
        }
        if (c == '%') {
            while (i < src.size() && src[i] != '\n') adv(1);
            continue;
        }
        std::size_t l = line, cl = col;
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t j = i;
            while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_' ||
                                      src[j] == '\'')) ++j;
            std::string w = src.substr(i, j - i);
            out.push_back({is_variable_name(w) ? Tok::Var : Tok::Ident, w, l, cl});
            adv(j - i);
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            std::size_t j = i;
            while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
            out.push_back({Tok::Int, src.substr(i, j - i), l, cl});
            adv(j - i);
            continue;
        }
        static const char *two[] = {":-", "<=", ">=", "=<"};
        bool matched = false;
        for (auto *t : two)
            if (src.compare(i, 2, t) == 0) {
                out.push_back({Tok::Punct, std::string(t) == "=<" ? "<=" : t, l, cl});
                adv(2);
                matched = true;
                break;
            }
        if (matched) continue;
        if (std::string("()+-*/,.=<>#:").find(c) != std::string::npos) {
            out.push_back({Tok::Punct, std::string(1, c), l, cl});
            adv(1);
            continue;
        }
        throw ParseError(l, cl, std::string("unexpected character '") + c + "'");
    }
    out.push_back({Tok::End, "", line, col});
    return out;
}

// Raw clause before argument normalisation.
struct RawAtom {
    std::string pred;
    std::vector<LinTerm> args;
    std::size_t line, col;
};

class Parser {
public:
    Parser(std::vector<Token> toks, bool allow_nonlinear) : t_(std::move(toks)), nonlinear_(allow_nonlinear) {}

    Program run() {
        Program p;
        std::optional<std::pair<std::string, std::size_t>> entry;
        std::size_t entry_line = 0, entry_col = 0;
        std::set<std::string> ids;
        while (peek().kind != Tok::End) {
            if (peek().kind == Tok::Ident && peek().text == "entry" && peek(1).text == "(") {
                entry_line = peek().line;
                entry_col = peek().col;
                next();
                expect("(");
                std::string name = expect_kind(Tok::Ident, "predicate name").text;
                expect("/");
                std::size_t ar = std::stoul(expect_kind(Tok::Int, "arity").text);
                expect(")");
                expect(".");
                entry = {name, ar};
                continue;
            }
            Clause c = clause(p.clauses.size() + 1);
            if (!ids.insert(c.id).second) throw ParseError(last_line_, last_col_, "duplicate clause id '" + c.id + "'");
            p.clauses.push_back(std::move(c));
        }
        if (p.clauses.empty()) throw ParseError(1, 1, "program has no clauses");
        if (entry) {
            p.entry = entry->first;
            p.entry_arity = entry->second;
            bool found = false;
            for (auto &c : p.clauses)
                if (c.head.pred == p.entry && c.head.args.size() == p.entry_arity) found = true;
            if (!found)
                throw ParseError(entry_line, entry_col,
                                 "entry " + p.entry + "/" + std::to_string(p.entry_arity) + " is not a clause head");
        } else {
            for (auto &c : p.clauses)
                if (c.head.pred != kFalse) {
                    p.entry = c.head.pred;
                    p.entry_arity = c.head.args.size();
                    break;
                }
        }
        return p;
    }

private:
    std::vector<Token> t_;
    bool nonlinear_ = false;
    std::size_t pos_ = 0;
    std::size_t last_line_ = 1, last_col_ = 1;

    const Token &peek(std::size_t k = 0) const { return t_[std::min(pos_ + k, t_.size() - 1)]; }
    const Token &next() {
        const Token &t = t_[pos_];
        last_line_ = t.line;
        last_col_ = t.col;
        if (pos_ + 1 < t_.size()) ++pos_;
        return t;
    }
    [[noreturn]] void fail(const std::string &msg) const {
        const Token &t = peek();
        throw ParseError(t.line, t.col, msg + (t.kind == Tok::End ? " at end of input" : " near '" + t.text + "'"));
    }
    bool accept(const std::string &p) {
        if (peek().kind == Tok::Punct && peek().text == p) {
            next();
            return true;
        }
        return false;
    }
    void expect(const std::string &p) {
        if (!accept(p)) fail("expected '" + p + "'");
    }
    const Token &expect_kind(Tok k, const std::string &what) {
        if (peek().kind != k) fail("expected " + what);
        return next();
    }

    Clause clause(std::size_t index) {
        Clause c;
        if (accept("#")) {
            const Token &id = peek();
            if (id.kind != Tok::Ident && id.kind != Tok::Var) fail("expected clause label");
            c.id = next().text;
            expect(":");
        } else {
            c.id = "c" + std::to_string(index);
        }
        std::size_t hl = peek().line, hc = peek().col;
        RawAtom head;
        if (peek().kind == Tok::Ident && peek().text == kFalse && peek(1).text != "(") {
            next();
            head = {kFalse, {}, hl, hc};
        } else {
            head = atom();
        }
        std::vector<RawAtom> body;
        ConstraintStore store;
        bool body_false = false;
        if (accept(":-")) {
            do {
                item(body, store, body_false);
            } while (accept(","));
        }
        expect(".");
        if (!nonlinear_ && body.size() + (body_false ? 1 : 0) > 1) throw NonLinearClause(c.id);
        if (body_false) body.push_back({kFalse, {}, hl, hc});
        normalize(c, head, body, store);
        return c;
    }

    void item(std::vector<RawAtom> &body, ConstraintStore &store, bool &body_false) {
        if (peek().kind == Tok::Ident && peek(1).text == "(") {
            body.push_back(atom());
            return;
        }
        if (peek().kind == Tok::Ident && (peek().text == kTrue || peek().text == kFalse)) {
            if (next().text == kFalse) body_false = true;
            return;
        }
        LinTerm a = expr();
        const Token &op = peek();
        lin::RelOp r;
        if (op.text == "=") r = lin::RelOp::Eq;
        else if (op.text == "<") r = lin::RelOp::Lt;
        else if (op.text == "<=") r = lin::RelOp::Le;
        else if (op.text == ">") r = lin::RelOp::Gt;
        else if (op.text == ">=") r = lin::RelOp::Ge;
        else fail("expected relation");
        next();
        LinTerm b = expr();
        store.add(LinConstraint::make(a, r, b));
    }

    RawAtom atom() {
        const Token &name = expect_kind(Tok::Ident, "predicate");
        RawAtom a{name.text, {}, name.line, name.col};
        if (a.pred == kTrue || a.pred == kFalse || a.pred == "entry")
            throw ParseError(name.line, name.col, "'" + a.pred + "' cannot be used as a predicate name");
        expect("(");
        do {
            a.args.push_back(expr());
        } while (accept(","));
        expect(")");
        return a;
    }

    LinTerm expr() {
        LinTerm t;
        bool neg = false;
        if (accept("-")) neg = true;
        else accept("+");
        LinTerm first = term();
        t = neg ? -first : first;
        for (;;) {
            if (accept("+")) t += term();
            else if (accept("-")) t -= term();
            else break;
        }
        return t;
    }

    LinTerm term() {
        LinTerm t = factor();
        for (;;) {
            const Token &op = peek();
            if (accept("*")) {
                LinTerm f = factor();
                if (t.is_constant()) t = f * t.constant();
                else if (f.is_constant()) t = t * f.constant();
                else throw ParseError(op.line, op.col, "non-linear product");
            } else if (accept("/")) {
                LinTerm f = factor();
                if (!f.is_constant() || f.constant() == 0)
                    throw ParseError(op.line, op.col, "division by a non-constant or zero");
                t = t * (Rational(1) / f.constant());
            } else {
                break;
            }
        }
        return t;
    }

    LinTerm factor() {
        const Token &tk = peek();
        if (tk.kind == Tok::Int) return LinTerm(Rational(Integer(next().text)));
        if (tk.kind == Tok::Var) return LinTerm::var(next().text);
        if (accept("-")) return -factor();
        if (accept("(")) {
            LinTerm e = expr();
            expect(")");
            return e;
        }
        // Lowercase names are accepted as variables inside expressions so that
        // generated programs (counters k1, k2, ...) parse back.
        if (tk.kind == Tok::Ident && peek(1).text != "(" && tk.text != kTrue && tk.text != kFalse)
            return LinTerm::var(next().text);
        fail("expected expression");
    }

    // Turns every atom argument into a distinct variable.
    static void normalize(Clause &c, const RawAtom &head, const std::vector<RawAtom> &body, ConstraintStore &store) {
        VarSet used = store.vars();
        for (auto &a : head.args)
            for (auto &v : a.vars()) used.insert(v);
        for (auto &b : body)
            for (auto &a : b.args)
                for (auto &v : a.vars()) used.insert(v);
        auto convert = [&](const RawAtom &raw) {
            Atom out{raw.pred, {}};
            std::set<Var> seen;
            for (auto &arg : raw.args) {
                bool plain = arg.coeffs().size() == 1 && arg.constant() == 0 && arg.coeffs().begin()->second == 1;
                if (plain && !seen.count(arg.coeffs().begin()->first)) {
                    out.args.push_back(arg.coeffs().begin()->first);
                } else {
                    std::string base = arg.vars().size() == 1 ? *arg.vars().begin() : "V";
                    Var f = fresh_var(base, used);
                    store.add(LinConstraint::eq(LinTerm::var(f), arg));
                    out.args.push_back(f);
                }
                seen.insert(out.args.back());
            }
            return out;
        };
        c.head = convert(head);
        for (auto &b : body) c.body.push_back(convert(b));
        c.constraint = store;
    }
};

} // namespace detail

inline Program parse_program(const std::string &text) { return detail::Parser(detail::lex(text), false).run(); }

/// Accepts clauses with several body atoms (path programs).
inline Program parse_nonlinear_program(const std::string &text) {
    return detail::Parser(detail::lex(text), true).run();
}

inline std::string Clause::to_string() const {
    std::string s = "#" + id + ": " + head.to_string();
    std::vector<std::string> items;
    for (auto &c : constraint) items.push_back(c.to_string());
    for (auto &a : body) items.push_back(a.to_string());
    if (!items.empty()) {
        s += " :- ";
        for (std::size_t i = 0; i < items.size(); ++i) s += (i ? ", " : "") + items[i];
    }
    return s + ".";
}

inline std::string Program::to_string() const {
    std::string s = "entry(" + entry + "/" + std::to_string(entry_arity) + ").\n";
    for (auto &c : clauses) s += c.to_string() + "\n";
    return s;
}

/// Structural equality up to constraint order.
inline bool same_program(const Program &a, const Program &b) {
    if (a.entry != b.entry || a.entry_arity != b.entry_arity || a.clauses.size() != b.clauses.size()) return false;
    for (std::size_t i = 0; i < a.clauses.size(); ++i) {
        auto &x = a.clauses[i], &y = b.clauses[i];
        if (x.id != y.id || !(x.head == y.head) || x.body != y.body) return false;
        auto cx = x.constraint.constraints(), cy = y.constraint.constraints();
        std::sort(cx.begin(), cx.end());
        std::sort(cy.begin(), cy.end());
        if (cx != cy) return false;
    }
    return true;
}

} // namespace loopsum::chc
