#include "loopsum/simulate.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

using namespace loopsum;
using namespace loopsum::chc;
using loopsum::testing::K;
using loopsum::testing::V;

using loopsum::testing::ints;
using loopsum::testing::slurp;

TEST(Parse, TwoPath) {
    Program p = parse_program(slurp("twopath.chc"));
    ASSERT_EQ(p.clauses.size(), 3u);
    EXPECT_EQ(p.entry, "wh");
    EXPECT_EQ(p.entry_arity, 2u);
    EXPECT_EQ(p.clauses[0].id, "c1");
    EXPECT_EQ(p.clauses[2].id, "c3");
    EXPECT_TRUE(p.clauses[2].is_fact());
}

TEST(Parse, NormalizesExpressionArguments) {
    Program p = parse_program("wh(A,B) :- A>0, B>0, wh(A,B-1).");
    const Clause &c = p.clauses[0];
    ASSERT_EQ(c.body.size(), 1u);
    EXPECT_EQ(c.body[0].args[0], "A");
    Var b1 = c.body[0].args[1];
    EXPECT_NE(b1, "B");
    ConstraintStore expect{lin::LinConstraint::gt(V("A"), K(0)), lin::LinConstraint::gt(V("B"), K(0)),
                           lin::LinConstraint::eq(V(b1), V("B") - K(1))};
    EXPECT_TRUE(lin::equivalent(c.constraint, expect));
}

TEST(Parse, RepeatedArgumentsBecomeDistinct) {
    Program p = parse_program("p(X,X) :- X > 0.");
    auto &h = p.clauses[0].head;
    EXPECT_NE(h.args[0], h.args[1]);
}

TEST(Parse, Errors) {
    EXPECT_THROW(parse_program("p(X) :- q(X), r(X)."), NonLinearClause);
    try {
        parse_program("p(X) :- X*X > 0.");
        FAIL();
    } catch (const ParseError &e) {
        EXPECT_EQ(e.line(), 1u);
        EXPECT_EQ(e.column(), 10u);
    }
    EXPECT_THROW(parse_program("p(X) :- X > 0"), ParseError);
    EXPECT_THROW(parse_program("entry(q/1).\np(X) :- X > 0."), ParseError);
    EXPECT_THROW(parse_program("#a: p(X).\n#a: p(X)."), ParseError);
}

TEST(Parse, LabelsCommentsAndFalse) {
    Program p = parse_program("% comment\n#init: p(X) :- X = 2 * 3 - 1. % trailing\nfalse :- X > 5, p(X).\n");
    EXPECT_EQ(p.clauses[0].id, "init");
    EXPECT_EQ(p.clauses[1].id, "c2");
    EXPECT_EQ(p.clauses[1].head.pred, kFalse);
    EXPECT_EQ(p.entry, "p");
    EXPECT_TRUE(lin::entails(p.clauses[0].constraint, lin::LinConstraint::eq(V("X"), K(5))));
}

TEST(Parse, RoundTrip) {
    for (auto name : {"twopath.chc", "sumdown.chc", "accumulate.chc", "squares.chc", "halving.chc"}) {
        Program p = parse_program(slurp(name));
        std::string once = p.to_string();
        Program q = parse_program(once);
        EXPECT_TRUE(same_program(p, q)) << name << "\n" << once;
        EXPECT_EQ(q.to_string(), once);
    }
}

TEST(Cfg, TwoPath) {
    Cfg g = build_cfg(parse_program(slurp("twopath.chc")));
    std::vector<CfgEdge> expect{{"wh", "c1", "wh"}, {"wh", "c2", "wh"}, {"wh", "c3", "true"}};
    EXPECT_EQ(g.edges, expect);
    EXPECT_TRUE(g.nodes.count("wh"));
    EXPECT_TRUE(g.nodes.count("true"));
}

TEST(Cfg, FactAndFalse) {
    Cfg g = build_cfg(parse_program("p(X) :- X = 0."));
    ASSERT_EQ(g.edges.size(), 1u);
    EXPECT_EQ(g.edges[0].to, "true");

    Cfg h = build_cfg(parse_program("p(X) :- X > 0, p(X - 1).\np(X) :- X > 5, false.\np(X) :- X <= 0."));
    EXPECT_TRUE(h.nodes.count("false"));
    int into_false = 0;
    for (auto &e : h.edges) into_false += e.to == "false";
    EXPECT_EQ(into_false, 1);
    EXPECT_EQ(h.edges.size(), 3u);
}

TEST(Cfg, NaturalClauseOrder) {
    EXPECT_TRUE(natural_less("c2", "c10"));
    EXPECT_FALSE(natural_less("c10", "c2"));
    EXPECT_TRUE(natural_less("a", "b"));
}

TEST(Simulate, TwoPath) {
    Program p = parse_program(slurp("twopath.chc"));
    SimResult r = simulate(p, ints({3, 2}), 100);
    ASSERT_EQ(r.status, SimStatus::Ok);
    ASSERT_EQ(r.terminals.size(), 1u);
    EXPECT_EQ(r.terminals[0].values, (Valuation{Rational(0), Rational(1)}));
    std::vector<std::string> trace{"c1", "c1", "c2", "c1", "c1", "c1", "c2", "c1", "c1", "c2", "c3"};
    EXPECT_EQ(r.terminals[0].path, trace);
}

TEST(Simulate, SumDown) {
    Program p = parse_program(slurp("sumdown.chc"));
    SimResult r = simulate(p, ints({3, 2}), 100);
    ASSERT_EQ(r.status, SimStatus::Ok);
    ASSERT_EQ(r.terminals.size(), 1u);
    EXPECT_EQ(r.terminals[0].values, (Valuation{Rational(0), Rational(8)}));
    EXPECT_EQ(r.terminals[0].path.size(), 4u);
}

TEST(Simulate, TimeoutAndStuck) {
    Program p = parse_program(slurp("twopath.chc"));
    EXPECT_EQ(simulate(p, ints({3, 2}), 0).status, SimStatus::Timeout);
    EXPECT_EQ(simulate(p, ints({3, 2}), 5).status, SimStatus::Timeout);
    Program stuck = parse_program("p(X) :- X > 0, p(X - 1).");
    EXPECT_EQ(simulate(stuck, ints({2}), 10).status, SimStatus::Stuck);
    EXPECT_THROW(simulate(p, ints({1}), 10), Error);
}

TEST(Simulate, Nondeterminism) {
    // Y is chosen freely in [0,2] and then carried to the exit.
    Program p = parse_program("p(X) :- X = 1, Y >= 0, Y <= 2, q(Y).\nq(Y) :- Y >= 0.");
    SimResult r = simulate(p, ints({1}), 10);
    ASSERT_EQ(r.status, SimStatus::Ok);
    EXPECT_EQ(r.terminals.size(), 1u);
    EXPECT_FALSE(r.terminals[0].values[0].has_value());
}

TEST(Simulate, Deterministic) {
    Program p = parse_program(slurp("twopath.chc"));
    for (int a = 0; a <= 3; ++a)
        for (int b = 0; b <= 3; ++b) {
            auto r1 = simulate(p, ints({a, b}), 200), r2 = simulate(p, ints({a, b}), 200);
            ASSERT_EQ(r1.terminals.size(), 1u);
            EXPECT_EQ(r1.terminals[0].values, r2.terminals[0].values);
        }
}
