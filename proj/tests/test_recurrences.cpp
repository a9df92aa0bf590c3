#include "loopsum/rec_solver.hpp"
#include "loopsum/simulate.hpp"
#include "pipeline_util.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace loopsum;
using namespace loopsum::rec;
using loopsum::testing::counted;
using loopsum::testing::ints;
using loopsum::testing::P;
using loopsum::testing::sample;

namespace {

// Parses with call symbols written as @name_V standing for @name^V.
Polynomial C(const std::string &text) {
    Polynomial p = P(text);
    std::map<Var, Var> ren;
    for (auto &v : p.vars())
        if (is_call_symbol(v)) {
            auto us = v.rfind('_');
            ren[v] = v.substr(0, us) + "^" + v.substr(us + 1);
        }
    return p.rename(ren);
}

} // namespace

namespace {

EqSystem sumdown_system() {
    pc::CountedProgram cp = counted(sample("sumdown.chc"));
    return extract(loop_step(*cp.loop("wh2")));
}

// f(k) = f(k-1) + ... built directly, with counter k and params X, Y.
LoopStep manual_step(const std::string &guard_and_updates) {
    chc::Program p = chc::parse_program("entry(q/2).\nq(X,Y) :- " + guard_and_updates + ", q(X2,Y2).\n");
    LoopStep s;
    s.pred = "q";
    s.counter = "k";
    s.in = {"A", "B"};
    s.prev = {"X", "Y"};
    s.next = {"X2", "Y2"};
    s.guard = p.clauses[0].constraint;
    return s;
}

} // namespace

TEST(Extract, SumDown) {
    EqSystem s = sumdown_system();
    EXPECT_EQ(s.functions, (std::vector<std::string>{"wh2^X", "wh2^Y"}));
    ASSERT_EQ(s.eqs.size(), 4u);
    const RecEq *x = s.step_of("wh2^X");
    const RecEq *y = s.step_of("wh2^Y");
    ASSERT_TRUE(x && y);
    // wh^x(k) = wh^x(k-1) - 1 ; wh^y(k) = wh^y(k-1) + wh^x(k-1)
    EXPECT_EQ(x->rhs, Polynomial::var("@wh2^X") - Polynomial(1));
    EXPECT_EQ(y->rhs, Polynomial::var("@wh2^Y") + Polynomial::var("@wh2^X"));
    EXPECT_EQ(s.base_of("wh2^X")->rhs, P("X"));
    EXPECT_EQ(s.base_of("wh2^Y")->rhs, P("Y"));
    EXPECT_EQ(x->to_string(), "wh2^X(k1,X,Y) = wh2^X(k1-1,X,Y) - 1  for k1 > 0");
    EXPECT_EQ(s.base_of("wh2^X")->to_string(), "wh2^X(k1,X,Y) = X  for k1 = 0");
}

TEST(Extract, IdentityUpdate) {
    EqSystem s = extract(manual_step("X > 0, X2 = X, Y2 = Y - 1"));
    EXPECT_EQ(s.step_of("q^A")->rhs, Polynomial::var("@q^A"));
}

TEST(Extract, InequalityUpdateIsNondeterministic) {
    try {
        extract(manual_step("X > 0, X2 <= X, Y2 = Y"));
        FAIL();
    } catch (const NonDeterministicUpdate &e) {
        EXPECT_EQ(e.var(), "A");
    }
}

TEST(Extract, PolynomialDefinitions) {
    LoopStep s = manual_step("X > 0, X2 = X - 1");
    s.defs = {PolyDef{"Y2", P("Y + X*k7")}};
    s.carried = {"k7"};
    EqSystem sys = extract(s);
    EXPECT_EQ(sys.params, (std::vector<Var>{"A", "B", "k7"}));
    EXPECT_EQ(sys.step_of("q^B")->rhs, C("@q_B + @q_A*k7"));
}

TEST(EqGraph, Equation1) {
    EqSystem s = sumdown_system().subsystem({"wh2^X"});
    EqGraph g = build_eq_graph(s);
    EXPECT_EQ(g.nodes, (std::vector<std::string>{"entry", "wh2^X", "halt"}));
    ASSERT_EQ(g.edges.size(), 3u);
    EXPECT_EQ(g.edges[0].eq, "e0");
    EXPECT_EQ(g.edges[1].from, "wh2^X");
    EXPECT_EQ(g.edges[1].to, "wh2^X");
    EXPECT_EQ(g.edges[2].to, "halt");
}

TEST(EqGraph, EmptySystem) {
    EqGraph g = build_eq_graph(EqSystem{});
    EXPECT_EQ(g.nodes, (std::vector<std::string>{"entry", "halt"}));
    EXPECT_TRUE(g.edges.empty());
}

TEST(EqGraph, TwoFunctions) {
    EqGraph g = build_eq_graph(sumdown_system());
    bool y_to_x = false;
    for (auto &e : g.edges)
        if (e.from == "wh2^Y" && e.to == "wh2^X") y_to_x = true;
    EXPECT_TRUE(y_to_x);
    // Entry leads to the function nobody calls.
    EXPECT_EQ(g.edges[0].to, "wh2^Y");
}

TEST(SccOrder, CalleesFirst) {
    auto order = scc_order(sumdown_system());
    ASSERT_EQ(order.size(), 2u);
    EXPECT_EQ(order[0], (std::vector<std::string>{"wh2^X"}));
    EXPECT_EQ(order[1], (std::vector<std::string>{"wh2^Y"}));
}

TEST(SccOrder, CoupledRejected) {
    EXPECT_THROW(scc_order(extract(manual_step("X > 0, X2 = Y, Y2 = X"))), CyclicDependency);
}

TEST(ReachingDefinitions, CounterIsTheOnlyDefinition) {
    EqSystem s = sumdown_system().subsystem({"wh2^X"});
    const RecEq &e1 = *s.step_of("wh2^X");
    const RecEq &e2 = *s.base_of("wh2^X");
    EXPECT_TRUE(classify(e1, "k1").defined);
    EXPECT_TRUE(classify(e1, "k1").constrained);
    EXPECT_FALSE(classify(e2, "k1").defined);
    EXPECT_TRUE(classify(e2, "k1").constrained);
    for (auto v : {"X", "Y"})
        for (auto *e : {&e1, &e2}) {
            EXPECT_FALSE(classify(*e, v).defined);
            EXPECT_FALSE(classify(*e, v).constrained);
        }
    RdAssignment rd = reaching_definitions(s);
    EXPECT_TRUE(rd["entry"].empty());
    EXPECT_EQ(rd["wh2^X"], (std::set<RdFact>{{"k1", e1.id}}));
    EXPECT_EQ(rd["halt"], (std::set<RdFact>{{"k1", e2.id}}));
    EXPECT_EQ(symbolic_constants(s, {"X", "Y", "k1"}), (VarSet{"X", "Y"}));
}

TEST(ReachingDefinitions, Equation5System) {
    EqSystem s = sumdown_system();
    auto sol = solve_system_traced(s);
    EXPECT_EQ(sol.constants.at("wh2^Y"), (VarSet{"X", "Y"}));
}

TEST(ReachingDefinitions, EmptyGraph) {
    RdAssignment rd = reaching_definitions(EqSystem{});
    EXPECT_TRUE(rd["entry"].empty());
    EXPECT_TRUE(rd["halt"].empty());
}

TEST(ReachingDefinitions, CounterNeverConstant) {
    for (const char *name : {"sumdown.chc", "accumulate.chc", "countdown.chc", "triangular.chc", "squares.chc"}) {
        pc::CountedProgram cp = counted(sample(name));
        for (auto &L : cp.loops) {
            EqSystem s = extract(loop_step(L));
            EXPECT_FALSE(symbolic_constants(s, {s.counter}).count(s.counter)) << name;
        }
    }
}

TEST(RemoveConstants, Equation3) {
    EqSystem s = remove_constants(sumdown_system().subsystem({"wh2^X"}), {"X", "Y"});
    EXPECT_TRUE(s.params.empty());
    EXPECT_EQ(s.base_of("wh2^X")->rhs, P("c_X"));
    EXPECT_EQ(s.step_of("wh2^X")->to_string(), "wh2^X(k1) = wh2^X(k1-1) - 1  for k1 > 0");
}

TEST(RemoveConstants, RejectsNonConstant) {
    EXPECT_THROW(remove_constants(sumdown_system(), {"k1"}), NotConstant);
}

TEST(RemoveConstants, EmptySetIsIdentity) {
    EqSystem s = sumdown_system();
    EqSystem r = remove_constants(s, {});
    EXPECT_EQ(r.to_string(), s.to_string());
}

// Original and rewritten systems agree when the constants are
// instantiated.
TEST(RemoveConstants, ConstantsDropOut) {
    EqSystem s = sumdown_system();
    EqSystem one = substitute_solution(s, solve_system(s).at("wh2^X")).subsystem({"wh2^Y"});
    EqSystem red = remove_constants(one, {"X", "Y"});
    for (int x = -3; x <= 3; ++x)
        for (int y = -3; y <= 3; ++y) {
            std::map<Var, Rational> env{{"X", x}, {"Y", y}, {"c_X", x}, {"c_Y", y}};
            Rational f0 = one.base_of("wh2^Y")->rhs.evaluate(env), f1 = red.base_of("wh2^Y")->rhs.evaluate(env);
            EXPECT_EQ(f0, f1);
            for (int k = 1; k <= 15; ++k) {
                env["k1"] = k;
                env["@wh2^Y"] = f0;
                f0 = one.step_of("wh2^Y")->rhs.evaluate(env);
                env["@wh2^Y"] = f1;
                f1 = red.step_of("wh2^Y")->rhs.evaluate(env);
                EXPECT_EQ(f0, f1);
            }
        }
}

TEST(Solver, SumPoly) {
    EXPECT_EQ(sum_poly_capped(P("i"), "i"), P("1/2*i^2 + 1/2*i"));
    EXPECT_EQ(sum_poly_capped(P("k^2"), "k"), P("k*(k+1)*(2*k+1)/6"));
    EXPECT_EQ(sum_poly_capped(P("c_x - (k - 1)"), "k"), P("c_x*k - k*(k-1)/2"));
    EXPECT_THROW(sum_poly_capped(P("k^8"), "k"), DegreeCap);
}

TEST(Solver, SumPolyTelescopes) {
    std::mt19937 rng(7);
    std::uniform_int_distribution<int> c(-4, 4), d(0, 6);
    for (int t = 0; t < 50; ++t) {
        Polynomial p;
        for (int i = 0; i < 4; ++i) p += Polynomial(c(rng)) * P("k").pow(d(rng)) * (i % 2 ? P("a") : Polynomial(1));
        Polynomial s = sum_poly_capped(p, "k");
        EXPECT_EQ(s - s.substitute("k", P("k - 1")), p);
        EXPECT_TRUE(s.substitute("k", Polynomial(0)).is_zero());
    }
}

TEST(Solver, Equation3) {
    ClosedForm f = solve_first_order({"k", 1, P("-1"), P("c_x")});
    EXPECT_EQ(f.poly, P("c_x - k"));
}

TEST(Solver, Equation5) {
    ClosedForm f = solve_first_order({"k", 1, P("c_x - (k - 1)"), P("c_y")});
    EXPECT_EQ(f.poly, P("c_y - 1/2*k*(k - 2*c_x - 1)"));
}

TEST(Solver, Geometric) {
    ClosedForm f = solve_first_order({"k", 2, Polynomial(), P("c")});
    EXPECT_TRUE(f.poly.is_zero());
    EXPECT_EQ(f.exp_base, 2);
    EXPECT_EQ(f.exp_coeff, P("c"));
    EXPECT_EQ(f.evaluate({{"k", 5}, {"c", 3}}), 96);
    ClosedForm g = solve_first_order({"k", 2, Polynomial(1), Polynomial()});
    EXPECT_EQ(g.poly, Polynomial(-1));
    EXPECT_EQ(g.exp_coeff, Polynomial(1));
    ClosedForm h = solve_first_order({"k", Rational(1, 2), P("k^2 + c"), P("d")});
    EXPECT_EQ(h.exp_base, Rational(1, 2));
    ClosedForm z = solve_first_order({"k", 0, P("k"), P("d")});
    EXPECT_EQ(z.evaluate({{"k", 0}, {"d", 9}}), 9);
    EXPECT_EQ(z.evaluate({{"k", 4}, {"d", 9}}), 4);
}

TEST(Solver, SubstituteSolution) {
    EqSystem s = sumdown_system();
    auto forms = solve_system(s);
    auto fx = forms.at("wh2^X");
    EqSystem t = substitute_solution(s, fx);
    // Equation 4: wh^y(k) = wh^y(k-1) + x - k + 1
    EXPECT_EQ(t.step_of("wh2^Y")->rhs, C("@wh2_Y + X - k1 + 1"));
    EqSystem u = substitute_solution(s.subsystem({"wh2^X"}), forms.at("wh2^Y"));
    EXPECT_EQ(u.to_string(), s.subsystem({"wh2^X"}).to_string());
}

TEST(Solver, SumDownClosedForms) {
    auto forms = solve_system(sumdown_system());
    EXPECT_EQ(forms.at("wh2^X").poly, P("X - k1"));
    EXPECT_EQ(forms.at("wh2^Y").poly, P("Y - 1/2*k1^2 + k1*X + 1/2*k1"));
    EXPECT_EQ(forms.at("wh2^Y").rhs_string(), "Y - 1/2*k1^2 + k1*X + 1/2*k1");
    EXPECT_EQ(forms.at("wh2^X").to_string(), "wh2^X(k1,X,Y) = X - k1");
}

TEST(Solver, AccumulatorSystem) {
    pc::CountedProgram cp = counted(sample("accumulate.chc"));
    EqSystem s = extract(loop_step(cp.loops.at(0)));
    // Equation 9 before substitution.
    EXPECT_EQ(s.step_of("f2^Z")->rhs, C("@f2_X + @f2_Y + 1 + @f2_Z"));
    auto sol = solve_system(s);
    EXPECT_EQ(sol.at("f2^X").poly, P("X - k1"));
    EXPECT_EQ(sol.at("f2^Y").poly, P("Y + k1")); // printed as f^z in the source text; it is f^y
    EqSystem t = substitute_solution(substitute_solution(s, sol.at("f2^X")), sol.at("f2^Y"));
    EXPECT_EQ(t.step_of("f2^Z")->rhs, C("X + Y + 1 + @f2_Z")); // Equation 10
    EXPECT_EQ(sol.at("f2^Z").poly, P("Z + k1*(X + Y + 1)"));
    EXPECT_EQ(sol.at("f2^W").poly, P("W"));
}

TEST(Solver, FreshCountersBlockSolving) {
    LoopStep s = manual_step("X > 0, X2 = X - 1");
    s.defs = {PolyDef{"Y2", P("Y + k7")}};
    s.carried = {"k7"};
    EXPECT_NO_THROW(solve_system(extract(s)));
    EXPECT_THROW(solve_system(extract(s, true)), UnsupportedRecurrence);
}

// Iterating the recurrence matches the counted loop run for k iterations.
TEST(Solver, ExtractionFidelity) {
    for (const char *name : {"sumdown.chc", "accumulate.chc", "countdown.chc", "triangular.chc", "transfer.chc",
                             "halving.chc", "squares.chc"}) {
        pc::CountedProgram cp = counted(sample(name));
        for (auto &L : cp.loops) {
            EqSystem s = extract(loop_step(L));
            auto forms = solve_system(s);
            pc::Evaluator ev({L.base, L.step}, {{L.pred, 1 + L.in.size()}});
            for (int x = 0; x <= 4; ++x)
                for (int y = 0; y <= 4; ++y) {
                    std::vector<Rational> in(L.in.size(), 0);
                    in[0] = x;
                    if (in.size() > 1) in[1] = y;
                    for (int k = 0; k <= 6; ++k) {
                        std::vector<Rational> arg{k};
                        arg.insert(arg.end(), in.begin(), in.end());
                        auto r = ev.solve(L.pred, arg);
                        if (r.empty()) break;
                        ASSERT_EQ(r.size(), 1u);
                        std::map<Var, Rational> env{{L.counter, k}};
                        for (std::size_t i = 0; i < in.size(); ++i) env[L.in[i]] = in[i];
                        for (std::size_t j = 0; j < s.functions.size(); ++j)
                            EXPECT_EQ(forms.at(s.functions[j]).evaluate(env), (*r.begin())[j])
                                << name << " " << s.functions[j] << " k=" << k;
                    }
                }
        }
    }
}

TEST(Accumulator, AccumulatorShape) {
    NonTailRec r;
    r.name = "wh";
    r.params = {"X1", "Y1"};
    r.guard = {lin::LinConstraint::gt(lin::LinTerm::var("X1"), lin::LinTerm())};
    r.call_args = {lin::LinTerm::var("X1") - lin::LinTerm(1), lin::LinTerm::var("Y1") + lin::LinTerm(1)};
    r.add = P("X1 + Y1 + 1");
    r.base = Polynomial();
    r.base_guard = {lin::LinConstraint::le(lin::LinTerm::var("X1"), lin::LinTerm())};
    EXPECT_EQ(r.eval(ints({2, 0})), Rational(6));

    chc::Program p = to_accumulator(r);
    const chc::Clause &step = *p.find("c3");
    EXPECT_EQ(step.head.pred, "wh_aux");
    EXPECT_EQ(step.to_string(),
              "#c3: wh_aux(X1,Y1,Z,W) :- X1 > 0, X1_1 = X1 - 1, Y1_1 = Y1 + 1, Z_1 = X1 + Y1 + Z + 1, W_1 = W, "
              "wh_aux(X1_1,Y1_1,Z_1,W_1).");
    chc::Program back = chc::parse_program(p.to_string());
    EXPECT_TRUE(chc::same_program(back, p));

    for (int x = 0; x <= 5; ++x)
        for (int y = 0; y <= 5; ++y) {
            Rational want = *r.eval(ints({x, y}));
            SimResult ok = simulate(p, {x, y, want}, 100);
            EXPECT_EQ(ok.status, SimStatus::Ok) << x << "," << y;
            EXPECT_EQ(simulate(p, {x, y, want + 1}, 100).status, SimStatus::Stuck);
        }
}

TEST(Accumulator, CountingRecurrence) {
    NonTailRec r;
    r.name = "f";
    r.params = {"X"};
    r.guard = {lin::LinConstraint::gt(lin::LinTerm::var("X"), lin::LinTerm())};
    r.call_args = {lin::LinTerm::var("X") - lin::LinTerm(1)};
    r.add = Polynomial(1);
    r.base_guard = {lin::LinConstraint::le(lin::LinTerm::var("X"), lin::LinTerm())};
    chc::Program p = to_accumulator(r);
    EXPECT_NE(p.find("c3")->to_string().find("Z_1 = Z + 1"), std::string::npos);
    r.coeff = 2;
    EXPECT_THROW(to_accumulator(r), UnsupportedShape);
}
