#include "loopsum/cli.hpp"
#include "pipeline_util.hpp"

#include <gtest/gtest.h>

#include <cstdio>

using namespace loopsum;
using loopsum::testing::P;

namespace {

struct Run {
    int code;
    std::string out, err;
};

Run invoke(std::vector<std::string> args) {
    args.insert(args.begin(), "loopsum");
    std::vector<const char *> argv;
    for (auto &a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    int code = loopsum::cli::main(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string S(const std::string &name) { return std::string(LOOPSUM_SAMPLES) + "/" + name; }

std::string tmp_file(const std::string &name, const std::string &text) {
    std::string path = ::testing::TempDir() + name;
    std::ofstream(path) << text;
    return path;
}

} // namespace

TEST(Cli, PathExpression) {
    auto r = invoke({S("twopath.chc"), "--emit", "pathexpr"});
    EXPECT_EQ(r.code, 0);
    EXPECT_EQ(r.out, "c1* (c2 c1*)* c3\n");
    auto rev = invoke({S("twopath.chc"), "--emit", "pathexpr", "--star-order", "reverse"});
    EXPECT_EQ(rev.out, "c2* (c1 c2*)* c3\n");
}

TEST(Cli, SummaryJsonBounds) {
    auto r = invoke({S("twopath.chc"), "--format", "json"});
    ASSERT_EQ(r.code, 0) << r.err;
    auto j = emit::Json::parse(r.out);
    EXPECT_EQ(j["entry"], "wh");
    auto b = j["outputs"]["B'"];
    EXPECT_EQ(emit::poly_from_json(b["lower"]), P("1/2*A^2 - 1/2*A"));
    EXPECT_EQ(emit::poly_from_json(b["upper"]), P("B + 1/2*A^2 + 1/2*A"));
    EXPECT_EQ(emit::poly_from_json(j["outputs"]["A'"]["lower"]), P("0"));
    ASSERT_EQ(j["loops"].size(), 2u);
    auto &wh2 = j["loops"][0];
    EXPECT_EQ(wh2["predicate"], "wh2");
    EXPECT_EQ(emit::poly_from_json(wh2["closed_forms"]["B"]), P("B - k1"));
    EXPECT_EQ(wh2["counters"][0]["name"], "k1");
    EXPECT_EQ(emit::poly_from_json(wh2["counters"][0]["ranking"]), P("B"));
    EXPECT_FALSE(j["fidelity_notes"].empty());
    EXPECT_TRUE(j["assumptions"]["nonneg"].is_array());
}

TEST(Cli, PolynomialJsonRoundTrip) {
    for (std::string t : {"0", "1/2*A^2 - 1/2*A", "-3*x*y^2 + 7/5", "k1"}) {
        auto j = emit::poly_json(P(t));
        EXPECT_EQ(emit::poly_from_json(emit::Json::parse(j.dump())), P(t)) << t;
    }
    auto j = emit::poly_json(P("1/2*A"));
    EXPECT_EQ(j[0]["coeff"], "1/2");
    EXPECT_EQ(emit::poly_json(P("3"))[0]["coeff"], "3/1");
}

TEST(Cli, EveryStageIsValidJson) {
    for (std::string f : {"twopath.chc", "sumdown.chc", "accumulate.chc"})
        for (auto &st : cli::kStages) {
            auto r = invoke({S(f), "--emit", st, "--format", "json"});
            ASSERT_EQ(r.code, 0) << f << " " << st << ": " << r.err;
            EXPECT_NO_THROW({ auto j = emit::Json::parse(r.out); (void)j; }) << f << " " << st;
        }
    auto all = invoke({S("twopath.chc"), "--emit", "all", "--format", "json"});
    ASSERT_EQ(all.code, 0);
    auto j = emit::Json::parse(all.out);
    for (auto &st : cli::kStages) EXPECT_TRUE(j.contains(st)) << st;
}

TEST(Cli, TextStagesReparse) {
    auto pp = invoke({S("twopath.chc"), "--emit", "path-program"});
    auto p = chc::parse_nonlinear_program(pp.out);
    EXPECT_EQ(p.clauses.size(), 5u);
    EXPECT_EQ(p.entry, "path");
    auto cp = invoke({S("twopath.chc"), "--emit", "counted"});
    EXPECT_EQ(chc::parse_nonlinear_program(cp.out).clauses.size(), 5u);
    // The path expression is made of the program's clause ids.
    auto pe = invoke({S("sumdown.chc"), "--emit", "pathexpr"});
    for (auto id : {"c1", "c2", "c3"}) EXPECT_NE(pe.out.find(id), std::string::npos);
}

TEST(Cli, RecurrencesInCaseNotation) {
    auto r = invoke({S("sumdown.chc"), "--emit", "recurrences"});
    EXPECT_NE(r.out.find("wh2^X(k1,X,Y) =\n"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("wh2^X(k1-1,X,Y) - 1  if k1 > 0"), std::string::npos) << r.out;
    auto j = emit::Json::parse(invoke({S("sumdown.chc"), "--emit", "recurrences", "--format", "json"}).out);
    auto &f = j[0]["functions"][1];
    EXPECT_EQ(f["function"], "wh2^Y");
    EXPECT_EQ(f["base"]["condition"][0], "k1 = 0");
    EXPECT_EQ(f["step"]["condition"][0], "k1 > 0");
}

TEST(Cli, ClosedFormsText) {
    auto r = invoke({S("sumdown.chc"), "--emit", "closed-forms"});
    EXPECT_EQ(r.out, "wh2^X(k1,X,Y) = X - k1\nwh2^Y(k1,X,Y) = Y - 1/2*k1^2 + k1*X + 1/2*k1\n");
}

TEST(Cli, RdJson) {
    auto j = emit::Json::parse(invoke({S("sumdown.chc"), "--emit", "rd"}).out);
    ASSERT_EQ(j.size(), 2u);
    EXPECT_EQ(j[0]["function"], "wh2^X");
    EXPECT_EQ(j[0]["rd"]["halt"], emit::Json::parse(R"([["k1","e2"]])"));
    EXPECT_EQ(j[0]["rd"]["wh2^X"], emit::Json::parse(R"([["k1","e1"]])"));
    EXPECT_EQ(j[0]["symbolic_constants"], emit::Json::parse(R"(["X","Y"])"));
}

TEST(Cli, Deterministic) {
    auto a = invoke({S("twopath.chc"), "--emit", "all", "--format", "json", "--check"});
    auto b = invoke({S("twopath.chc"), "--emit", "all", "--format", "json", "--check"});
    EXPECT_EQ(a.out, b.out);
}

TEST(Cli, CheckReportsTwoPathViolation) {
    auto r = invoke({S("twopath.chc"), "--check"});
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("(3,2)  VIOLATION  B' = 1 outside [3, 8]"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("grid point (A=3, B=2): B' = 1 outside [3, 8]"), std::string::npos);
}

TEST(Cli, CheckSumDownHasNoViolations) {
    auto j = emit::Json::parse(invoke({S("sumdown.chc"), "--check", "--format", "json"}).out);
    EXPECT_EQ(j["check"]["violations"], 0);
    EXPECT_EQ(j["check"]["rows"].size(), 26u); // 25 points, (0,0) leaves by both exits
    EXPECT_TRUE(j["fidelity_notes"].empty());
}

TEST(Cli, LoopFreeCheckPasses) {
    auto f = tmp_file("loopfree.chc", "entry(s/1).\ns(X) :- X >= 2, t(X+1).\ns(X) :- X < 2.\nt(X) :- X >= 0.\n");
    auto r = invoke({f, "--check"});
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("0 violations"), std::string::npos) << r.out;
}

TEST(Cli, UsageErrors) {
    EXPECT_EQ(invoke({"missing.chc"}).code, cli::kUsageError);
    EXPECT_EQ(invoke({}).code, cli::kUsageError);
    EXPECT_EQ(invoke({S("twopath.chc"), "--emit", "bogus"}).code, cli::kUsageError);
    EXPECT_EQ(invoke({S("twopath.chc"), "--format", "xml"}).code, cli::kUsageError);
    EXPECT_EQ(invoke({S("twopath.chc"), "--assume", "X<3"}).code, cli::kUsageError);
    EXPECT_EQ(invoke({S("twopath.chc"), "--entry", "nope/2"}).code, cli::kUsageError);
    EXPECT_EQ(invoke({S("twopath.chc"), "--max-degree", "0"}).code, cli::kUsageError);
    EXPECT_EQ(invoke({"--help"}).code, cli::kOk);
}

TEST(Cli, AnalysisErrorsAreStageLabelled) {
    auto r = invoke({S("squares.chc"), "--max-degree", "1"});
    EXPECT_EQ(r.code, cli::kAnalysisError);
    EXPECT_NE(r.err.find("error [solver]"), std::string::npos) << r.err;
    auto bad = tmp_file("bad.chc", "entry(f/1).\nf(X) :- X > 0, f(X - ).\n");
    auto p = invoke({bad});
    EXPECT_EQ(p.code, cli::kAnalysisError);
    EXPECT_NE(p.err.find("error [parse]"), std::string::npos) << p.err;
}

TEST(Cli, AllEmitsEarlyStagesBeforeFailing) {
    auto r = invoke({S("twopath.chc"), "--emit", "all", "--fresh-counters"});
    EXPECT_EQ(r.code, cli::kAnalysisError);
    EXPECT_NE(r.out.find("== pathexpr ==\nc1* (c2 c1*)* c3"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("== counted =="), std::string::npos);
    EXPECT_NE(r.err.find("k1"), std::string::npos) << r.err;
}

TEST(Cli, EntryOverride) {
    auto f = tmp_file("two.chc", "entry(a/1).\na(X) :- X <= 0.\nb(X,Y) :- X > 0, b(X-1,Y+1).\nb(X,Y) :- X <= 0.\n");
    auto r = invoke({f, "--entry", "b/2", "--format", "json"});
    ASSERT_EQ(r.code, 0) << r.err;
    auto j = emit::Json::parse(r.out);
    EXPECT_EQ(j["entry"], "b");
    EXPECT_EQ(emit::poly_from_json(j["outputs"]["Y'"]["lower"]), P("X + Y"));
}

TEST(Cli, SignAssumptions) {
    auto off = emit::Json::parse(invoke({S("sumdown.chc"), "--assume-nonneg", "false", "--format", "json"}).out);
    EXPECT_TRUE(off["outputs"]["Y'"]["lower"].is_null());
    auto x = emit::Json::parse(
        invoke({S("sumdown.chc"), "--assume-nonneg", "false", "--assume", "X>=0", "--format", "json"}).out);
    EXPECT_EQ(emit::poly_from_json(x["outputs"]["Y'"]["lower"]), P("Y - 1/2*X^2"));
    EXPECT_EQ(x["assumptions"]["nonneg"], emit::Json::parse(R"(["X"])"));
}
