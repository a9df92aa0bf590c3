#include "loopsum/regex.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace loopsum;
using namespace loopsum::rx;

namespace {

Re L(const char *c) { return letter(c); }
using Word = std::vector<std::string>;

void all_words(const std::vector<std::string> &sigma, std::size_t max_len, const std::function<void(const Word &)> &f) {
    Word w;
    std::function<void()> rec = [&] {
        f(w);
        if (w.size() == max_len) return;
        for (auto &c : sigma) {
            w.push_back(c);
            rec();
            w.pop_back();
        }
    };
    rec();
}

Re random_re(std::mt19937 &rng, int depth) {
    std::uniform_int_distribution<int> pick(0, depth <= 0 ? 1 : 5), lt(0, 3);
    static const char *names[] = {"a", "b", "c", "d"};
    switch (pick(rng)) {
    case 0: return letter(names[lt(rng)]);
    case 1: return std::uniform_int_distribution<int>(0, 5)(rng) == 0 ? epsilon() : letter(names[lt(rng)]);
    case 2: return concat(random_re(rng, depth - 1), random_re(rng, depth - 1));
    case 3:
    case 4: return alt(random_re(rng, depth - 1), random_re(rng, depth - 1));
    default: return star(random_re(rng, depth - 1));
    }
}

Cfg twopath_cfg() {
    Cfg g;
    g.nodes = {"wh", "true", "false"};
    g.edges = {{"wh", "c1", "wh"}, {"wh", "c2", "wh"}, {"wh", "c3", "true"}};
    return g;
}

} // namespace

TEST(RegExpr, SmartConstructors) {
    Re a = L("a");
    EXPECT_EQ(concat(empty(), a)->kind, Kind::Empty);
    EXPECT_TRUE(same(concat(epsilon(), a), a));
    EXPECT_TRUE(same(alt(empty(), a), a));
    EXPECT_TRUE(same(alt(a, a), a));
    EXPECT_EQ(star(empty())->kind, Kind::Epsilon);
    EXPECT_EQ(star(epsilon())->kind, Kind::Epsilon);
    EXPECT_TRUE(same(star(star(a)), star(a)));
    EXPECT_TRUE(same(concat(concat(a, L("b")), L("c")), concat(a, concat(L("b"), L("c")))));
}

TEST(RegExpr, Rendering) {
    Re e = concat(star(alt(L("c1"), L("c2"))), L("c3"));
    EXPECT_EQ(to_string(e), "(c1 + c2)* c3");
    EXPECT_EQ(to_string(epsilon()), "eps");
    EXPECT_EQ(to_string(empty()), "empty");
}

TEST(PathExpression, TwoPath) {
    Re e = path_expression(twopath_cfg(), "wh", "true");
    EXPECT_EQ(to_string(e), "(c1 + c2)* c3");
}

TEST(PathExpression, SingleEdgeAndUnreachable) {
    Cfg g;
    g.nodes = {"p", "q", "true", "false"};
    g.edges = {{"p", "c", "true"}};
    EXPECT_EQ(to_string(path_expression(g, "p", "true")), "c");
    EXPECT_EQ(path_expression(g, "q", "true")->kind, Kind::Empty);
}

TEST(First, Examples) {
    Re e = concat(star(alt(L("c1"), L("c2"))), L("c3"));
    EXPECT_EQ(first(e), (LetterSet{"c1", "c2", "c3"}));
    EXPECT_TRUE(first(epsilon()).empty());
    Re r = eliminate_multipath(e);
    EXPECT_EQ(firstpred(r, twopath_cfg()), (std::set<std::string>{"wh"}));
    EXPECT_THROW(firstpred(L("zz"), twopath_cfg()), UnknownLabel);
}

TEST(EliminateMultipath, Examples) {
    EXPECT_EQ(to_string(eliminate_multipath(star(alt(L("c1"), L("c2"))))), "c1* (c2 c1*)*");
    EXPECT_EQ(to_string(eliminate_multipath(star(L("c1")))), "c1*");
    Re abc = star(alt(alt(L("a"), L("b")), L("c")));
    EXPECT_EQ(to_string(eliminate_multipath(abc)), "a* (b a*)* (c a* (b a*)*)*");
    Re fig = concat(star(alt(L("c1"), L("c2"))), L("c3"));
    EXPECT_EQ(to_string(eliminate_multipath(fig)), "c1* (c2 c1*)* c3");
    EXPECT_EQ(to_string(eliminate_multipath(star(alt(L("c1"), L("c2"))), StarOrder::Reverse)), "c2* (c1 c2*)*");
}

TEST(EliminateMultipath, PreservesLanguageOnExamples) {
    Re abc = star(alt(alt(L("a"), L("b")), L("c")));
    Re r = eliminate_multipath(abc);
    all_words({"a", "b", "c"}, 8, [&](const Word &w) { EXPECT_EQ(lang_member(abc, w), lang_member(r, w)); });
}

TEST(LangMember, Examples) {
    Re e = concat(star(alt(L("c1"), L("c2"))), L("c3"));
    EXPECT_TRUE(lang_member(e, {"c1", "c2", "c3"}));
    EXPECT_TRUE(lang_member(eliminate_multipath(e), {"c1", "c2", "c3"}));
    EXPECT_FALSE(lang_member(epsilon(), {"c1"}));
    EXPECT_FALSE(lang_member(e, {"c3", "c1"}));
}

TEST(RegexProperty, RewriteSoundAndAltFree) {
    std::mt19937 rng(2024);
    for (int it = 0; it < 150; ++it) {
        Re e = random_re(rng, 4);
        for (auto order : {StarOrder::Ascending, StarOrder::Reverse}) {
            Re r = eliminate_multipath(e, order);
            EXPECT_FALSE(has_multipath_loop(r)) << to_string(e) << " => " << to_string(r);
            all_words({"a", "b", "c", "d"}, 5, [&](const Word &w) {
                ASSERT_EQ(lang_member(e, w), lang_member(r, w)) << to_string(e) << " => " << to_string(r);
            });
        }
    }
}

TEST(RegexProperty, RewriteSoundLongWords) {
    std::mt19937 rng(99);
    for (int it = 0; it < 25; ++it) {
        Re e = random_re(rng, 4);
        Re r = eliminate_multipath(e);
        all_words({"a", "b"}, 8, [&](const Word &w) { ASSERT_EQ(lang_member(e, w), lang_member(r, w)); });
    }
}

TEST(RegexProperty, PathExpressionMatchesGraphWalks) {
    std::mt19937 rng(17);
    for (int it = 0; it < 60; ++it) {
        std::uniform_int_distribution<int> nn(2, 5);
        int n = nn(rng);
        std::uniform_int_distribution<int> node(0, n - 1), ne(1, 8);
        Cfg g;
        for (int i = 0; i < n; ++i) g.nodes.insert("n" + std::to_string(i));
        int m = ne(rng);
        for (int i = 0; i < m; ++i)
            g.edges.push_back({"n" + std::to_string(node(rng)), "c" + std::to_string(i + 1), "n" + std::to_string(node(rng))});
        std::sort(g.edges.begin(), g.edges.end());
        std::string from = "n0", to = "n" + std::to_string(n - 1);
        Re e = path_expression(g, from, to);
        std::vector<std::string> sigma;
        for (auto &ed : g.edges) sigma.push_back(ed.clause);
        std::size_t max_len = m > 5 ? 5 : 7;
        all_words(sigma, max_len, [&](const Word &w) {
            std::string at = from;
            bool ok = true;
            for (auto &c : w) {
                const CfgEdge &ed = edge_of(g, c);
                if (ed.from != at) {
                    ok = false;
                    break;
                }
                at = ed.to;
            }
            bool is_path = ok && at == to;
            ASSERT_EQ(lang_member(e, w), is_path) << to_string(e);
        });
    }
}
