#include "test_support.hpp"

#include <teamprod/code_metrics.hpp>
#include <teamprod/util/rng.hpp>

#include <cmath>

using namespace teamprod;
using namespace teamprod::metrics;
using testing_support::fixture;

namespace {

// Formula restated independently of the library.
double effort_oracle(double eta1, double eta2, double n1, double n2) {
    if (eta2 == 0 || eta1 + eta2 == 0) return 0.0;
    return (n1 + n2) * (std::log(eta1 + eta2) / std::log(2.0)) * (eta1 / 2.0) * (n2 / eta2);
}

std::vector<std::string> texts(const std::vector<Token>& ts, TokenClass cls) {
    std::vector<std::string> out;
    for (const auto& t : ts)
        if (t.cls == cls) out.push_back(t.text);
    return out;
}

FileMetricVector py(std::string_view s) { return file_metrics(s, python_profile()); }
FileMetricVector cl(std::string_view s) { return file_metrics(s, c_like_profile()); }

}  // namespace

TEST(Tokenize, CalcVersionOneClasses) {
    auto ts = tokenize(fixture("calc/v1.py"), python_profile());
    ASSERT_EQ(ts.size(), 12u);
    EXPECT_EQ(texts(ts, TokenClass::operand), (std::vector<std::string>{"a", "b", "a", "b"}));
    EXPECT_EQ(texts(ts, TokenClass::op), (std::vector<std::string>{"(", ",", ")", ":", "return", "+"}));
    EXPECT_EQ(texts(ts, TokenClass::other), (std::vector<std::string>{"def", "add"}));
}

TEST(Tokenize, EmptyAndCommentOnly) {
    EXPECT_TRUE(tokenize("", python_profile()).empty());
    EXPECT_TRUE(tokenize("# one\n   # two\n\n", python_profile()).empty());
    EXPECT_TRUE(tokenize("// x\n/* y\n z */\n", c_like_profile()).empty());
}

TEST(Tokenize, StringsAndPrefixes) {
    auto ts = tokenize("s = f'it''s' + \"\"\"multi\nline\"\"\" # tail\n", python_profile());
    std::vector<std::string> strings;
    for (const auto& t : ts)
        if (t.kind == TokenKind::string) strings.push_back(t.text);
    ASSERT_EQ(strings.size(), 3u);
    EXPECT_EQ(strings[0], "f'it'");
    EXPECT_EQ(ts.back().end_line, 2);
}

TEST(Tokenize, UnterminatedStringRecovers) {
    auto a = analyze("x = 'oops\ny = 1\n", python_profile());
    EXPECT_EQ(a.lex_warnings, 1u);
    EXPECT_EQ(a.tokens.back().text, "1");
    auto b = analyze("int x; /* never closed\n", c_like_profile());
    EXPECT_EQ(b.lex_warnings, 1u);
    EXPECT_EQ(b.tokens.size(), 3u);
}

TEST(Halstead, Examples) {
    EXPECT_DOUBLE_EQ(halstead_effort(6, 2, 6, 4), 180.0);
    EXPECT_EQ(halstead_effort(0, 0, 0, 0), 0.0);
    EXPECT_NEAR(halstead_effort(4, 3, 10, 9), 114.0 * std::log2(7.0), 1e-9);
    EXPECT_EQ(halstead_effort(5, 0, 7, 0), 0.0);
}

TEST(FileMetrics, CalcVersionOneExact) {
    auto m = py(fixture("calc/v1.py"));
    EXPECT_EQ(m.nloc, 2);
    EXPECT_EQ(m.token_count, 12);
    EXPECT_EQ(m.function_count, 1);
    EXPECT_EQ(m.cyclomatic, 1);
    EXPECT_EQ(m.halstead.eta1, 6);
    EXPECT_EQ(m.halstead.eta2, 2);
    EXPECT_EQ(m.halstead.n1, 6);
    EXPECT_EQ(m.halstead.n2, 4);
    EXPECT_NEAR(m.halstead.effort, 180.0, 1e-9);
}

// v2 and v3 expectations are hand counts of the fixture files:
// v2 = v1 plus `def mul(a, b): return a * b` on two lines.
TEST(FileMetrics, CalcVersionTwoHandCount) {
    auto m = py(fixture("calc/v2.py"));
    EXPECT_EQ(m.nloc, 4);
    EXPECT_EQ(m.token_count, 24);
    EXPECT_EQ(m.function_count, 2);
    EXPECT_EQ(m.cyclomatic, 2);
    // operators ( , ) : return + *  -> 7 distinct, 12 total; operands a b -> 2 distinct, 8 total
    EXPECT_EQ(m.halstead.eta1, 7);
    EXPECT_EQ(m.halstead.n1, 12);
    EXPECT_EQ(m.halstead.eta2, 2);
    EXPECT_EQ(m.halstead.n2, 8);
    EXPECT_NEAR(m.halstead.effort, effort_oracle(7, 2, 12, 8), 1e-9);
}

// v3 merges both into `calc(a, b, op)` with one `if`.
TEST(FileMetrics, CalcVersionThreeHandCount) {
    auto m = py(fixture("calc/v3.py"));
    EXPECT_EQ(m.nloc, 4);
    EXPECT_EQ(m.token_count, 23);
    EXPECT_EQ(m.function_count, 1);
    EXPECT_EQ(m.cyclomatic, 2);
    // operators ( ,x2 ) :x2 if == returnx2 + *  -> 9 distinct, 12 total
    // operands a b op "add" -> 4 distinct; a b op op "add" a b a b -> 9 total
    EXPECT_EQ(m.halstead.eta1, 9);
    EXPECT_EQ(m.halstead.n1, 12);
    EXPECT_EQ(m.halstead.eta2, 4);
    EXPECT_EQ(m.halstead.n2, 9);
    EXPECT_NEAR(m.halstead.effort, effort_oracle(9, 4, 12, 9), 1e-9);
}

TEST(FileMetrics, RefactoringCountsAsProductive) {
    auto v2 = py(fixture("calc/v2.py")), v3 = py(fixture("calc/v3.py"));
    auto d = commit_code_delta(v2, v3);
    EXPECT_EQ(d.token_count, 1);
    EXPECT_EQ(d.function_count, 1);
    EXPECT_GT(d.halstead.effort, 0.0);
    EXPECT_EQ(d.nloc, 0);
}

TEST(FileMetrics, EmptyFileIsZero) { EXPECT_EQ(py(""), FileMetricVector{}); }

TEST(FileMetrics, TwoFunctionsOneBranch) {
    auto m = py("def f(x):\n    if x:\n        return 1\n    return 2\n\ndef g(y):\n    return y\n");
    EXPECT_EQ(m.function_count, 2);
    EXPECT_EQ(m.cyclomatic, 3);
    auto c = cl("int f(int x) {\n  if (x) return 1;\n  return 2;\n}\nint g(int y) { return y; }\n");
    EXPECT_EQ(c.function_count, 2);
    EXPECT_EQ(c.cyclomatic, 3);
}

TEST(FileMetrics, TopLevelCodeAddsItsOwnPath) {
    auto m = py("x = 1\nif x and y:\n    x = 2\n");
    EXPECT_EQ(m.function_count, 0);
    EXPECT_EQ(m.cyclomatic, 3);  // 1 + if + and
    auto n = py("import os\n\ndef f():\n    return 1\n");
    EXPECT_EQ(n.cyclomatic, 2);
}

TEST(FileMetrics, NestedAndMethodDefinitions) {
    auto m = py("class A:\n    def f(self):\n        def g():\n            return 1\n        return g\n");
    EXPECT_EQ(m.function_count, 2);
    auto c = cl("struct S { int f() { return 1; } };\nint x = g(2);\nvoid h() { while (x > 0 && y) { x--; } }\n");
    EXPECT_EQ(c.function_count, 2);  // the call g(2) after '=' is not a definition
}

TEST(FileMetrics, CLikeDecisionOperators) {
    auto c = cl("int f(int a) {\n  return a > 0 ? (a || 1) : 0;\n}\n");
    EXPECT_EQ(c.cyclomatic, 3);
    auto pre = cl("#include <x>\n#define Y 2\nint v;\n");
    EXPECT_EQ(pre.nloc, 1);
    EXPECT_EQ(pre.token_count, 3);
}

TEST(FileMetrics, Invariants) {
    Rng rng(8);
    const std::vector<std::string> pool{"x = a + b", "if a > b:", "    return a", "y = f(x, 3)", "# note",
                                        "", "def h(p):", "    while p: p -= 1", "s = 'str'", "z = [1, 2] * k"};
    for (int round = 0; round < 100; ++round) {
        std::string text;
        for (auto n = rng.between(0, 12); n > 0; --n) text += pool[rng.below(pool.size())] + "\n";
        auto a = analyze(text, python_profile());
        auto m = file_metrics(a, python_profile());
        long long other = 0;
        for (const auto& t : a.tokens) other += t.cls == TokenClass::other;
        EXPECT_EQ(m.token_count, m.halstead.n1 + m.halstead.n2 + other);
        EXPECT_LE(m.halstead.eta1, m.halstead.n1);
        EXPECT_LE(m.halstead.eta2, m.halstead.n2);
        EXPECT_GE(m.halstead.effort, 0.0);
        EXPECT_EQ(m.halstead.effort == 0.0, m.halstead.n1 + m.halstead.n2 == 0 || m.halstead.eta2 == 0 ||
                                                (m.halstead.eta1 == 0));
        if (m.function_count > 0) {
            EXPECT_GE(m.cyclomatic, m.function_count);
        }
        auto longer = file_metrics(text + "q = 1\n", python_profile());
        EXPECT_EQ(longer.nloc, m.nloc + 1);
        auto other_text = pool[rng.below(pool.size())] + "\n";
        auto o = file_metrics(other_text, python_profile());
        EXPECT_EQ(commit_code_delta(m, o), commit_code_delta(o, m));
        EXPECT_EQ(commit_code_delta(m, m), FileMetricVector{});
    }
}

TEST(FileMetrics, DeltaArithmetic) {
    FileMetricVector pre, post;
    pre.nloc = 2;
    pre.halstead.effort = 180;
    post.nloc = 5;
    post.halstead.effort = 300;
    auto d = commit_code_delta(pre, post);
    EXPECT_EQ(d.nloc, 3);
    EXPECT_DOUBLE_EQ(d.halstead.effort, 120);
}

TEST(Profiles, RegistryAndCustomProfile) {
    ProfileRegistry reg;
    EXPECT_EQ(reg.for_path("pkg/mod.PY")->name, "python");
    EXPECT_EQ(reg.for_path("src/x.cpp")->name, "c-like");
    EXPECT_EQ(reg.for_path("README.md"), nullptr);
    reg.add(LanguageProfile::parse("name = toy\nextensions = .toy .c\nline_comments = --\n"
                                   "operators = + ( )\nkeywords = if\nclass.keyword = other\n"));
    EXPECT_EQ(reg.for_path("a.c")->name, "toy");
    auto ts = tokenize("if (a + 1) -- rest\n", *reg.by_name("toy"));
    ASSERT_EQ(ts.size(), 6u);
    EXPECT_EQ(ts[0].cls, TokenClass::other);
    EXPECT_EQ(ts[2].cls, TokenClass::operand);
    EXPECT_EQ(ts[3].cls, TokenClass::op);
    EXPECT_ERROR_KIND(LanguageProfile::parse("extensions = .x\n"), ErrorKind::malformed_input);
    EXPECT_ERROR_KIND(LanguageProfile::parse("name = x\nblock_comments = /*\n"), ErrorKind::malformed_input);
    EXPECT_ERROR_KIND(LanguageProfile::parse("name = x\nclass.symbol = verb\n"), ErrorKind::malformed_input);
}

TEST(MetricRows, RoundTrip) {
    std::vector<MetricRow> rows{{"c1", "a.py", py(fixture("calc/v1.py"))}, {"c2", "b,c.py", py(fixture("calc/v3.py"))}};
    auto back = read_metric_rows(write_metric_rows(rows));
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[1].path, "b,c.py");
    EXPECT_EQ(back[0].values, rows[0].values);
    EXPECT_EQ(back[1].values, rows[1].values);
}
