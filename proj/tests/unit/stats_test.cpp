#include "test_support.hpp"

#include <teamprod/stats.hpp>

#include <cmath>
#include <random>

using namespace teamprod;
using namespace teamprod::stats;

namespace {

// Normal-equation solve with Gauss-Jordan; deliberately not the production QR route.
struct NormalFit {
    std::vector<double> beta, se;
};

NormalFit normal_equations(const std::vector<std::vector<double>>& x, const std::vector<double>& y) {
    const std::size_t n = y.size(), k = x.size();
    std::vector<std::vector<double>> a(k, std::vector<double>(2 * k, 0.0));
    std::vector<double> xty(k, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j)
            for (std::size_t r = 0; r < n; ++r) a[i][j] += x[i][r] * x[j][r];
        a[i][k + i] = 1.0;
        for (std::size_t r = 0; r < n; ++r) xty[i] += x[i][r] * y[r];
    }
    for (std::size_t c = 0; c < k; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c; r < k; ++r)
            if (std::fabs(a[r][c]) > std::fabs(a[piv][c])) piv = r;
        std::swap(a[c], a[piv]);
        double d = a[c][c];
        for (auto& v : a[c]) v /= d;
        for (std::size_t r = 0; r < k; ++r)
            if (r != c) {
                double f = a[r][c];
                for (std::size_t j = 0; j < 2 * k; ++j) a[r][j] -= f * a[c][j];
            }
    }
    NormalFit out;
    out.beta.assign(k, 0.0);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j) out.beta[i] += a[i][k + j] * xty[j];
    double sse = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        double f = 0.0;
        for (std::size_t i = 0; i < k; ++i) f += out.beta[i] * x[i][r];
        sse += (y[r] - f) * (y[r] - f);
    }
    double s2 = sse / static_cast<double>(n - k);
    for (std::size_t i = 0; i < k; ++i) out.se.push_back(std::sqrt(s2 * a[i][k + i]));
    return out;
}

// Two-sided tail of Student t by Simpson integration of the density.
double t_tail_numeric(double t, double df) {
    auto density = [df](double x) {
        return std::exp(std::lgamma((df + 1) / 2) - std::lgamma(df / 2)) / std::sqrt(df * M_PI) *
               std::pow(1 + x * x / df, -(df + 1) / 2);
    };
    const int steps = 20000;
    double a = 0, b = std::fabs(t), h = (b - a) / steps, s = density(a) + density(b);
    for (int i = 1; i < steps; ++i) s += density(a + i * h) * (i % 2 ? 4 : 2);
    return 1.0 - 2.0 * s * h / 3.0;
}

Frame planted(std::uint64_t seed, std::size_t n, double b0, double b1, double sigma) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> noise(0.0, sigma);
    std::uniform_real_distribution<double> u(0.0, 3.0);
    std::vector<double> ts, y;
    for (std::size_t i = 0; i < n; ++i) {
        ts.push_back(u(gen));
        y.push_back(b0 + b1 * ts.back() + noise(gen));
    }
    Frame f;
    f.add("team_size", ts);
    f.add("comms", y);
    return f;
}

Frame four_regressors(std::uint64_t seed, std::size_t n) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> z(0.0, 1.0);
    std::vector<double> ts, ind, fm, y;
    for (std::size_t i = 0; i < n; ++i) {
        ts.push_back(1.5 + 0.6 * z(gen));
        ind.push_back(0.5 * ts.back() + 0.4 * z(gen));
        fm.push_back(0.5 + 0.1 * z(gen));
        y.push_back(1.0 - 0.4 * ts.back() + 0.7 * ind.back() - 0.2 * ts.back() * ind.back() + 0.3 * fm.back() +
                    0.3 * z(gen));
    }
    Frame f;
    f.add("team_size", ts);
    f.add("ind", ind);
    f.add("fmodr", fm);
    f.add("tokens", y);
    return f;
}

}  // namespace

TEST(Pearson, Basics) {
    std::vector<double> x{1, 2, 3, 5, 8};
    std::vector<double> neg;
    for (double v : x) neg.push_back(-v);
    EXPECT_DOUBLE_EQ(pearson(x, x), 1.0);
    EXPECT_DOUBLE_EQ(pearson(x, neg), -1.0);
    EXPECT_TRUE(std::isnan(pearson(x, {4, 4, 4, 4, 4})));
}

TEST(Pearson, PlantedCorrelation) {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        std::mt19937_64 gen(seed);
        std::normal_distribution<double> z(0.0, 1.0);
        const double rho = 0.8;
        std::vector<double> a, b;
        for (int i = 0; i < 200; ++i) {
            double u = z(gen), v = z(gen);
            a.push_back(u);
            b.push_back(rho * u + std::sqrt(1 - rho * rho) * v);
        }
        double r = pearson(a, b);
        EXPECT_GE(r, 0.7) << seed;
        EXPECT_LE(r, 0.9) << seed;
    }
}

TEST(Pearson, MatrixAndExports) {
    Frame f;
    f.add("a", {1, 2, 3, 4});
    f.add("b", {2, 4, 6, 9});
    f.add("c", {1, 1, 1, 1});
    auto m = pearson_matrix(f, {"a", "b", "c"});
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(m.r[i][i], 1.0);
        for (std::size_t j = 0; j < 3; ++j)
            if (!std::isnan(m.r[i][j])) {
                EXPECT_EQ(m.r[i][j], m.r[j][i]);
            }
    }
    EXPECT_TRUE(std::isnan(m.r[0][2]));
    EXPECT_NE(write_correlation_csv(m).find("c,,,1"), std::string::npos);
    auto plot = nlohmann::json::parse(write_correlation_plot_data(m));
    EXPECT_TRUE(plot["values"][0][2].is_null());
    EXPECT_EQ(plot["features"].size(), 3u);

    Frame tiny;
    tiny.add("a", {1, 2});
    EXPECT_ERROR_KIND(pearson_matrix(tiny, {"a"}), ErrorKind::insufficient_observations);
}

TEST(Ols, ExactLine) {
    Frame f;
    std::vector<double> x{0, 1, 2, 3, 4, 5}, y;
    for (double v : x) y.push_back(2 - 0.5 * v);
    f.add("team_size", x);
    f.add("comms", y);
    auto r = ols_fit(ModelSpec::of('a', "comms"), f);
    EXPECT_NEAR(r.term(Term::intercept).beta, 2.0, 1e-12);
    EXPECT_NEAR(r.term(Term::ts).beta, -0.5, 1e-12);
    EXPECT_NEAR(r.r2, 1.0, 1e-12);
    EXPECT_EQ(r.df, 4u);
}

TEST(Ols, PlantedCoefficientsRecovered) {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        auto f = planted(seed, 500, 3.0, -0.3, 0.2);
        auto r = ols_fit(ModelSpec::of('a', "comms"), f);
        EXPECT_LT(std::fabs(r.term(Term::intercept).beta - 3.0), 3 * r.term(Term::intercept).se) << seed;
        EXPECT_LT(std::fabs(r.term(Term::ts).beta + 0.3), 3 * r.term(Term::ts).se) << seed;
    }
}

TEST(Ols, MatchesNormalEquationsOracle) {
    for (char fam : std::string("abcde")) {
        auto f = four_regressors(7, 300);
        auto spec = ModelSpec::of(fam, "tokens");
        std::vector<std::vector<double>> x;
        for (auto t : spec.terms) x.push_back(design_column(t, f, spec.columns));
        auto want = normal_equations(x, f.col("tokens"));
        auto got = ols_fit(spec, f);
        ASSERT_EQ(got.terms.size(), want.beta.size());
        for (std::size_t j = 0; j < want.beta.size(); ++j) {
            EXPECT_NEAR(got.terms[j].beta, want.beta[j], 1e-8) << fam << j;
            EXPECT_NEAR(got.terms[j].se, want.se[j], 1e-8) << fam << j;
            EXPECT_NEAR(got.terms[j].p, t_tail_numeric(got.terms[j].t, static_cast<double>(got.df)), 1e-7);
        }
    }
}

TEST(Ols, ConstantTarget) {
    Frame f;
    f.add("team_size", {1, 2, 3, 4, 5});
    f.add("comms", {7, 7, 7, 7, 7});
    auto r = ols_fit(ModelSpec::of('a', "comms"), f);
    EXPECT_NEAR(r.term(Term::ts).beta, 0.0, 1e-12);
    EXPECT_EQ(r.r2, 0.0);
}

TEST(Ols, Errors) {
    Frame f;
    f.add("team_size", {1, 2, 3});
    f.add("comms", {1, 2, 3});
    EXPECT_ERROR_KIND(ols_fit(ModelSpec::of('b', "comms"), f), ErrorKind::insufficient_observations);
    Frame flat;
    flat.add("team_size", {2, 2, 2, 2, 2});
    flat.add("comms", {1, 2, 3, 4, 5});
    EXPECT_ERROR_KIND(ols_fit(ModelSpec::of('a', "comms"), flat), ErrorKind::rank_deficient);
    EXPECT_ERROR_KIND(ModelSpec::of('z', "comms"), ErrorKind::invalid_argument);
    auto r = ols_fit(ModelSpec::of('a', "comms"), planted(1, 20, 1, 1, 0.1));
    EXPECT_ERROR_KIND(r.term(Term::ind), ErrorKind::wrong_model_family);
}

TEST(Ols, ResidualOrthogonalityAndRSquared) {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        auto f = four_regressors(seed, 120);
        for (char fam : std::string("abcde")) {
            auto spec = ModelSpec::of(fam, "tokens");
            auto r = ols_fit(spec, f);
            for (auto t : spec.terms) {
                auto col = design_column(t, f, spec.columns);
                double dot = 0, scale = 0;
                for (std::size_t i = 0; i < col.size(); ++i) {
                    dot += col[i] * r.residuals[i];
                    scale += std::fabs(col[i] * f.col("tokens")[i]);
                }
                EXPECT_LT(std::fabs(dot), 1e-8 * scale);
            }
            double c = pearson(r.fitted, f.col("tokens"));
            EXPECT_NEAR(r.r2, c * c, 1e-10);
            EXPECT_LE(r.adj_r2, r.r2);
        }
    }
}

TEST(PValues, ClosedForms) {
    EXPECT_NEAR(two_sided_p(1.0, 1.0), 0.5, 1e-14);  // Cauchy
    for (double t : {0.3, 1.0, 2.5, 7.0}) EXPECT_NEAR(two_sided_p(t, 2.0), 1 - t / std::sqrt(t * t + 2), 1e-13);
    EXPECT_EQ(two_sided_p(0.0, 10.0), 1.0);
    EXPECT_EQ(two_sided_p(INFINITY, 10.0), 0.0);
    EXPECT_NEAR(two_sided_p(2.228, 10), 0.05, 1e-4);
}

TEST(Bonferroni, ExamplesAndProperties) {
    EXPECT_NEAR(bonferroni({0.01}, 5)[0], 0.05, 1e-15);
    EXPECT_EQ(bonferroni({0.4}, 5)[0], 1.0);
    std::vector<double> p{0.0, 0.2, 0.003, 1.0};
    EXPECT_EQ(bonferroni(p, 1), p);
    auto adj = bonferroni({0.001, 0.002, 0.3}, 8);
    EXPECT_LE(adj[0], adj[1]);
    EXPECT_LE(adj[1], adj[2]);
    EXPECT_ERROR_KIND(bonferroni({1.2}, 2), ErrorKind::invalid_argument);
    EXPECT_ERROR_KIND(bonferroni({0.1}, 0), ErrorKind::invalid_argument);
    EXPECT_EQ(significance_stars(0.0009), "***");
    EXPECT_EQ(significance_stars(0.009), "**");
    EXPECT_EQ(significance_stars(0.049), "*");
    EXPECT_EQ(significance_stars(0.05), "");
}

TEST(Battery, DefaultBonferroniFactor) {
    auto f = four_regressors(3, 80);
    f.add("comms", f.col("tokens"));
    auto rs = fit_battery(f, {"comms", "tokens"}, "ac");
    ASSERT_EQ(rs.size(), 4u);
    EXPECT_EQ(rs[0].spec.family, 'a');
    auto single = ols_fit(ModelSpec::of('c', "tokens"), f);
    EXPECT_NEAR(rs[3].term(Term::ind).p_adj, std::min(1.0, 6 * single.term(Term::ind).p), 1e-15);
    EXPECT_NEAR(rs[1].term(Term::ts).p_adj, std::min(1.0, 2 * rs[1].term(Term::ts).p), 1e-15);
}

TEST(Derived, ElasticityPerDoubling) {
    EXPECT_NEAR(elasticity_per_doubling(-0.36), 0.221, 0.001);
    EXPECT_NEAR(elasticity_per_doubling(-0.52), 0.303, 0.001);
    EXPECT_EQ(elasticity_per_doubling(0.0), 0.0);
}

TEST(Derived, QuadraticVertex) {
    EXPECT_NEAR(*quadratic_vertex(0.35, -0.09), 6.99, 0.01);
    EXPECT_NEAR(*quadratic_vertex(0.86, -0.15), 19.0, 2.0);
    EXPECT_FALSE(quadratic_vertex(0.2, 0.01).has_value());
    EXPECT_FALSE(quadratic_vertex(0.2, 0.0).has_value());
}

TEST(Derived, VertexInvariantUnderTargetScaling) {
    std::mt19937_64 gen(4);
    std::normal_distribution<double> z(0.0, 0.05);
    std::vector<double> ts, y, y3;
    for (int i = 0; i < 200; ++i) {
        double l = 0.05 * i / 10.0 + 0.01 * i;
        ts.push_back(l);
        y.push_back(1.0 + 0.8 * l - 0.2 * l * l + z(gen));
        y3.push_back(3.0 * y.back());
    }
    Frame f;
    f.add("team_size", ts);
    f.add("cycc", y);
    f.add("cycc3", y3);
    auto a = ols_fit(ModelSpec::of('b', "cycc"), f);
    auto b = ols_fit(ModelSpec::of('b', "cycc3"), f);
    auto va = quadratic_vertex(a.term(Term::ts).beta, a.term(Term::ts2).beta);
    auto vb = quadratic_vertex(b.term(Term::ts).beta, b.term(Term::ts2).beta);
    ASSERT_TRUE(va && vb);
    EXPECT_NEAR(*va, *vb, 1e-9 * *va);
    EXPECT_NEAR(std::log(*va), 2.0, 0.3);
}

TEST(Derived, MarginalEffects) {
    RegressionResult r;
    r.spec = ModelSpec::of('e', "comms");
    for (auto [t, b, mean] : std::vector<std::tuple<Term, double, double>>{
             {Term::intercept, 1.0, 1.0}, {Term::ts, -0.22, 0}, {Term::ind, 0.5, 0}, {Term::ts_x_ind, -0.18, 0},
             {Term::fmodr, 2.0, 0.25}}) {
        TermResult tr;
        tr.term = t;
        tr.beta = b;
        tr.mean = mean;
        r.terms.push_back(tr);
    }
    auto lines = marginal_effects(r, {0.0, 1.0});
    ASSERT_EQ(lines.size(), 2u);
    EXPECT_DOUBLE_EQ(lines[0].slope, -0.22);
    EXPECT_DOUBLE_EQ(lines[1].slope, -0.40);
    EXPECT_DOUBLE_EQ(lines[0].intercept, 1.5);
    EXPECT_GT(lines[1].intercept, lines[0].intercept);

    r.terms[3].beta = 0.0;
    for (const auto& l : marginal_effects(r, {-1.0, 0.3, 2.0})) EXPECT_DOUBLE_EQ(l.slope, -0.22);

    auto a = ols_fit(ModelSpec::of('a', "comms"), planted(2, 30, 1, 1, 0.1));
    EXPECT_ERROR_KIND(marginal_effects(a, {0.0}), ErrorKind::wrong_model_family);
}

TEST(Report, JsonRoundTripAndTable) {
    auto f = four_regressors(11, 60);
    f.add("comms", f.col("tokens"));
    auto rs = fit_battery(f, {"comms", "tokens"}, "ae");
    for (const auto& r : rs) {
        auto back = result_from_json(nlohmann::json::parse(to_json(r).dump()));
        EXPECT_EQ(back.spec.family, r.spec.family);
        EXPECT_EQ(back.spec.terms, r.spec.terms);
        EXPECT_EQ(back.df, r.df);
        for (std::size_t i = 0; i < r.terms.size(); ++i) {
            EXPECT_EQ(back.terms[i].beta, r.terms[i].beta);
            EXPECT_EQ(back.terms[i].p_adj, r.terms[i].p_adj);
            EXPECT_EQ(back.terms[i].stars, r.terms[i].stars);
        }
        EXPECT_EQ(to_json(back).dump(), to_json(r).dump());
    }
    EXPECT_ERROR_KIND(result_from_json(nlohmann::json::parse("{\"family\":\"a\"}")), ErrorKind::malformed_input);

    auto table = render_table(rs);
    EXPECT_EQ(table.rfind("(a)\n", 0), 0u);
    EXPECT_NE(table.find("(e)\n"), std::string::npos);
    EXPECT_NE(table.find("TSxInD"), std::string::npos);
    EXPECT_NE(table.find("Adj. R2"), std::string::npos);
    EXPECT_NE(table.find("(" + format_fixed(rs[0].terms[1].se, 2) + ")"), std::string::npos);
    EXPECT_EQ(format_fixed(-0.001, 2), "0.00");
}
