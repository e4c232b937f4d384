#include <gtest/gtest.h>

#include "revieweval/analytics.hpp"
#include "revieweval/errors.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

namespace revieweval::analytics {
namespace {

Errc code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "expected revieweval::Error";
    return Errc::InvalidArgument;
}

MetricVector vec(std::array<double, 6> v, std::string model = "m", std::string paper = "p") {
    MetricVector out{std::move(model), std::move(paper), {}};
    for (std::size_t i = 0; i < 6; ++i) out.values[i] = v[i];
    return out;
}

// Textbook covariance / standard deviations with n-1 denominators.
double pearson_oracle(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = double(x.size());
    long double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    long double cov = 0, vx = 0, vy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        cov += (x[i] - mx) * (y[i] - my);
        vx += (x[i] - mx) * (x[i] - mx);
        vy += (y[i] - my) * (y[i] - my);
    }
    cov /= (n - 1);
    return double(cov / (std::sqrt(vx / (n - 1)) * std::sqrt(vy / (n - 1))));
}

double p_oracle(double r, std::size_t n) {
    const double df = double(n - 2);
    const double t = r * std::sqrt(df / (1 - r * r));
    boost::math::students_t dist(df);
    return 2 * boost::math::cdf(boost::math::complement(dist, std::fabs(t)));
}

TEST(UnifiedScore, Examples) {
    EXPECT_DOUBLE_EQ(unified_score(vec({0.6, 0.6, 0.6, 0.6, 0.6, 0.6})), 0.6);
    EXPECT_NEAR(unified_score(vec({0.9, 0.3, 0.6, 0.6, 0.6, 0.6})), 0.6, 1e-15);
    EXPECT_EQ(unified_score(vec({0, 0, 0, 0, 0, 0})), 0.0);
    auto partial = vec({1, 1, 1, 1, 1, 1});
    partial.values[3].reset();
    EXPECT_EQ(code_of([&] { unified_score(partial); }), Errc::IncompleteVector);
}

TEST(LeaveOneOut, Examples) {
    for (const auto& l : leave_one_out(vec({0.6, 0.6, 0.6, 0.6, 0.6, 0.6}))) EXPECT_NEAR(l.abs_change, 0.0, 1e-15);
    auto loo = leave_one_out(vec({0.9, 0.3, 0.6, 0.6, 0.6, 0.6}));
    EXPECT_NEAR(loo[1].adjusted, 0.66, 1e-12);
    EXPECT_NEAR(loo[1].abs_change, 0.06, 1e-12);
    EXPECT_FALSE(leave_one_out(vec({0, 0, 0, 0, 0, 0}))[0].rel_change);
}

TEST(LeaveOneOut, SignLaw) {
    std::mt19937 rng(4);
    std::uniform_real_distribution<double> u(0, 1);
    for (int trial = 0; trial < 1000; ++trial) {
        std::array<double, 6> v;
        for (auto& x : v) x = u(rng);
        auto mv = vec(v);
        auto unified = unified_score(mv);
        auto loo = leave_one_out(mv);
        for (std::size_t i = 0; i < 6; ++i) {
            if (v[i] < unified) EXPECT_GT(loo[i].abs_change, 0.0);
            if (v[i] > unified) EXPECT_LT(loo[i].abs_change, 0.0);
        }
    }
}

TEST(Contributions, Examples) {
    for (double c : contributions(vec({0.6, 0.6, 0.6, 0.6, 0.6, 0.6}))) EXPECT_NEAR(c, 100.0 / 6.0, 1e-9);
    EXPECT_NEAR(contributions(vec({0.9, 0.3, 0.6, 0.6, 0.6, 0.6}))[1], 8.333333333, 1e-6);
    EXPECT_EQ(code_of([] { contributions(vec({0, 0, 0, 0, 0, 0})); }), Errc::ZeroUnified);
}

TEST(Contributions, SumToHundred) {
    std::mt19937 rng(9);
    std::uniform_real_distribution<double> u(0, 1);
    for (int trial = 0; trial < 1000; ++trial) {
        std::array<double, 6> v;
        for (auto& x : v) x = u(rng);
        double sum = 0;
        for (double c : contributions(vec(v))) sum += c;
        EXPECT_NEAR(sum, 100.0, 1e-9);
    }
}

TEST(Pearson, Examples) {
    std::vector<double> a{1, 2, 3}, b{3, 2, 1};
    EXPECT_EQ(pearson(a, a).r, 1.0);
    EXPECT_EQ(pearson(a, b).r, -1.0);
    std::vector<double> x{1, 2, 3, 4}, y{1, 2, 2, 5};
    EXPECT_NEAR(pearson(x, y).r, pearson_oracle(x, y), 1e-12);
    std::vector<double> c{2, 2, 2};
    EXPECT_EQ(code_of([&] { pearson(a, c); }), Errc::ConstantInput);
    std::vector<double> two{1, 2};
    EXPECT_EQ(code_of([&] { pearson(two, two); }), Errc::InsufficientRows);
}

TEST(Pearson, MatchesOraclesOnRandomSamples) {
    std::mt19937 rng(17);
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 1000; ++trial) {
        std::size_t n = 3 + rng() % 40;
        std::vector<double> x(n), y(n);
        double rho = std::uniform_real_distribution<double>(-1, 1)(rng);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = g(rng);
            y[i] = rho * x[i] + std::sqrt(1 - rho * rho) * g(rng);
        }
        auto res = pearson(x, y);
        EXPECT_NEAR(res.r, pearson_oracle(x, y), 1e-9);
        EXPECT_NEAR(res.p, p_oracle(res.r, n), 1e-9);
        EXPECT_LE(std::fabs(res.r), 1.0);
    }
}

TEST(Pearson, AffineInvariance) {
    std::mt19937 rng(2);
    std::uniform_real_distribution<double> u(-5, 5);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> x(10), y(10), ax(10), nx(10);
        for (std::size_t i = 0; i < 10; ++i) {
            x[i] = u(rng);
            y[i] = u(rng);
            ax[i] = 3.0 * x[i] + 7.0;
            nx[i] = -2.0 * x[i] + 1.0;
        }
        auto r = pearson(x, y).r;
        EXPECT_NEAR(pearson(ax, y).r, r, 1e-12);
        EXPECT_NEAR(pearson(nx, y).r, -r, 1e-12);
    }
}

TEST(Pearson, PlantedCorrelationIsSignificant) {
    std::mt19937 rng(33);
    std::normal_distribution<double> g;
    std::vector<double> x(100), y(100);
    for (auto& v : x) v = g(rng);
    // Build y with sample correlation exactly 0.9 by orthogonalizing noise against x.
    std::vector<double> e(100);
    for (auto& v : e) v = g(rng);
    auto center = [](std::vector<double>& v) {
        double m = 0;
        for (double a : v) m += a;
        m /= double(v.size());
        for (double& a : v) a -= m;
    };
    center(x);
    center(e);
    double xe = 0, xx = 0;
    for (std::size_t i = 0; i < 100; ++i) {
        xe += x[i] * e[i];
        xx += x[i] * x[i];
    }
    for (std::size_t i = 0; i < 100; ++i) e[i] -= xe / xx * x[i];
    double ee = 0;
    for (double a : e) ee += a * a;
    for (std::size_t i = 0; i < 100; ++i) y[i] = 0.9 * x[i] / std::sqrt(xx) + std::sqrt(1 - 0.81) * e[i] / std::sqrt(ee);
    auto res = pearson(x, y);
    EXPECT_NEAR(res.r, 0.9, 1e-9);
    EXPECT_LT(res.p, 0.001);
}

TEST(IncompleteBeta, KnownValues) {
    EXPECT_NEAR(incomplete_beta(1, 1, 0.3), 0.3, 1e-14);
    EXPECT_NEAR(incomplete_beta(2, 3, 0.4), 0.5248, 1e-12);
    EXPECT_NEAR(student_t_two_sided(0.0, 5), 1.0, 1e-12);
    boost::math::students_t d(7);
    EXPECT_NEAR(student_t_two_sided(2.1, 7), 2 * boost::math::cdf(boost::math::complement(d, 2.1)), 1e-12);
}

TEST(CorrelationMatrix, PlantedAndConstantColumns) {
    std::mt19937 rng(1);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<MetricVector> rows;
    for (int i = 0; i < 100; ++i) {
        double d = u(rng);
        rows.push_back(vec({d, u(rng), u(rng), 0.5, u(rng), d}));
    }
    auto m = correlation_matrix(rows);
    EXPECT_EQ(*m.cells[0][5].r, 1.0);
    EXPECT_EQ(*m.cells[5][0].r, 1.0);
    EXPECT_FALSE(m.cells[3][1].r.has_value());
    EXPECT_EQ(m.cells[3][1].note, "constant input");
    for (std::size_t i = 0; i < 6; ++i) {
        if (i != 3) EXPECT_EQ(*m.cells[i][i].r, 1.0);
        for (std::size_t j = 0; j < 6; ++j) EXPECT_EQ(m.cells[i][j].r, m.cells[j][i].r);
    }
    EXPECT_NE(correlation_markdown(m).find("<.001"), std::string::npos);
}

TEST(CorrelationMatrix, TooFewRows) {
    std::vector<MetricVector> rows{vec({1, 2, 3, 4, 5, 6}), vec({2, 3, 1, 5, 6, 4})};
    EXPECT_EQ(code_of([&] { correlation_matrix(rows); }), Errc::InsufficientRows);
    auto t = averaging_table(rows);
    EXPECT_EQ(t.rows_used, 2u);
}

TEST(AveragingTable, DropsIncompleteAndMeansPerRow) {
    std::vector<MetricVector> rows{vec({0.9, 0.3, 0.6, 0.6, 0.6, 0.6}), vec({0.6, 0.6, 0.6, 0.6, 0.6, 0.6})};
    auto bad = vec({1, 1, 1, 1, 1, 1});
    bad.values[0].reset();
    rows.push_back(bad);
    auto t = averaging_table(rows);
    EXPECT_EQ(t.rows_used, 2u);
    EXPECT_EQ(t.rows_dropped, 1u);
    EXPECT_NEAR(t.rows[1].mean_abs_change, 0.03, 1e-12);
    double total = 0;
    for (const auto& r : t.rows) total += *r.mean_contribution_pct;
    EXPECT_NEAR(total, 100.0, 1e-9);
    EXPECT_NE(averaging_csv(t).find("actionable,"), std::string::npos);
}

TEST(AveragingTable, GroupsByModel) {
    std::vector<MetricVector> rows{vec({1, 1, 1, 1, 1, 1}, "a"), vec({0.5, 1, 1, 1, 1, 1}, "b"),
                                   vec({1, 0.5, 1, 1, 1, 1}, "b")};
    auto g = averaging_by_model(rows);
    ASSERT_EQ(g.size(), 2u);
    EXPECT_EQ(g.at("b").rows_used, 2u);
}

TEST(MetricInput, CsvAndJsonl) {
    auto rows = parse_metric_csv(
        "model_id,paper_id,depth,actionable,adherence,coverage,semantic,factual\n"
        "gpt,p1,0.9,0.5,0.8,N/A,0.7,1\n"
        "\"q,wen\",p2,1,1,1,1,1,1\n");
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_FALSE(rows[0].complete());
    EXPECT_EQ(rows[1].model_id, "q,wen");
    EXPECT_EQ(code_of([] { parse_metric_csv("depth,actionable\n1,2\n"); }), Errc::Parse);

    auto j = parse_metric_jsonl(
        "{\"model_id\":\"a\",\"depth\":0.1,\"actionable\":0.2,\"adherence\":0.3,\"coverage\":0.4,\"semantic\":0.5,"
        "\"factual\":0.6}\n"
        "{\"run\":{\"model_id\":\"b\"},\"scores\":{\"depth\":1,\"actionable\":null}}\n");
    ASSERT_EQ(j.size(), 2u);
    EXPECT_TRUE(j[0].complete());
    EXPECT_EQ(j[1].model_id, "b");
    EXPECT_FALSE(j[1].values[1]);
}

TEST(MetricInput, DirectoryOfReports) {
    auto dir = std::filesystem::temp_directory_path() / "revieweval_analytics_dir";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir / "b");
    std::ofstream(dir / "a.json") << R"({"scores":{"depth":1,"actionable":1,"adherence":1,"coverage":1,"semantic":1,"factual":1}})";
    std::ofstream(dir / "b" / "report.json") << R"({"scores":{"depth":0}})";
    auto rows = load_metric_rows(dir);
    EXPECT_EQ(rows.size(), 2u);
    EXPECT_TRUE(rows[0].complete());
    std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace revieweval::analytics
