#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numeric>

#include "dqe/evaluate.hpp"
#include "dqe/rng.hpp"

#include "tdist_expected.inc"

using namespace dqe;

namespace {

Prediction pred(const std::string& id, const std::string& parsed, const std::string& gold) {
    Prediction p;
    p.sample_id = id;
    p.raw_output = parsed;
    p.parsed_label = parsed;
    p.gold_label = gold;
    p.correct = parsed == gold;
    return p;
}

// Independent check of the Student tail: adaptive Simpson quadrature of the
// density, entirely separate from the incomplete-beta route.
double t_pdf(double x, double df) {
    double ln = std::lgamma((df + 1.0) / 2.0) - std::lgamma(df / 2.0) -
                0.5 * std::log(df * 3.14159265358979323846) -
                (df + 1.0) / 2.0 * std::log1p(x * x / df);
    return std::exp(ln);
}

double simpson(double a, double b, double fa, double fm, double fb, double df, int depth) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m);
    double rm = 0.5 * (m + b);
    double flm = t_pdf(lm, df);
    double frm = t_pdf(rm, df);
    double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::fabs(left + right - whole) < 1e-12) return left + right;
    return simpson(a, m, fa, flm, fm, df, depth - 1) +
           simpson(m, b, fm, frm, fb, df, depth - 1);
}

double quadrature_two_sided_p(double t, double df) {
    t = std::fabs(t);
    double central = simpson(0.0, t, t_pdf(0.0, df), t_pdf(0.5 * t, df), t_pdf(t, df), df, 40);
    return 1.0 - 2.0 * central;
}

}  // namespace

TEST_CASE("accuracy basics") {
    std::vector<Prediction> all_correct{pred("a", "x", "x"), pred("b", "y", "y")};
    auto r = accuracy(all_correct);
    CHECK(r.accuracy == doctest::Approx(1.0));
    CHECK(r.unexpected_count == 0);

    std::vector<Prediction> mixed;
    for (int i = 0; i < 7; ++i) mixed.push_back(pred("c" + std::to_string(i), "x", "x"));
    for (int i = 0; i < 3; ++i) mixed.push_back(pred("w" + std::to_string(i), "y", "x"));
    CHECK(accuracy(mixed).accuracy == doctest::Approx(0.70));

    CHECK_THROWS_AS(accuracy({}), std::invalid_argument);
}

TEST_CASE("unexpected outputs count as incorrect and are tallied") {
    std::vector<Prediction> preds;
    for (int i = 0; i < 156; ++i) {
        preds.push_back(pred("u" + std::to_string(i), std::string(kUnexpectedLabel), "pos"));
    }
    for (int i = 0; i < 1066 - 156; ++i) {
        preds.push_back(pred("c" + std::to_string(i), "pos", "pos"));
    }
    auto r = accuracy(preds);
    CHECK(r.n == 1066);
    CHECK(r.unexpected_count == 156);
    CHECK(r.unexpected_pct == doctest::Approx(14.63).epsilon(1e-3));
    CHECK(r.accuracy == doctest::Approx((1066.0 - 156.0) / 1066.0));
    // exact arithmetic: accuracy + incorrect/n = 1
    CHECK(r.accuracy + 156.0 / 1066.0 == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("confusion matrix covers vocab and the unexpected marker") {
    std::vector<Prediction> preds{pred("a", "x", "x"), pred("b", "y", "x"),
                                  pred("c", std::string(kUnexpectedLabel), "y")};
    auto r = accuracy(preds);
    CHECK(r.confusion["x"]["x"] == 1);
    CHECK(r.confusion["x"]["y"] == 1);
    CHECK(r.confusion["y"][std::string(kUnexpectedLabel)] == 1);
}

TEST_CASE("correctness_vector orders by sample id") {
    std::vector<Prediction> preds{pred("b", "x", "x"), pred("a", "y", "x"),
                                  pred("c", "x", "x")};
    CHECK(correctness_vector(preds) == std::vector<int>{0, 1, 1});

    std::vector<Prediction> wrong{pred("a", "y", "x"), pred("b", "y", "x")};
    CHECK(correctness_vector(wrong) == std::vector<int>{0, 0});
}

TEST_CASE("paired t-test on identical vectors") {
    std::vector<int> a{1, 0, 1, 1, 0};
    auto r = paired_t_test(a, a);
    CHECK(r.t_statistic == 0.0);
    CHECK(r.p_value == 1.0);
    CHECK(r.df == 4);
}

TEST_CASE("paired t-test hand-computed case") {
    std::vector<int> a{1, 1, 1, 0};
    std::vector<int> b{0, 1, 1, 0};
    auto r = paired_t_test(a, b);
    CHECK(r.t_statistic == 1.0);  // exact: mean .25, sd .5, n 4
    CHECK(r.df == 3);
    CHECK(r.mean_difference == doctest::Approx(0.25));
    CHECK(r.p_value == doctest::Approx(0.391002218955771).epsilon(1e-8));
}

TEST_CASE("zero-variance nonzero-mean differences give infinite t, p = 0") {
    std::vector<int> a{1, 1, 1};
    std::vector<int> b{0, 0, 0};
    auto r = paired_t_test(a, b);
    CHECK(std::isinf(r.t_statistic));
    CHECK(r.t_statistic > 0);
    CHECK(r.p_value == 0.0);
    auto r2 = paired_t_test(b, a);
    CHECK(r2.t_statistic < 0);
}

TEST_CASE("paired t-test contract errors") {
    CHECK_THROWS_AS(paired_t_test({1}, {1, 0}), std::invalid_argument);
    CHECK_THROWS_AS(paired_t_test({1}, {0}), std::invalid_argument);
}

TEST_CASE("antisymmetry: swapping systems negates t and keeps p") {
    DeterministicRng rng(11);
    for (int it = 0; it < 20; ++it) {
        std::size_t n = 10 + rng.below(100);
        std::vector<int> a(n), b(n);
        for (auto& x : a) x = rng.below(2) ? 1 : 0;
        for (auto& x : b) x = rng.below(2) ? 1 : 0;
        auto r1 = paired_t_test(a, b);
        auto r2 = paired_t_test(b, a);
        if (std::isinf(r1.t_statistic)) {
            CHECK(std::isinf(r2.t_statistic));
        } else {
            CHECK(r1.t_statistic == doctest::Approx(-r2.t_statistic).epsilon(1e-12));
        }
        CHECK(r1.p_value == doctest::Approx(r2.p_value).epsilon(1e-12));
    }
}

TEST_CASE("jointly permuting pairs leaves t and p unchanged") {
    DeterministicRng rng(13);
    std::vector<int> a, b;
    for (int i = 0; i < 60; ++i) {
        a.push_back(rng.below(2) ? 1 : 0);
        b.push_back(rng.below(2) ? 1 : 0);
    }
    auto base = paired_t_test(a, b);
    std::vector<std::size_t> perm(a.size());
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = perm.size(); i > 1; --i) {
        std::swap(perm[i - 1], perm[rng.below(i)]);
    }
    std::vector<int> pa(a.size()), pb(b.size());
    for (std::size_t i = 0; i < perm.size(); ++i) {
        pa[i] = a[perm[i]];
        pb[i] = b[perm[i]];
    }
    auto permuted = paired_t_test(pa, pb);
    CHECK(permuted.t_statistic == doctest::Approx(base.t_statistic).epsilon(1e-12));
    CHECK(permuted.p_value == doctest::Approx(base.p_value).epsilon(1e-12));
}

TEST_CASE("student CDF matches the frozen reference grid within 1e-6") {
    for (const auto& c : kTDistGrid) {
        CAPTURE(c.t);
        CAPTURE(c.df);
        CHECK(std::fabs(student_t_two_sided_p(c.t, c.df) - c.p_two_sided) < 1e-6);
    }
}

TEST_CASE("student CDF agrees with direct quadrature of the density") {
    for (double df : {3.0, 30.0, 1000.0}) {
        for (double t = 0.25; t <= 5.0; t += 0.25) {
            CHECK(std::fabs(student_t_two_sided_p(t, df) - quadrature_two_sided_p(t, df)) <
                  1e-8);
        }
    }
}

TEST_CASE("incomplete beta edges") {
    CHECK(regularized_incomplete_beta(2.0, 3.0, 0.0) == 0.0);
    CHECK(regularized_incomplete_beta(2.0, 3.0, 1.0) == 1.0);
    CHECK_THROWS_AS(regularized_incomplete_beta(0.0, 1.0, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(regularized_incomplete_beta(1.0, 1.0, 1.5), std::invalid_argument);
    // I_x(1,1) = x
    for (double x = 0.1; x < 1.0; x += 0.2) {
        CHECK(regularized_incomplete_beta(1.0, 1.0, x) == doctest::Approx(x).epsilon(1e-12));
    }
}

TEST_CASE("category proportions") {
    std::vector<TriageRecord> records;
    for (int i = 0; i < 10; ++i) records.push_back({"a", "b", 1.0, QbLocation::unsampled,
                                                    Category::uncovered});
    for (int i = 0; i < 5; ++i) records.push_back({"a", "b", 1.0, QbLocation::sampled,
                                                   Category::difficult});
    for (int i = 0; i < 5; ++i) records.push_back({"a", "b", 1.0, QbLocation::sampled,
                                                   Category::noisy});
    auto s = category_proportions(records, 1000);
    CHECK(s.uncovered_share == doctest::Approx(0.5));
    CHECK(s.difficult_share == doctest::Approx(0.25));
    CHECK(s.noisy_share == doctest::Approx(0.25));
    CHECK(s.uncovered_share + s.difficult_share + s.noisy_share == doctest::Approx(1.0));
    CHECK(s.combined_of_total == doctest::Approx(0.02));

    auto zero = category_proportions({}, 1000);
    CHECK(zero.uncovered_share == 0.0);
    CHECK(zero.combined_of_total == 0.0);
}

TEST_CASE("report rendering carries headline figures") {
    std::vector<Prediction> preds{pred("a", "x", "x"), pred("b", "y", "x")};
    auto table = render_eval_table(accuracy(preds));
    CHECK(table.find("50.00%") != std::string::npos);

    SignificanceResult sig;
    sig.t_statistic = 3.48;
    sig.p_value = 0.0005;
    sig.df = 1065;
    auto stable = render_significance_table(sig, 1066);
    CHECK(stable.find("3.4800") != std::string::npos);
    CHECK(stable.find("0.000500") != std::string::npos);
}
