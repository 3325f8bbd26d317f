#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "dqe/predictor.hpp"
#include "dqe/triage.hpp"
#include "json.hpp"

namespace dqe {

struct EvalReport {
    std::size_t n = 0;
    double accuracy = 0.0;
    std::size_t unexpected_count = 0;
    double unexpected_pct = 0.0;
    // gold label -> predicted label (vocab or the unexpected marker) -> count
    std::map<std::string, std::map<std::string, std::size_t>> confusion;

    nlohmann::ordered_json to_json() const;
};

// Unexpected outputs count as incorrect.
EvalReport accuracy(const std::vector<Prediction>& preds);

// 0/1 correctness indicators ordered by sample id, so two systems over the
// same test set align pairwise.
std::vector<int> correctness_vector(const std::vector<Prediction>& preds);

struct SignificanceResult {
    double t_statistic = 0.0;
    double p_value = 1.0;
    std::size_t df = 0;
    double mean_difference = 0.0;

    nlohmann::ordered_json to_json() const;
};

// Paired t-test over per-sample indicator differences. Sample sd uses the
// n-1 denominator; the two-sided p comes from the Student CDF via the
// regularized incomplete beta. Zero-variance differences give t = 0, p = 1
// when the mean is zero and t = +/-inf, p = 0 otherwise.
SignificanceResult paired_t_test(const std::vector<int>& a, const std::vector<int>& b);

// Regularized incomplete beta I_x(a, b) by continued fraction, accurate to
// better than 1e-10 over the range used here.
double regularized_incomplete_beta(double a, double b, double x);

// Two-sided tail probability of Student's t with df degrees of freedom.
double student_t_two_sided_p(double t, double df);

struct CategoryShares {
    std::size_t uncovered = 0;
    std::size_t difficult = 0;
    std::size_t noisy = 0;
    double uncovered_share = 0.0;  // within mispredicted records
    double difficult_share = 0.0;
    double noisy_share = 0.0;
    double combined_of_total = 0.0;  // all records over the corpus size

    nlohmann::ordered_json to_json() const;
};

CategoryShares category_proportions(const std::vector<TriageRecord>& records,
                                    std::size_t corpus_size);

// Aligned plain-text rendering of a report for terminal output.
std::string render_eval_table(const EvalReport& report);
std::string render_significance_table(const SignificanceResult& r, std::size_t n);
std::string render_category_table(const CategoryShares& shares);

}  // namespace dqe
