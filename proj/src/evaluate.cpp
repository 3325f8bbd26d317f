#include "dqe/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace dqe {
namespace {

std::string fmt(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    return buf;
}

// Continued fraction for the incomplete beta (Lentz's method).
double betacf(double a, double b, double x) {
    constexpr int kMaxIter = 400;
    constexpr double kEps = 3.0e-14;
    constexpr double kFpMin = 1.0e-300;

    double qab = a + b;
    double qap = a + 1.0;
    double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) return h;
    }
    throw std::runtime_error("incomplete beta continued fraction did not converge");
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
    if (a <= 0.0 || b <= 0.0) throw std::invalid_argument("beta parameters must be positive");
    if (x < 0.0 || x > 1.0) throw std::invalid_argument("x outside [0, 1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                      a * std::log(x) + b * std::log1p(-x);
    double front = std::exp(ln_front);
    // The continued fraction converges fast for x < (a+1)/(a+b+2); use the
    // symmetry I_x(a,b) = 1 - I_{1-x}(b,a) otherwise.
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * betacf(a, b, x) / a;
    }
    return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

double student_t_two_sided_p(double t, double df) {
    if (df <= 0.0) throw std::invalid_argument("df must be positive");
    if (std::isinf(t)) return 0.0;
    if (t == 0.0) return 1.0;
    double x = df / (df + t * t);
    return regularized_incomplete_beta(df / 2.0, 0.5, x);
}

EvalReport accuracy(const std::vector<Prediction>& preds) {
    if (preds.empty()) throw std::invalid_argument("accuracy: empty prediction list");
    EvalReport r;
    r.n = preds.size();
    std::size_t correct = 0;
    for (const auto& p : preds) {
        if (p.correct) ++correct;
        if (p.parsed_label == kUnexpectedLabel) ++r.unexpected_count;
        r.confusion[p.gold_label][p.parsed_label]++;
    }
    r.accuracy = static_cast<double>(correct) / static_cast<double>(r.n);
    r.unexpected_pct = 100.0 * static_cast<double>(r.unexpected_count) /
                       static_cast<double>(r.n);
    return r;
}

std::vector<int> correctness_vector(const std::vector<Prediction>& preds) {
    std::vector<const Prediction*> sorted;
    sorted.reserve(preds.size());
    for (const auto& p : preds) sorted.push_back(&p);
    std::sort(sorted.begin(), sorted.end(), [](const Prediction* a, const Prediction* b) {
        return a->sample_id < b->sample_id;
    });
    std::vector<int> out;
    out.reserve(sorted.size());
    for (const auto* p : sorted) out.push_back(p->correct ? 1 : 0);
    return out;
}

SignificanceResult paired_t_test(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("paired_t_test: length mismatch");
    const std::size_t n = a.size();
    if (n < 2) throw std::invalid_argument("paired_t_test: need at least 2 pairs");

    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += a[i] - b[i];
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double d = (a[i] - b[i]) - mean;
        ss += d * d;
    }
    double sd = std::sqrt(ss / static_cast<double>(n - 1));

    SignificanceResult r;
    r.df = n - 1;
    r.mean_difference = mean;
    if (sd == 0.0) {
        if (mean == 0.0) {
            r.t_statistic = 0.0;
            r.p_value = 1.0;
        } else {
            r.t_statistic = mean > 0 ? std::numeric_limits<double>::infinity()
                                     : -std::numeric_limits<double>::infinity();
            r.p_value = 0.0;
        }
        return r;
    }
    r.t_statistic = mean / (sd / std::sqrt(static_cast<double>(n)));
    r.p_value = student_t_two_sided_p(r.t_statistic, static_cast<double>(r.df));
    return r;
}

CategoryShares category_proportions(const std::vector<TriageRecord>& records,
                                    std::size_t corpus_size) {
    CategoryShares s;
    for (const auto& rec : records) {
        switch (rec.category) {
            case Category::uncovered: ++s.uncovered; break;
            case Category::difficult: ++s.difficult; break;
            case Category::noisy: ++s.noisy; break;
        }
    }
    std::size_t total = records.size();
    if (total > 0) {
        s.uncovered_share = static_cast<double>(s.uncovered) / static_cast<double>(total);
        s.difficult_share = static_cast<double>(s.difficult) / static_cast<double>(total);
        s.noisy_share = static_cast<double>(s.noisy) / static_cast<double>(total);
    }
    if (corpus_size > 0) {
        s.combined_of_total = static_cast<double>(total) / static_cast<double>(corpus_size);
    }
    return s;
}

nlohmann::ordered_json EvalReport::to_json() const {
    nlohmann::ordered_json j;
    j["n"] = n;
    j["accuracy"] = accuracy;
    j["unexpected_count"] = unexpected_count;
    j["unexpected_pct"] = unexpected_pct;
    nlohmann::ordered_json conf = nlohmann::ordered_json::object();
    for (const auto& [gold, row] : confusion) {
        nlohmann::ordered_json jrow = nlohmann::ordered_json::object();
        for (const auto& [pred, count] : row) jrow[pred] = count;
        conf[gold] = jrow;
    }
    j["confusion"] = conf;
    return j;
}

nlohmann::ordered_json SignificanceResult::to_json() const {
    nlohmann::ordered_json j;
    if (std::isinf(t_statistic)) {
        j["t_statistic"] = t_statistic > 0 ? "Infinity" : "-Infinity";
    } else {
        j["t_statistic"] = t_statistic;
    }
    j["p_value"] = p_value;
    j["df"] = df;
    j["mean_difference"] = mean_difference;
    return j;
}

nlohmann::ordered_json CategoryShares::to_json() const {
    nlohmann::ordered_json j;
    j["uncovered"] = uncovered;
    j["difficult"] = difficult;
    j["noisy"] = noisy;
    j["uncovered_share"] = uncovered_share;
    j["difficult_share"] = difficult_share;
    j["noisy_share"] = noisy_share;
    j["combined_of_total"] = combined_of_total;
    return j;
}

std::string render_eval_table(const EvalReport& report) {
    std::ostringstream out;
    out << "metric              value\n";
    out << "------------------  ----------\n";
    out << "test size           " << report.n << "\n";
    out << "accuracy            " << fmt(100.0 * report.accuracy, 2) << "%\n";
    out << "unexpected outputs  " << report.unexpected_count << " ("
        << fmt(report.unexpected_pct, 2) << "%)\n";
    if (!report.confusion.empty()) {
        out << "\nconfusion (gold -> predicted):\n";
        for (const auto& [gold, row] : report.confusion) {
            for (const auto& [pred, count] : row) {
                out << "  " << gold << " -> " << pred << ": " << count << "\n";
            }
        }
    }
    return out.str();
}

std::string render_significance_table(const SignificanceResult& r, std::size_t n) {
    std::ostringstream out;
    out << "paired t-test over 0/1 correctness indicators\n";
    out << "n                 " << n << "\n";
    out << "df                " << r.df << "\n";
    out << "mean difference   " << fmt(r.mean_difference, 6) << "\n";
    if (std::isinf(r.t_statistic)) {
        out << "t statistic       " << (r.t_statistic > 0 ? "inf" : "-inf") << "\n";
    } else {
        out << "t statistic       " << fmt(r.t_statistic, 4) << "\n";
    }
    out << "p value (2-sided) " << fmt(r.p_value, 6) << "\n";
    return out.str();
}

std::string render_category_table(const CategoryShares& s) {
    std::ostringstream out;
    out << "category    count   share\n";
    out << "---------   -----   ------\n";
    out << "uncovered   " << s.uncovered << "   " << fmt(100.0 * s.uncovered_share, 2) << "%\n";
    out << "difficult   " << s.difficult << "   " << fmt(100.0 * s.difficult_share, 2) << "%\n";
    out << "noisy       " << s.noisy << "   " << fmt(100.0 * s.noisy_share, 2) << "%\n";
    out << "combined share of training set: " << fmt(100.0 * s.combined_of_total, 2) << "%\n";
    return out.str();
}

}  // namespace dqe
