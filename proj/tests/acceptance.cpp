// Acceptance suite: each criterion prints one pass/fail line. Run with a
// criterion number (1..10) or with no argument for the full suite.

#include <omp.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dqe/coreset.hpp"
#include "dqe/evaluate.hpp"
#include "dqe/fixture.hpp"
#include "dqe/pipeline.hpp"
#include "dqe/predictor.hpp"
#include "dqe/reference.hpp"
#include "dqe/rng.hpp"
#include "dqe/triage.hpp"

using namespace dqe;

namespace {

namespace fs = std::filesystem;

struct Check {
    bool ok = true;
    std::string detail;

    void expect(bool cond, const std::string& what) {
        if (!cond && ok) {
            ok = false;
            detail = what;
        }
    }
};

EmbeddingMatrix random_unit_matrix(std::size_t n, std::size_t dim, DeterministicRng& rng) {
    EmbeddingMatrix m;
    m.dim = dim;
    for (std::size_t i = 0; i < n; ++i) {
        m.ids.push_back("r" + std::to_string(i));
        double norm2 = 0.0;
        std::vector<double> v(dim);
        for (auto& x : v) {
            x = rng.gaussian();
            norm2 += x * x;
        }
        double inv = 1.0 / std::sqrt(norm2);
        for (double x : v) m.values.push_back(static_cast<float>(x * inv));
    }
    m.rebuild_index();
    return m;
}

std::size_t seed_initial_index(std::uint64_t seed, std::size_t n) {
    std::mt19937_64 engine(seed);
    return static_cast<std::size_t>(engine() % n);
}

fs::path fresh_dir(const std::string& name) {
    auto dir = fs::temp_directory_path() / "dqe_acceptance" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ------------------------------------------------------------------
// 1. greedy sampler equals the brute-force farthest-first reference on
//    100 random instances (n <= 200, dim <= 16, K <= n/2), exactly.
Check criterion1() {
    Check c;
    double t0 = omp_get_wtime();
    DeterministicRng rng(20240101);
    for (int instance = 0; instance < 100; ++instance) {
        std::size_t n = 10 + rng.below(191);   // <= 200
        std::size_t dim = 2 + rng.below(15);   // <= 16
        std::size_t k = 1 + rng.below(n / 2);  // <= n/2
        auto m = random_unit_matrix(n, dim, rng);
        SamplerConfig cfg;
        cfg.k = k;
        cfg.seed = rng.next_u64();
        auto got = k_center_greedy(m, cfg);
        auto expect = reference::farthest_first(m.values.data(), n, dim, k,
                                                seed_initial_index(cfg.seed, n), cfg.metric);
        c.expect(got.sampled.size() == expect.size(), "selection size differs");
        for (std::size_t i = 0; i < expect.size() && c.ok; ++i) {
            c.expect(got.sampled[i] == m.ids[expect[i]],
                     "instance " + std::to_string(instance) + " diverges at step " +
                         std::to_string(i));
        }
        if (!c.ok) break;
    }
    double elapsed = omp_get_wtime() - t0;
    c.expect(elapsed < 5.0, "runtime " + std::to_string(elapsed) + "s exceeds 5s");
    return c;
}

// ------------------------------------------------------------------
// 2. greedy coverage radius is within 2x of the exhaustive optimum on all
//    instances with n <= 12, k <= 4.
Check criterion2() {
    Check c;
    double t0 = omp_get_wtime();
    DeterministicRng rng(20240202);
    for (int instance = 0; instance < 100; ++instance) {
        std::size_t n = 5 + rng.below(8);  // 5..12
        std::size_t k = 2 + rng.below(3);  // 2..4
        std::size_t dim = 2 + rng.below(5);
        auto m = random_unit_matrix(n, dim, rng);
        SamplerConfig cfg;
        cfg.k = k;
        cfg.seed = rng.next_u64();
        cfg.metric = Metric::euclidean;
        auto p = k_center_greedy(m, cfg);
        double greedy_r = coverage_radius(p, m);
        double opt = reference::optimal_radius(m.values.data(), n, dim, k, Metric::euclidean);
        c.expect(greedy_r <= 2.0 * opt + 1e-9,
                 "instance " + std::to_string(instance) + ": greedy " +
                     std::to_string(greedy_r) + " > 2x optimal " + std::to_string(opt));
        if (!c.ok) break;
    }
    double elapsed = omp_get_wtime() - t0;
    c.expect(elapsed < 30.0, "runtime exceeds 30s");
    return c;
}

// ------------------------------------------------------------------
// 3. nearest_other equals an independent O(n^2) scan on 100 random
//    matrices, ids exact and similarities within 1e-6, duplicates included.
Check criterion3() {
    Check c;
    DeterministicRng rng(20240303);
    for (int instance = 0; instance < 100; ++instance) {
        std::size_t n = 3 + rng.below(120);
        std::size_t dim = 2 + rng.below(15);
        auto m = random_unit_matrix(n, dim, rng);
        // duplicate some vectors to force ties
        if (n >= 6) {
            for (std::size_t d = 0; d < dim; ++d) {
                m.values[2 * dim + d] = m.values[5 * dim + d];
                m.values[1 * dim + d] = m.values[4 * dim + d];
            }
        }
        for (std::size_t q = 0; q < n; ++q) {
            std::vector<std::uint8_t> mask(n, 0);
            mask[q] = 1;
            auto expect = reference::nearest_scan(m.values.data(), n, dim, q, mask);
            auto got = nearest_other(m.ids[q], m, {m.ids[q]});
            c.expect(got.row == expect.index,
                     "instance " + std::to_string(instance) + " query " + std::to_string(q) +
                         ": id mismatch");
            c.expect(std::fabs(got.similarity - expect.value) < 1e-6, "similarity drift");
            if (!c.ok) return c;
        }
    }
    return c;
}

// ------------------------------------------------------------------
// 4. the three-way categorization reproduces the planted uncovered /
//    difficult / noisy cases, and the categories partition the errors.
Check criterion4() {
    Check c;
    c.expect(categorize("pos", "pos", QbLocation::unsampled) == Category::uncovered,
             "same label + unsampled neighbour must be uncovered");
    c.expect(categorize("pos", "pos", QbLocation::sampled) == Category::difficult,
             "same label + sampled neighbour must be difficult");
    c.expect(categorize("pos", "neg", QbLocation::sampled) == Category::noisy,
             "label mismatch must be noisy (sampled)");
    c.expect(categorize("pos", "neg", QbLocation::unsampled) == Category::noisy,
             "label mismatch must be noisy (unsampled)");

    // planted geometric fixture exercising all three end to end
    LabeledCorpus corpus;
    EmbeddingMatrix emb;
    emb.dim = 2;
    auto add = [&](const std::string& id, const std::string& label, double angle) {
        corpus.samples.push_back({id, "t " + id, label, corpus.samples.size()});
        emb.ids.push_back(id);
        emb.values.push_back(static_cast<float>(std::cos(angle)));
        emb.values.push_back(static_cast<float>(std::sin(angle)));
    };
    add("s0", "pos", 0.00);
    add("s1", "neg", 1.40);
    add("u0", "pos", 0.02);   // difficult: nearest is s0 (sampled, same label)
    add("u1", "pos", 0.70);   // uncovered: nearest is u2 (unsampled, same label)
    add("u2", "pos", 0.68);
    add("u3", "neg", 0.69);   // noisy: nearest is u2 (different label)
    corpus.label_vocabulary = {"neg", "pos"};
    emb.rebuild_index();
    Partition part;
    part.sampled = {"s0", "s1"};
    part.unsampled = {"u0", "u1", "u2", "u3"};

    auto records = triage_all({"u0", "u1", "u3"}, corpus, emb, part);
    c.expect(records.size() == 3, "expected one record per mispredicted id");
    if (c.ok) {
        c.expect(records[0].category == Category::difficult, "planted difficult case failed");
        c.expect(records[1].category == Category::uncovered, "planted uncovered case failed");
        c.expect(records[2].category == Category::noisy, "planted noisy case failed");
    }

    // partition of errors on randomized instances
    DeterministicRng rng(20240404);
    for (int it = 0; it < 10; ++it) {
        std::size_t n = 40;
        auto m = random_unit_matrix(n, 4, rng);
        LabeledCorpus rc;
        for (std::size_t i = 0; i < n; ++i) {
            rc.samples.push_back({m.ids[i], "t" + m.ids[i], rng.below(2) ? "a" : "b", i});
        }
        rc.label_vocabulary = {"a", "b"};
        Partition rp;
        for (std::size_t i = 0; i < n; ++i) {
            (i % 2 ? rp.sampled : rp.unsampled).push_back(m.ids[i]);
        }
        std::vector<std::string> mis;
        for (const auto& id : rp.unsampled) {
            if (rng.uniform() < 0.4) mis.push_back(id);
        }
        auto recs = triage_all(mis, rc, m, rp);
        std::size_t uncovered = 0, difficult = 0, noisy = 0;
        for (const auto& r : recs) {
            switch (r.category) {
                case Category::uncovered: ++uncovered; break;
                case Category::difficult: ++difficult; break;
                case Category::noisy: ++noisy; break;
            }
        }
        c.expect(uncovered + difficult + noisy == mis.size(),
                 "|uncovered|+|difficult|+|noisy| != |mispredicted|");
    }
    return c;
}

// ------------------------------------------------------------------
// 5. end-to-end planted-noise recovery on the 1000-point fixture.
Check criterion5() {
    Check c;
    double t0 = omp_get_wtime();
    auto dir = fresh_dir("criterion5");

    FixtureSpec spec;
    spec.n = 1000;
    spec.clusters = 4;
    spec.noise_rate = 0.03;
    spec.seed = 20240505;
    auto f = make_fixture(spec);
    write_fixture(f, dir / "fx");
    c.expect(f.flipped_ids.size() == 30, "expected 30 planted flips");

    PipelineConfig cfg;
    cfg.input_path = dir / "fx" / "corpus.jsonl";
    cfg.embedding.kind = EmbeddingProvider::Kind::file_import;
    cfg.embedding.file = dir / "fx" / "embeddings.dqev";
    cfg.predictor.kind = PredictorBackend::Kind::embedding_baseline;
    cfg.predictor.baseline.kind = BaselineConfig::Kind::knn;
    cfg.predictor.baseline.k = 1;
    cfg.judge.kind = JudgeSettings::Kind::oracle;
    cfg.judge.truth_path = dir / "fx" / "truth.json";
    cfg.seed = 31337;
    cfg.output_dir = dir / "out";
    Pipeline pipeline(cfg, "", false);
    pipeline.run_all();

    auto prov = nlohmann::json::parse(slurp(pipeline.final_provenance_path()));
    std::set<std::string> removed;
    for (const auto& r : prov["removed"]) removed.insert(r["id"].get<std::string>());

    std::set<std::string> flipped(f.flipped_ids.begin(), f.flipped_ids.end());
    std::size_t caught = 0;
    for (const auto& id : flipped) {
        if (removed.count(id)) ++caught;
    }
    double recall = static_cast<double>(caught) / static_cast<double>(flipped.size());
    c.expect(recall >= 0.8, "flip removal recall " + std::to_string(recall) + " below 0.8");

    std::size_t clean_removed = 0;
    for (const auto& id : removed) {
        const Sample* s = f.corpus.find(id);
        if (s && s->label == f.truth.at(id)) ++clean_removed;
    }
    c.expect(clean_removed == 0,
             std::to_string(clean_removed) + " clean samples were removed");

    double elapsed = omp_get_wtime() - t0;
    c.expect(elapsed < 60.0, "runtime exceeds 60s");
    return c;
}

// ------------------------------------------------------------------
// 6. the final-set accounting identity holds on varied fixtures.
Check criterion6() {
    Check c;
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
        auto dir = fresh_dir("criterion6_" + std::to_string(seed));
        FixtureSpec spec;
        spec.n = 300;
        spec.clusters = 3;
        spec.noise_rate = seed == 2 ? 0.0 : 0.05;
        spec.coverage_gaps = seed == 3 ? 1 : 0;
        spec.seed = seed;
        auto f = make_fixture(spec);
        write_fixture(f, dir / "fx");

        PipelineConfig cfg;
        cfg.input_path = dir / "fx" / "corpus.jsonl";
        cfg.embedding.kind = EmbeddingProvider::Kind::file_import;
        cfg.embedding.file = dir / "fx" / "embeddings.dqev";
        cfg.predictor.baseline.k = 1;
        cfg.judge.kind = JudgeSettings::Kind::oracle;
        cfg.judge.truth_path = dir / "fx" / "truth.json";
        cfg.seed = seed * 100;
        cfg.output_dir = dir / "out";
        Pipeline pipeline(cfg, "", false);
        pipeline.run_all();

        // independent recount from the artifacts
        auto prov = nlohmann::json::parse(slurp(pipeline.final_provenance_path()));
        auto part = nlohmann::json::parse(slurp(pipeline.partition_path()));
        std::size_t sampled = part["sampled"].size();
        std::size_t final_n = prov["included"].size();
        std::size_t removed_sampled = 0, uncovered = 0, difficult = 0;
        for (const auto& r : prov["removed"]) {
            if (r["reason"] == "noisy_removed_sampled") ++removed_sampled;
        }
        for (const auto& r : prov["included"]) {
            if (r["provenance"] == "uncovered_added") ++uncovered;
            if (r["provenance"] == "difficult_added") ++difficult;
        }
        c.expect(final_n == sampled - removed_sampled + uncovered + difficult,
                 "identity violated on seed " + std::to_string(seed));
        c.expect(prov["counts"]["sampled"].get<std::size_t>() == sampled,
                 "count mismatch vs partition artifact");
    }
    return c;
}

// ------------------------------------------------------------------
// 7. paired t-test correctness, fixed cases and the CDF grid.
Check criterion7() {
    Check c;
    std::vector<int> same{1, 0, 1, 1, 0, 0, 1};
    auto r0 = paired_t_test(same, same);
    c.expect(r0.t_statistic == 0.0 && r0.p_value == 1.0, "identical vectors need t=0, p=1");

    std::vector<int> a{1, 1, 1, 0};
    std::vector<int> b{0, 1, 1, 0};
    auto r = paired_t_test(a, b);
    c.expect(r.t_statistic == 1.0, "hand case t must be exactly 1.0");
    c.expect(r.df == 3, "hand case df must be 3");
    c.expect(std::fabs(r.p_value - 0.391002218955771) < 1e-3,
             "hand case p outside 1e-3 of the reference");

    struct GridCase {
        double t, df, p;
    };
    // frozen from an independent reference implementation (scipy.stats.t)
    const GridCase grid[] = {
        {0.1, 3, 9.266523488008058e-01},    {0.5, 3, 6.514479648481510e-01},
        {1.0, 3, 3.910022189557705e-01},    {2.0, 3, 1.393259685588431e-01},
        {3.0, 3, 5.766888562243731e-02},    {5.0, 3, 1.539243807330230e-02},
        {0.1, 30, 9.210096117902711e-01},   {0.5, 30, 6.207230048851273e-01},
        {1.0, 30, 3.253086154260298e-01},   {2.0, 30, 5.462504496298310e-02},
        {3.0, 30, 5.389964065651944e-03},   {5.0, 30, 2.329668546700779e-05},
        {0.1, 1000, 9.203643690236042e-01}, {0.5, 1000, 6.171850808338750e-01},
        {1.0, 1000, 3.175524180846726e-01}, {2.0, 1000, 4.577034649325167e-02},
        {3.0, 1000, 2.766709044238188e-03}, {5.0, 1000, 6.767256364648626e-07},
    };
    for (const auto& g : grid) {
        double p = student_t_two_sided_p(g.t, g.df);
        c.expect(std::fabs(p - g.p) < 1e-6,
                 "CDF drift at t=" + std::to_string(g.t) + " df=" + std::to_string(g.df));
    }
    return c;
}

// ------------------------------------------------------------------
// 8. unexpected-output arithmetic on a 156-of-1066 fixture.
Check criterion8() {
    Check c;
    std::vector<std::string> vocab{"negative", "positive"};
    std::vector<Prediction> preds;
    for (int i = 0; i < 1066; ++i) {
        Prediction p;
        p.sample_id = "t" + std::to_string(i);
        p.gold_label = "positive";
        p.raw_output = i < 156 ? "this movie is about a dog" : "Positive.";
        p.parsed_label = parse_output(p.raw_output, vocab);
        p.correct = p.parsed_label == p.gold_label;
        preds.push_back(std::move(p));
    }
    auto report = accuracy(preds);
    c.expect(report.n == 1066, "fixture size");
    c.expect(report.unexpected_count == 156,
             "expected 156 unexpected, got " + std::to_string(report.unexpected_count));
    c.expect(std::fabs(report.unexpected_pct - 14.63) < 0.005,
             "156/1066 must round to 14.63%");
    c.expect(std::fabs(report.accuracy - 910.0 / 1066.0) < 1e-12,
             "unexpected outputs must count as incorrect");
    return c;
}

// ------------------------------------------------------------------
// 9. two full runs with identical config and seed are byte-identical.
Check criterion9() {
    Check c;
    auto dir = fresh_dir("criterion9");
    FixtureSpec spec;
    spec.n = 400;
    spec.clusters = 4;
    spec.noise_rate = 0.04;
    spec.coverage_gaps = 1;
    spec.seed = 909;
    auto f = make_fixture(spec);
    write_fixture(f, dir / "fx");

    auto run = [&](const std::string& out) {
        PipelineConfig cfg;
        cfg.input_path = dir / "fx" / "corpus.jsonl";
        cfg.embedding.kind = EmbeddingProvider::Kind::file_import;
        cfg.embedding.file = dir / "fx" / "embeddings.dqev";
        cfg.predictor.baseline.k = 1;
        cfg.judge.kind = JudgeSettings::Kind::oracle;
        cfg.judge.truth_path = dir / "fx" / "truth.json";
        cfg.seed = 777;
        cfg.output_dir = dir / out;
        Pipeline pipeline(cfg, "", false);
        pipeline.run_all();
        return dir / out;
    };
    auto out_a = run("a");
    auto out_b = run("b");
    for (const auto& name :
         {"final_set.jsonl", "final_provenance.json", "eval_report.json", "eval_report.txt",
          "triage_report.json", "partition.json", "predictions.jsonl", "verdicts.json",
          "preprocess_report.json", "corpus.jsonl", "embeddings.dqev"}) {
        c.expect(slurp(out_a / name) == slurp(out_b / name),
                 std::string(name) + " differs between identical runs");
    }
    return c;
}

// ------------------------------------------------------------------
// 10. full-scale reproduction is out of scope by design; the README must
//     document the expected full-scale figures instead.
Check criterion10() {
    Check c;
    fs::path readme = fs::path(DQE_SOURCE_DIR) / "README.md";
    c.expect(fs::exists(readme), "README.md missing");
    if (c.ok) {
        std::string text = slurp(readme);
        c.expect(text.find("Full-scale expectations") != std::string::npos,
                 "README lacks the full-scale expectations section");
        for (const char* needle : {"4265", "4351", "14.63", "3.48"}) {
            c.expect(text.find(needle) != std::string::npos,
                     std::string("README expectations omit ") + needle);
        }
    }
    return c;
}

struct Criterion {
    int number;
    const char* title;
    std::function<Check()> run;
};

const Criterion kCriteria[] = {
    {1, "greedy sampler matches brute-force farthest-first (100 instances, exact)",
     criterion1},
    {2, "greedy coverage radius within 2x of exhaustive optimum (n<=12, k<=4)", criterion2},
    {3, "nearest_other matches the O(n^2) scan oracle (100 instances)", criterion3},
    {4, "triage truth table and error partition", criterion4},
    {5, "planted-noise recovery >= 80% with zero clean removals (1000-point fixture)",
     criterion5},
    {6, "final-set accounting identity on every fixture", criterion6},
    {7, "paired t-test fixed cases and CDF grid", criterion7},
    {8, "unexpected-output arithmetic (156/1066 = 14.63%)", criterion8},
    {9, "byte-identical reruns under a fixed config and seed", criterion9},
    {10, "full-scale figures documented as expectations, not reproduced", criterion10},
};

}  // namespace

int main(int argc, char** argv) {
    int only = 0;
    if (argc > 1) only = std::atoi(argv[1]);

    int failures = 0;
    for (const auto& criterion : kCriteria) {
        if (only != 0 && criterion.number != only) continue;
        Check result = criterion.run();
        if (result.ok) {
            std::printf("PASS  criterion %2d: %s\n", criterion.number, criterion.title);
        } else {
            ++failures;
            std::printf("FAIL  criterion %2d: %s\n      %s\n", criterion.number,
                        criterion.title, result.detail.c_str());
        }
    }
    return failures == 0 ? 0 : 1;
}
