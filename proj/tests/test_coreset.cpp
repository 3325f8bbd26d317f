#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "dqe/coreset.hpp"
#include "dqe/reference.hpp"
#include "dqe/rng.hpp"

using namespace dqe;

namespace {

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

}  // namespace

TEST_CASE("default_k is floor(n/2)") {
    CHECK(default_k(8530) == 4265);
    CHECK(default_k(120000) == 60000);
    CHECK(default_k(7) == 3);
    CHECK(default_k(2) == 1);
    CHECK_THROWS_AS(default_k(1), std::invalid_argument);
}

TEST_CASE("greedy picks the farthest point first") {
    float nb = 1.0f / std::sqrt(0.999f * 0.999f + 0.045f * 0.045f);
    EmbeddingMatrix m;
    m.dim = 2;
    m.ids = {"a", "b", "c"};
    m.values = {1.f, 0.f, 0.999f * nb, 0.045f * nb, 0.f, 1.f};
    m.rebuild_index();

    // find a seed whose initial pick is row 0
    std::uint64_t seed = 0;
    while (seed_initial_index(seed, 3) != 0) ++seed;

    SamplerConfig cfg;
    cfg.k = 2;
    cfg.seed = seed;
    auto p = k_center_greedy(m, cfg);
    CHECK(p.sampled == std::vector<std::string>{"a", "c"});
    CHECK(p.unsampled == std::vector<std::string>{"b"});
}

TEST_CASE("K = n selects everything") {
    DeterministicRng rng(3);
    auto m = random_unit_matrix(9, 4, rng);
    SamplerConfig cfg;
    cfg.k = 9;
    cfg.seed = 17;
    auto p = k_center_greedy(m, cfg);
    CHECK(p.sampled.size() == 9);
    CHECK(p.unsampled.empty());
    std::set<std::string> all(p.sampled.begin(), p.sampled.end());
    CHECK(all.size() == 9);
}

TEST_CASE("contract errors: K out of range, empty matrix") {
    DeterministicRng rng(4);
    auto m = random_unit_matrix(5, 3, rng);
    SamplerConfig cfg;
    cfg.k = 6;
    CHECK_THROWS_AS(k_center_greedy(m, cfg), std::invalid_argument);
    cfg.k = 0;
    CHECK_THROWS_AS(k_center_greedy(m, cfg), std::invalid_argument);
    EmbeddingMatrix empty;
    cfg.k = 1;
    CHECK_THROWS_AS(k_center_greedy(empty, cfg), std::invalid_argument);
}

TEST_CASE("greedy matches the naive recompute-everything reference") {
    DeterministicRng rng(2024);
    for (int instance = 0; instance < 50; ++instance) {
        std::size_t n = 4 + rng.below(60);
        std::size_t dim = 2 + rng.below(10);
        std::size_t k = 1 + rng.below(n / 2 + 1);
        auto m = random_unit_matrix(n, dim, rng);
        SamplerConfig cfg;
        cfg.k = k;
        cfg.seed = rng.next_u64();
        auto p = k_center_greedy(m, cfg);
        auto expect = reference::farthest_first(m.values.data(), n, m.dim, k,
                                                seed_initial_index(cfg.seed, n), cfg.metric);
        REQUIRE(p.sampled.size() == expect.size());
        for (std::size_t i = 0; i < expect.size(); ++i) {
            CHECK(p.sampled[i] == m.ids[expect[i]]);
        }
    }
}

TEST_CASE("identical inputs give identical selections") {
    DeterministicRng rng(55);
    auto m = random_unit_matrix(40, 8, rng);
    SamplerConfig cfg;
    cfg.k = 20;
    cfg.seed = 999;
    auto p1 = k_center_greedy(m, cfg);
    auto p2 = k_center_greedy(m, cfg);
    CHECK(p1.sampled == p2.sampled);
    CHECK(p1.unsampled == p2.unsampled);
}

TEST_CASE("prefix property: smaller K is a prefix of larger K") {
    DeterministicRng rng(66);
    auto m = random_unit_matrix(30, 5, rng);
    SamplerConfig cfg;
    cfg.seed = 4242;
    cfg.k = 5;
    auto small = k_center_greedy(m, cfg);
    cfg.k = 17;
    auto large = k_center_greedy(m, cfg);
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(small.sampled[i] == large.sampled[i]);
    }
}

TEST_CASE("cosine and euclidean metrics select the same sequence on unit vectors") {
    DeterministicRng rng(77);
    for (int instance = 0; instance < 20; ++instance) {
        std::size_t n = 6 + rng.below(40);
        auto m = random_unit_matrix(n, 2 + rng.below(8), rng);
        SamplerConfig cfg;
        cfg.k = 1 + rng.below(n);
        cfg.seed = rng.next_u64();
        cfg.metric = Metric::cosine_distance;
        auto pc = k_center_greedy(m, cfg);
        cfg.metric = Metric::euclidean;
        auto pe = k_center_greedy(m, cfg);
        CHECK(pc.sampled == pe.sampled);
    }
}

TEST_CASE("coverage_radius conventions") {
    EmbeddingMatrix m;
    m.dim = 2;
    m.ids = {"a", "b"};
    m.values = {1.f, 0.f, 0.f, 1.f};
    m.rebuild_index();

    Partition all;
    all.sampled = {"a", "b"};
    CHECK(coverage_radius(all, m) == doctest::Approx(0.0));

    Partition one;
    one.sampled = {"a"};
    one.unsampled = {"b"};
    one.metric = Metric::cosine_distance;
    CHECK(coverage_radius(one, m) == doctest::Approx(1.0));

    Partition none;
    CHECK_THROWS_AS(coverage_radius(none, m), std::invalid_argument);
}

TEST_CASE("coverage_radius agrees with the serial reference") {
    DeterministicRng rng(88);
    for (int instance = 0; instance < 20; ++instance) {
        std::size_t n = 5 + rng.below(30);
        auto m = random_unit_matrix(n, 4, rng);
        SamplerConfig cfg;
        cfg.k = 1 + rng.below(n);
        cfg.seed = rng.next_u64();
        auto p = k_center_greedy(m, cfg);
        std::vector<std::size_t> centers;
        for (const auto& id : p.sampled) centers.push_back(*m.row_of(id));
        double expect = reference::coverage_radius(m.values.data(), n, m.dim, centers,
                                                   cfg.metric);
        CHECK(coverage_radius(p, m) == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("coverage_radius is non-increasing in K") {
    DeterministicRng rng(101);
    auto m = random_unit_matrix(25, 6, rng);
    SamplerConfig cfg;
    cfg.seed = 31337;
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k <= 25; ++k) {
        cfg.k = k;
        double r = coverage_radius(k_center_greedy(m, cfg), m);
        CHECK(r <= prev + 1e-12);
        prev = r;
    }
}

TEST_CASE("greedy is a 2-approximation of the exhaustive optimum") {
    // Euclidean on the unit sphere is the metric the bound is stated for;
    // 1 - cos is its half-squared surrogate, so radii are compared in
    // euclidean terms. The selected sequences are identical either way.
    DeterministicRng rng(404);
    for (int instance = 0; instance < 40; ++instance) {
        std::size_t n = 5 + rng.below(8);   // n <= 12
        std::size_t k = 2 + rng.below(3);   // k <= 4
        auto m = random_unit_matrix(n, 2 + rng.below(5), rng);
        SamplerConfig cfg;
        cfg.k = k;
        cfg.seed = rng.next_u64();
        cfg.metric = Metric::euclidean;
        auto p = k_center_greedy(m, cfg);
        double greedy_r = coverage_radius(p, m);
        double opt = reference::optimal_radius(m.values.data(), n, m.dim, k,
                                               Metric::euclidean);
        CHECK(greedy_r <= 2.0 * opt + 1e-9);
    }
}

TEST_CASE("partition json round-trips against its matrix") {
    DeterministicRng rng(505);
    auto m = random_unit_matrix(12, 4, rng);
    SamplerConfig cfg;
    cfg.k = 5;
    cfg.seed = 7;
    auto p = k_center_greedy(m, cfg);
    auto j = p.to_json();
    CHECK(j["k"] == 5);
    auto back = Partition::from_json(j, m);
    CHECK(back.sampled == p.sampled);
    CHECK(back.unsampled == p.unsampled);
    CHECK(back.seed == p.seed);
    CHECK(back.metric == p.metric);
}
