// Benchmark of the OpenMP kernels against the serial reference
// implementations, plus parallel scaling of the kernels themselves.
// Output equality is checked on every comparison.

#include <omp.h>

#include <cstdio>
#include <cstring>
#include <functional>
#include <string>
#include <vector>

#include "dqe/coreset.hpp"
#include "dqe/embedding.hpp"
#include "dqe/kernels.hpp"
#include "dqe/reference.hpp"
#include "dqe/rng.hpp"

using namespace dqe;

namespace {

EmbeddingMatrix random_matrix(std::size_t n, std::size_t dim, std::uint64_t seed) {
    DeterministicRng rng(seed);
    EmbeddingMatrix m;
    m.dim = dim;
    m.ids.reserve(n);
    m.values.reserve(n * dim);
    for (std::size_t i = 0; i < n; ++i) {
        m.ids.push_back("r" + std::to_string(i));
        for (std::size_t d = 0; d < dim; ++d) {
            m.values.push_back(static_cast<float>(rng.gaussian()));
        }
    }
    kernels::normalize_rows(m.values.data(), n, dim);
    m.rebuild_index();
    return m;
}

double time_of(const std::function<void()>& fn, int reps) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        double t0 = omp_get_wtime();
        fn();
        double t1 = omp_get_wtime();
        if (t1 - t0 < best) best = t1 - t0;
    }
    return best;
}

void bench_greedy(std::size_t n, std::size_t dim, std::size_t k, int max_threads) {
    EmbeddingMatrix m = random_matrix(n, dim, 42);
    SamplerConfig cfg;
    cfg.k = k;
    cfg.seed = 7;

    std::vector<std::string> out_serial, out_parallel;
    omp_set_num_threads(1);
    double t_serial = time_of([&] { out_serial = k_center_greedy(m, cfg).sampled; }, 3);
    omp_set_num_threads(max_threads);
    double t_parallel = time_of([&] { out_parallel = k_center_greedy(m, cfg).sampled; }, 3);
    bool equal = out_serial == out_parallel;

    std::printf("k_center_greedy      n=%-7zu dim=%-4zu K=%-6zu  1t %8.3f ms  %dt %8.3f ms"
                "  speedup %5.2fx  equal=%s\n",
                n, dim, k, t_serial * 1e3, max_threads, t_parallel * 1e3,
                t_serial / t_parallel, equal ? "yes" : "NO");
}

void bench_greedy_vs_naive(std::size_t n, std::size_t dim, std::size_t k, int max_threads) {
    EmbeddingMatrix m = random_matrix(n, dim, 43);
    SamplerConfig cfg;
    cfg.k = k;
    cfg.seed = 11;

    std::mt19937_64 engine(cfg.seed);
    std::size_t initial = static_cast<std::size_t>(engine() % n);

    std::vector<std::size_t> naive;
    double t_naive = time_of(
        [&] {
            naive = reference::farthest_first(m.values.data(), n, dim, k, initial,
                                              cfg.metric);
        },
        1);
    omp_set_num_threads(max_threads);
    Partition p;
    double t_kernel = time_of([&] { p = k_center_greedy(m, cfg); }, 3);
    bool equal = p.sampled.size() == naive.size();
    for (std::size_t i = 0; equal && i < naive.size(); ++i) {
        equal = p.sampled[i] == m.ids[naive[i]];
    }
    std::printf("greedy vs naive ref  n=%-7zu dim=%-4zu K=%-6zu  ref %8.3f ms  omp %8.3f ms"
                "  speedup %5.2fx  equal=%s\n",
                n, dim, k, t_naive * 1e3, t_kernel * 1e3, t_naive / t_kernel,
                equal ? "yes" : "NO");
}

void bench_nearest(std::size_t n, std::size_t dim, std::size_t queries, int max_threads) {
    EmbeddingMatrix m = random_matrix(n, dim, 44);
    std::vector<std::uint8_t> mask(n, 0);

    std::vector<std::size_t> ref_idx(queries), omp_idx(queries);
    double t_ref = time_of(
        [&] {
            for (std::size_t q = 0; q < queries; ++q) {
                mask.assign(n, 0);
                mask[q] = 1;
                ref_idx[q] = reference::nearest_scan(m.values.data(), n, dim, q, mask).index;
            }
        },
        1);
    omp_set_num_threads(max_threads);
    double t_omp = time_of(
        [&] {
            for (std::size_t q = 0; q < queries; ++q) {
                mask.assign(n, 0);
                mask[q] = 1;
                omp_idx[q] = kernels::max_similarity_scan(m.values.data(), n, dim, m.row(q),
                                                          mask.data())
                                 .index;
            }
        },
        3);
    bool equal = ref_idx == omp_idx;
    std::printf("nearest top-1 scan   n=%-7zu dim=%-4zu q=%-6zu  ref %8.3f ms  omp %8.3f ms"
                "  speedup %5.2fx  equal=%s\n",
                n, dim, queries, t_ref * 1e3, t_omp * 1e3, t_ref / t_omp,
                equal ? "yes" : "NO");
}

}  // namespace

int main(int argc, char** argv) {
    int max_threads = omp_get_max_threads();
    bool quick = argc > 1 && std::strcmp(argv[1], "--quick") == 0;
    std::printf("threads available: %d\n\n", max_threads);

    if (quick) {
        bench_greedy(2000, 64, 1000, max_threads);
        bench_greedy_vs_naive(1000, 32, 200, max_threads);
        bench_nearest(2000, 64, 200, max_threads);
        return 0;
    }

    bench_greedy(5000, 128, 2500, max_threads);
    bench_greedy(20000, 128, 10000, max_threads);
    bench_greedy(50000, 384, 25000, max_threads);

    bench_greedy_vs_naive(2000, 64, 400, max_threads);
    bench_greedy_vs_naive(4000, 64, 800, max_threads);

    bench_nearest(20000, 384, 500, max_threads);
    bench_nearest(50000, 384, 500, max_threads);
    return 0;
}
