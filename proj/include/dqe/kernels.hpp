#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace dqe::kernels {

// OpenMP-parallel inner loops shared by the sampler, the nearest-neighbor
// search and the baseline predictor. Per-row arithmetic accumulates in
// double and reductions compare (value, index) exactly, so results are
// identical for any thread count. Serial counterparts used as test oracles
// live in dqe::reference.

enum class Metric { cosine_distance, euclidean };

struct ScanResult {
    double value = 0.0;
    std::size_t index = SIZE_MAX;  // SIZE_MAX when no active row exists
};

double dot(std::span<const float> u, std::span<const float> v);

// Scales every row to unit Euclidean norm. Returns the index of the first
// zero-norm row, or SIZE_MAX if all rows were normalized.
std::size_t normalize_rows(float* data, std::size_t rows, std::size_t dim);

// Highest-similarity row against `query`, skipping rows where mask[i] != 0.
// Ties resolve to the lowest row index.
ScanResult max_similarity_scan(const float* data, std::size_t rows, std::size_t dim,
                               std::span<const float> query,
                               const std::uint8_t* mask);

// min_dist[i] = min(min_dist[i], distance(row i, row center)) for rows not
// yet selected.
void min_distance_update(const float* data, std::size_t rows, std::size_t dim,
                         std::size_t center, Metric metric, double* min_dist,
                         const std::uint8_t* selected);

// Row with the largest min_dist among unselected rows; ties resolve to the
// lowest row index.
ScanResult max_distance_scan(const double* min_dist, std::size_t rows,
                             const std::uint8_t* selected);

double row_distance(const float* data, std::size_t dim, std::size_t a, std::size_t b,
                    Metric metric);

}  // namespace dqe::kernels
