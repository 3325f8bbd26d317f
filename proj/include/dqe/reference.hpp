#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "dqe/kernels.hpp"

namespace dqe::reference {

// Serial, deliberately naive implementations kept as oracles for the
// OpenMP kernels and the O(nK) sampler. They share no inner loops with
// dqe::kernels: every distance is recomputed from scratch.

double cosine(const float* u, const float* v, std::size_t dim);

double distance(const float* data, std::size_t dim, std::size_t a, std::size_t b,
                kernels::Metric metric);

// Farthest-first traversal recomputing every point's distance to the whole
// selected set at each step. O(n^2 K dim).
std::vector<std::size_t> farthest_first(const float* data, std::size_t rows,
                                        std::size_t dim, std::size_t k,
                                        std::size_t initial,
                                        kernels::Metric metric);

// Full-scan top-1 neighbor, skipping masked rows. Ties resolve to the
// lowest row index.
kernels::ScanResult nearest_scan(const float* data, std::size_t rows, std::size_t dim,
                                 std::size_t query_row,
                                 const std::vector<std::uint8_t>& mask);

double coverage_radius(const float* data, std::size_t rows, std::size_t dim,
                       const std::vector<std::size_t>& centers,
                       kernels::Metric metric);

// Exact k-center optimum by enumerating every center subset of size k.
// Only feasible for small instances.
double optimal_radius(const float* data, std::size_t rows, std::size_t dim,
                      std::size_t k, kernels::Metric metric);

}  // namespace dqe::reference
