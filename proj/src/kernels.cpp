#include "dqe/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace dqe::kernels {
namespace {

inline bool better(double value, std::size_t index, const ScanResult& best) {
    return value > best.value || (value == best.value && index < best.index);
}

inline double clamp_unit(double x) { return std::min(1.0, std::max(-1.0, x)); }

}  // namespace

double dot(std::span<const float> u, std::span<const float> v) {
    double acc = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        acc += static_cast<double>(u[i]) * static_cast<double>(v[i]);
    }
    return acc;
}

std::size_t normalize_rows(float* data, std::size_t rows, std::size_t dim) {
    std::size_t bad = SIZE_MAX;
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(rows); ++i) {
        float* row = data + static_cast<std::size_t>(i) * dim;
        double norm2 = 0.0;
        for (std::size_t d = 0; d < dim; ++d) {
            norm2 += static_cast<double>(row[d]) * static_cast<double>(row[d]);
        }
        if (norm2 == 0.0) {
#pragma omp critical
            bad = std::min(bad, static_cast<std::size_t>(i));
            continue;
        }
        double inv = 1.0 / std::sqrt(norm2);
        for (std::size_t d = 0; d < dim; ++d) {
            row[d] = static_cast<float>(row[d] * inv);
        }
    }
    return bad;
}

ScanResult max_similarity_scan(const float* data, std::size_t rows, std::size_t dim,
                               std::span<const float> query,
                               const std::uint8_t* mask) {
    ScanResult best{-2.0, SIZE_MAX};
#pragma omp parallel
    {
        ScanResult local{-2.0, SIZE_MAX};
#pragma omp for schedule(static) nowait
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(rows); ++i) {
            std::size_t r = static_cast<std::size_t>(i);
            if (mask && mask[r]) continue;
            double sim = clamp_unit(dot(query, {data + r * dim, dim}));
            if (better(sim, r, local)) local = {sim, r};
        }
#pragma omp critical
        {
            if (local.index != SIZE_MAX && better(local.value, local.index, best)) best = local;
        }
    }
    if (best.index == SIZE_MAX) best.value = 0.0;
    return best;
}

double row_distance(const float* data, std::size_t dim, std::size_t a, std::size_t b,
                    Metric metric) {
    const float* ra = data + a * dim;
    const float* rb = data + b * dim;
    if (metric == Metric::cosine_distance) {
        double acc = 0.0;
        for (std::size_t d = 0; d < dim; ++d) {
            acc += static_cast<double>(ra[d]) * static_cast<double>(rb[d]);
        }
        return 1.0 - clamp_unit(acc);
    }
    double acc = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
        double diff = static_cast<double>(ra[d]) - static_cast<double>(rb[d]);
        acc += diff * diff;
    }
    return std::sqrt(acc);
}

void min_distance_update(const float* data, std::size_t rows, std::size_t dim,
                         std::size_t center, Metric metric, double* min_dist,
                         const std::uint8_t* selected) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(rows); ++i) {
        std::size_t r = static_cast<std::size_t>(i);
        if (selected[r]) continue;
        double d = row_distance(data, dim, r, center, metric);
        if (d < min_dist[r]) min_dist[r] = d;
    }
}

ScanResult max_distance_scan(const double* min_dist, std::size_t rows,
                             const std::uint8_t* selected) {
    ScanResult best{-1.0, SIZE_MAX};
#pragma omp parallel
    {
        ScanResult local{-1.0, SIZE_MAX};
#pragma omp for schedule(static) nowait
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(rows); ++i) {
            std::size_t r = static_cast<std::size_t>(i);
            if (selected[r]) continue;
            if (better(min_dist[r], r, local)) local = {min_dist[r], r};
        }
#pragma omp critical
        {
            if (local.index != SIZE_MAX && better(local.value, local.index, best)) best = local;
        }
    }
    return best;
}

}  // namespace dqe::kernels
