#include "dqe/reference.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace dqe::reference {

double cosine(const float* u, const float* v, std::size_t dim) {
    double uv = 0.0, uu = 0.0, vv = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
        uv += static_cast<double>(u[d]) * static_cast<double>(v[d]);
        uu += static_cast<double>(u[d]) * static_cast<double>(u[d]);
        vv += static_cast<double>(v[d]) * static_cast<double>(v[d]);
    }
    double c = uv / (std::sqrt(uu) * std::sqrt(vv));
    if (c > 1.0) c = 1.0;
    if (c < -1.0) c = -1.0;
    return c;
}

double distance(const float* data, std::size_t dim, std::size_t a, std::size_t b,
                kernels::Metric metric) {
    const float* ra = data + a * dim;
    const float* rb = data + b * dim;
    if (metric == kernels::Metric::cosine_distance) {
        double acc = 0.0;
        for (std::size_t d = 0; d < dim; ++d) {
            acc += static_cast<double>(ra[d]) * static_cast<double>(rb[d]);
        }
        if (acc > 1.0) acc = 1.0;
        if (acc < -1.0) acc = -1.0;
        return 1.0 - acc;
    }
    double acc = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
        double diff = static_cast<double>(ra[d]) - static_cast<double>(rb[d]);
        acc += diff * diff;
    }
    return std::sqrt(acc);
}

std::vector<std::size_t> farthest_first(const float* data, std::size_t rows,
                                        std::size_t dim, std::size_t k,
                                        std::size_t initial,
                                        kernels::Metric metric) {
    if (k > rows) throw std::invalid_argument("k exceeds row count");
    std::vector<std::size_t> selected;
    selected.reserve(k);
    std::vector<bool> chosen(rows, false);
    selected.push_back(initial);
    chosen[initial] = true;
    while (selected.size() < k) {
        double best = -1.0;
        std::size_t best_idx = SIZE_MAX;
        for (std::size_t i = 0; i < rows; ++i) {
            if (chosen[i]) continue;
            double mind = std::numeric_limits<double>::infinity();
            for (std::size_t c : selected) {
                double d = distance(data, dim, i, c, metric);
                if (d < mind) mind = d;
            }
            if (mind > best || (mind == best && i < best_idx)) {
                best = mind;
                best_idx = i;
            }
        }
        selected.push_back(best_idx);
        chosen[best_idx] = true;
    }
    return selected;
}

kernels::ScanResult nearest_scan(const float* data, std::size_t rows, std::size_t dim,
                                 std::size_t query_row,
                                 const std::vector<std::uint8_t>& mask) {
    kernels::ScanResult best{-2.0, SIZE_MAX};
    for (std::size_t i = 0; i < rows; ++i) {
        if (mask[i]) continue;
        double sim = cosine(data + query_row * dim, data + i * dim, dim);
        if (sim > best.value || (sim == best.value && i < best.index)) {
            best = {sim, i};
        }
    }
    return best;
}

double coverage_radius(const float* data, std::size_t rows, std::size_t dim,
                       const std::vector<std::size_t>& centers,
                       kernels::Metric metric) {
    if (centers.empty()) throw std::invalid_argument("empty center set");
    std::vector<bool> is_center(rows, false);
    for (std::size_t c : centers) is_center[c] = true;
    double radius = 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
        if (is_center[i]) continue;
        double mind = std::numeric_limits<double>::infinity();
        for (std::size_t c : centers) {
            double d = distance(data, dim, i, c, metric);
            if (d < mind) mind = d;
        }
        if (mind > radius) radius = mind;
    }
    return radius;
}

double optimal_radius(const float* data, std::size_t rows, std::size_t dim,
                      std::size_t k, kernels::Metric metric) {
    if (k == 0 || k > rows) throw std::invalid_argument("bad k");
    std::vector<std::size_t> subset(k);
    for (std::size_t i = 0; i < k; ++i) subset[i] = i;
    double best = std::numeric_limits<double>::infinity();
    while (true) {
        double r = coverage_radius(data, rows, dim, subset, metric);
        if (r < best) best = r;
        // next combination, lexicographic
        std::size_t i = k;
        while (i > 0) {
            --i;
            if (subset[i] != i + rows - k) {
                ++subset[i];
                for (std::size_t j = i + 1; j < k; ++j) subset[j] = subset[j - 1] + 1;
                break;
            }
            if (i == 0) return best;
        }
    }
}

}  // namespace dqe::reference
