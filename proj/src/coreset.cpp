#include "dqe/coreset.hpp"

#include <limits>
#include <random>
#include <stdexcept>

#include "dqe/errors.hpp"

namespace dqe {

Metric metric_from_string(std::string_view s) {
    if (s == "cosine_distance" || s == "cosine") return Metric::cosine_distance;
    if (s == "euclidean") return Metric::euclidean;
    throw std::invalid_argument("unknown metric: " + std::string(s));
}

std::string to_string(Metric m) {
    return m == Metric::cosine_distance ? "cosine_distance" : "euclidean";
}

std::set<std::string, std::less<>> Partition::sampled_set() const {
    return {sampled.begin(), sampled.end()};
}

nlohmann::ordered_json Partition::to_json() const {
    nlohmann::ordered_json j;
    j["seed"] = seed;
    j["metric"] = dqe::to_string(metric);
    j["k"] = sampled.size();
    j["sampled"] = sampled;
    return j;
}

Partition Partition::from_json(const nlohmann::json& j, const EmbeddingMatrix& m) {
    Partition p;
    p.seed = j.at("seed").get<std::uint64_t>();
    p.metric = metric_from_string(j.at("metric").get<std::string>());
    p.sampled = j.at("sampled").get<std::vector<std::string>>();
    auto in_sampled = std::set<std::string, std::less<>>(p.sampled.begin(), p.sampled.end());
    if (in_sampled.size() != p.sampled.size()) {
        throw ArtifactError("partition has duplicate sampled ids");
    }
    for (const auto& id : p.sampled) {
        if (!m.row_of(id)) throw ArtifactError("partition id not in matrix: " + id);
    }
    for (const auto& id : m.ids) {
        if (!in_sampled.count(id)) p.unsampled.push_back(id);
    }
    return p;
}

std::size_t default_k(std::size_t n) {
    if (n < 2) throw std::invalid_argument("default_k needs at least 2 samples");
    return n / 2;
}

Partition k_center_greedy(const EmbeddingMatrix& m, const SamplerConfig& cfg) {
    const std::size_t n = m.rows();
    if (n == 0) throw std::invalid_argument("k_center_greedy: empty matrix");
    const std::size_t k = cfg.k ? *cfg.k : default_k(n);
    if (k < 1 || k > n) {
        throw std::invalid_argument("k_center_greedy: K=" + std::to_string(k) +
                                    " out of range for n=" + std::to_string(n));
    }

    std::vector<std::uint8_t> selected(n, 0);
    std::vector<double> min_dist(n, std::numeric_limits<double>::infinity());
    std::vector<std::size_t> order;
    order.reserve(k);

    std::mt19937_64 engine(cfg.seed);
    std::size_t current = static_cast<std::size_t>(engine() % n);
    for (std::size_t step = 0; step < k; ++step) {
        selected[current] = 1;
        order.push_back(current);
        if (step + 1 == k) break;
        kernels::min_distance_update(m.values.data(), n, m.dim, current, cfg.metric,
                                     min_dist.data(), selected.data());
        auto next = kernels::max_distance_scan(min_dist.data(), n, selected.data());
        current = next.index;
    }

    Partition p;
    p.seed = cfg.seed;
    p.metric = cfg.metric;
    p.sampled.reserve(k);
    for (std::size_t i : order) p.sampled.push_back(m.ids[i]);
    for (std::size_t i = 0; i < n; ++i) {
        if (!selected[i]) p.unsampled.push_back(m.ids[i]);
    }
    return p;
}

double coverage_radius(const Partition& p, const EmbeddingMatrix& m) {
    if (p.sampled.empty()) throw std::invalid_argument("coverage_radius: empty sampled set");
    if (p.unsampled.empty()) return 0.0;

    std::vector<std::size_t> centers;
    centers.reserve(p.sampled.size());
    for (const auto& id : p.sampled) {
        auto r = m.row_of(id);
        if (!r) throw std::invalid_argument("coverage_radius: sampled id not in matrix: " + id);
        centers.push_back(*r);
    }
    std::vector<std::uint8_t> is_center(m.rows(), 0);
    for (std::size_t c : centers) is_center[c] = 1;

    std::vector<double> min_dist(m.rows(), std::numeric_limits<double>::infinity());
    for (std::size_t c : centers) {
        kernels::min_distance_update(m.values.data(), m.rows(), m.dim, c, p.metric,
                                     min_dist.data(), is_center.data());
    }
    auto worst = kernels::max_distance_scan(min_dist.data(), m.rows(), is_center.data());
    return worst.index == SIZE_MAX ? 0.0 : worst.value;
}

}  // namespace dqe
