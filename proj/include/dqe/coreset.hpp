#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dqe/embedding.hpp"
#include "dqe/kernels.hpp"
#include "json.hpp"

namespace dqe {

using kernels::Metric;

Metric metric_from_string(std::string_view s);
std::string to_string(Metric m);

struct SamplerConfig {
    std::optional<std::size_t> k;  // default floor(n/2)
    std::uint64_t seed = 0;
    Metric metric = Metric::cosine_distance;
};

struct Partition {
    std::vector<std::string> sampled;    // selection order
    std::vector<std::string> unsampled;  // matrix/corpus order
    std::uint64_t seed = 0;
    Metric metric = Metric::cosine_distance;

    std::set<std::string, std::less<>> sampled_set() const;
    nlohmann::ordered_json to_json() const;
    // Rebuilds the unsampled side from the matrix the partition was drawn
    // from.
    static Partition from_json(const nlohmann::json& j, const EmbeddingMatrix& m);
};

// K defaults to half of the preprocessed corpus size.
std::size_t default_k(std::size_t n);

// Farthest-first traversal over normalized rows: the seed picks the initial
// center (index = mt19937_64(seed) first draw mod n); each step selects the
// row with the largest distance to its nearest chosen center, maintaining a
// running min-distance array (O(nK) distance evaluations). Ties resolve to
// the lowest row index.
Partition k_center_greedy(const EmbeddingMatrix& m, const SamplerConfig& cfg);

// k-center objective of a partition: max over unsampled rows of the
// distance to the nearest sampled row. Zero when everything is sampled.
double coverage_radius(const Partition& p, const EmbeddingMatrix& m);

}  // namespace dqe
