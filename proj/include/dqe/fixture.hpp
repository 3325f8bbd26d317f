#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dqe/corpus.hpp"
#include "dqe/embedding.hpp"

namespace dqe {

struct FixtureSpec {
    std::size_t n = 1000;        // total sample count, noise and gaps included
    std::size_t clusters = 4;    // Gaussian clusters on the unit sphere
    std::size_t labels = 0;      // 0 = one label per cluster
    std::size_t dim = 16;
    double noise_rate = 0.0;     // fraction planted as flipped near-duplicates
    std::size_t coverage_gaps = 0;  // tight off-cluster clumps, greedily under-sampled
    std::size_t gap_size = 8;
    double cluster_spread = 0.08;
    double duplicate_epsilon = 1e-3;
    std::uint64_t seed = 0;
};

struct Fixture {
    LabeledCorpus corpus;
    EmbeddingMatrix embeddings;            // unit rows, corpus order
    std::map<std::string, std::string> truth;  // id -> true label, for the oracle judge
    std::vector<std::string> flipped_ids;  // planted label flips (stored != truth)
    std::vector<std::string> gap_ids;      // planted coverage-gap members
};

// Synthetic corpus with controllable pathologies: label clusters on the
// unit sphere, near-duplicate pairs with one flipped label, and tight
// same-label clumps placed inside another label's region so they stay
// mispredicted yet mutually nearest.
Fixture make_fixture(const FixtureSpec& spec);

void write_fixture(const Fixture& f, const std::filesystem::path& dir);

std::map<std::string, std::string> read_truth_map(const std::filesystem::path& path);

}  // namespace dqe
