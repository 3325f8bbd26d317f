#include "dqe/fixture.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "dqe/errors.hpp"
#include "dqe/hash.hpp"
#include "dqe/rng.hpp"
#include "json.hpp"

namespace dqe {
namespace {

using nlohmann::json;

std::vector<double> random_gaussian_vec(DeterministicRng& rng, std::size_t dim) {
    std::vector<double> v(dim);
    for (auto& x : v) x = rng.gaussian();
    return v;
}

void normalize(std::vector<double>& v) {
    double norm2 = 0.0;
    for (double x : v) norm2 += x * x;
    double inv = 1.0 / std::sqrt(norm2);
    for (double& x : v) x *= inv;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

std::vector<double> jitter(const std::vector<double>& center, double sigma,
                           DeterministicRng& rng) {
    std::vector<double> v = center;
    for (double& x : v) x += sigma * rng.gaussian();
    normalize(v);
    return v;
}

}  // namespace

Fixture make_fixture(const FixtureSpec& spec) {
    if (spec.n == 0) throw std::invalid_argument("fixture: n must be positive");
    if (spec.clusters == 0) throw std::invalid_argument("fixture: need at least one cluster");
    if (spec.dim < 2) throw std::invalid_argument("fixture: dim must be at least 2");
    std::size_t label_count = spec.labels == 0 ? spec.clusters : spec.labels;
    if (spec.noise_rate < 0.0 || spec.noise_rate > 1.0) {
        throw std::invalid_argument("fixture: noise rate outside [0, 1]");
    }
    if (spec.noise_rate > 0.0 && label_count < 2) {
        throw std::invalid_argument("fixture: planted noise needs at least 2 labels");
    }

    std::size_t noise_count = static_cast<std::size_t>(std::llround(spec.noise_rate *
                                                                    static_cast<double>(spec.n)));
    std::size_t gap_points = spec.coverage_gaps * spec.gap_size;
    if (noise_count + gap_points + spec.clusters > spec.n) {
        throw std::invalid_argument("fixture: n too small for requested noise and gaps");
    }
    std::size_t base_count = spec.n - noise_count - gap_points;

    DeterministicRng rng(sub_seed(spec.seed, "fixture"));

    // Cluster directions, resampled until reasonably separated.
    std::vector<std::vector<double>> dirs;
    while (dirs.size() < spec.clusters) {
        auto d = random_gaussian_vec(rng, spec.dim);
        normalize(d);
        bool ok = std::all_of(dirs.begin(), dirs.end(), [&](const auto& e) {
            return dot(d, e) < 0.5;
        });
        if (ok) dirs.push_back(std::move(d));
    }

    std::vector<std::string> label_names(label_count);
    for (std::size_t l = 0; l < label_count; ++l) label_names[l] = "label_" + std::to_string(l);
    auto cluster_label = [&](std::size_t c) { return label_names[c % label_count]; };

    Fixture f;
    f.embeddings.dim = spec.dim;
    auto push_sample = [&](const std::string& id, const std::string& text,
                           const std::string& stored, const std::string& truth,
                           const std::vector<double>& vec) {
        Sample s;
        s.id = id;
        s.text = text;
        s.label = stored;
        s.source_index = f.corpus.samples.size();
        f.corpus.samples.push_back(std::move(s));
        f.embeddings.ids.push_back(id);
        for (double x : vec) f.embeddings.values.push_back(static_cast<float>(x));
        f.truth[id] = truth;
    };

    // Base cluster points, round-robin over clusters.
    std::vector<std::vector<double>> base_vecs(base_count);
    std::vector<std::size_t> base_cluster(base_count);
    for (std::size_t i = 0; i < base_count; ++i) {
        std::size_t c = i % spec.clusters;
        base_cluster[i] = c;
        base_vecs[i] = jitter(dirs[c], spec.cluster_spread, rng);
        std::string id = "s" + std::to_string(i);
        push_sample(id, "cluster " + std::to_string(c) + " point " + std::to_string(i),
                    cluster_label(c), cluster_label(c), base_vecs[i]);
    }

    // Coverage gaps: a tight clump labeled like cluster A but placed inside
    // cluster B's region. Members are mutually nearest, so a predictor keyed
    // to the big clusters gets them wrong while their top-1 neighbour shares
    // their label.
    for (std::size_t g = 0; g < spec.coverage_gaps; ++g) {
        std::size_t a = g % spec.clusters;
        std::size_t b = (g + 1) % spec.clusters;
        auto offset = random_gaussian_vec(rng, spec.dim);
        normalize(offset);
        std::vector<double> center(spec.dim);
        for (std::size_t d = 0; d < spec.dim; ++d) {
            center[d] = dirs[b][d] + 0.25 * offset[d];
        }
        normalize(center);
        for (std::size_t m = 0; m < spec.gap_size; ++m) {
            auto vec = jitter(center, 0.02, rng);
            std::string id = "g" + std::to_string(g) + "_" + std::to_string(m);
            push_sample(id,
                        "gap " + std::to_string(g) + " member " + std::to_string(m),
                        cluster_label(a), cluster_label(a), vec);
            f.gap_ids.push_back(id);
        }
    }

    // Planted noise: near-duplicates of distinct base points with the label
    // flipped to the cyclically next one. The twin's true label is its
    // source's label.
    std::vector<std::size_t> candidates(base_count);
    std::iota(candidates.begin(), candidates.end(), 0);
    for (std::size_t i = base_count; i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rng.below(i));
        std::swap(candidates[i - 1], candidates[j]);
    }
    if (noise_count > base_count) {
        throw std::invalid_argument("fixture: noise count exceeds base points");
    }
    for (std::size_t j = 0; j < noise_count; ++j) {
        std::size_t src = candidates[j];
        auto vec = base_vecs[src];
        for (double& x : vec) x += spec.duplicate_epsilon * rng.gaussian();
        normalize(vec);
        std::size_t c = base_cluster[src];
        std::size_t true_label_idx = c % label_count;
        std::string flipped = label_names[(true_label_idx + 1) % label_count];
        std::string id = "n" + std::to_string(j);
        push_sample(id,
                    "near duplicate " + std::to_string(j) + " of s" + std::to_string(src),
                    flipped, cluster_label(c), vec);
        f.flipped_ids.push_back(id);
    }

    f.corpus.label_vocabulary = label_names;
    std::sort(f.corpus.label_vocabulary.begin(), f.corpus.label_vocabulary.end());
    f.embeddings.rebuild_index();
    return f;
}

void write_fixture(const Fixture& f, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_corpus(f.corpus, dir / "corpus.jsonl", CorpusFormat::jsonl);
    write_embeddings(f.embeddings, dir / "embeddings.dqev");
    {
        nlohmann::ordered_json truth = nlohmann::ordered_json::object();
        for (const auto& [id, label] : f.truth) truth[id] = label;
        std::ofstream out(dir / "truth.json", std::ios::binary | std::ios::trunc);
        out << truth.dump(2) << "\n";
    }
    {
        nlohmann::ordered_json meta;
        meta["n"] = f.corpus.size();
        meta["flipped_ids"] = f.flipped_ids;
        meta["gap_ids"] = f.gap_ids;
        std::ofstream out(dir / "fixture_meta.json", std::ios::binary | std::ios::trunc);
        out << meta.dump(2) << "\n";
    }
}

std::map<std::string, std::string> read_truth_map(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ArtifactError("cannot open truth map: " + path.string());
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        throw ArtifactError(path.string() + ": truth map must be a JSON object");
    }
    std::map<std::string, std::string> out;
    for (auto it = j.begin(); it != j.end(); ++it) {
        out[it.key()] = it.value().get<std::string>();
    }
    return out;
}

}  // namespace dqe
