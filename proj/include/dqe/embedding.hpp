#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "dqe/corpus.hpp"

namespace dqe {

struct EmbeddingMatrix {
    std::vector<std::string> ids;  // row order; matches source corpus order
    std::size_t dim = 0;
    std::vector<float> values;  // row-major, ids.size() x dim

    std::size_t rows() const { return ids.size(); }
    std::span<const float> row(std::size_t i) const {
        return {values.data() + i * dim, dim};
    }
    std::optional<std::size_t> row_of(std::string_view id) const;
    void rebuild_index();

private:
    std::map<std::string, std::size_t, std::less<>> index_;
};

// cos(u, v) = u.v / (|u||v|), accumulated in double and clamped to [-1, 1].
// Throws std::invalid_argument on dimension mismatch or a zero-norm input.
double cosine(std::span<const float> u, std::span<const float> v);

// Returns a copy with every row scaled to unit norm. Throws
// std::invalid_argument naming the offending id if a row has zero norm.
EmbeddingMatrix normalize_rows(const EmbeddingMatrix& m);

struct NearestResult {
    std::string id;
    double similarity = 0.0;
    std::size_t row = 0;
};

// Exhaustive top-1 cosine search over pool rows not in `exclude`. The query
// sample itself is always excluded. Ties resolve to the lowest row index.
NearestResult nearest_other(std::string_view qa_id, const EmbeddingMatrix& pool,
                            const std::set<std::string, std::less<>>& exclude);

// Binary persistence: magic "DQEV", u32 version=1, u32 dim, u64 count, then
// per row a u16 id length, the id bytes, and dim little-endian float32.
void write_embeddings(const EmbeddingMatrix& m, const std::filesystem::path& path);
EmbeddingMatrix read_embeddings(const std::filesystem::path& path);

// Textual alternative: one JSON object per line with fields id and vector.
void write_embeddings_jsonl(const EmbeddingMatrix& m, const std::filesystem::path& path);
EmbeddingMatrix read_embeddings_jsonl(const std::filesystem::path& path);

// Dispatch on extension: ".jsonl" is textual, everything else binary.
EmbeddingMatrix read_embeddings_any(const std::filesystem::path& path);

struct EmbeddingProvider {
    enum class Kind { file_import, http_service };
    Kind kind = Kind::file_import;
    std::filesystem::path file;  // file_import
    std::string endpoint;        // http_service, e.g. http://host:port/embed
    std::string api_key_env = "DQE_EMBEDDING_API_KEY";
    std::size_t batch_size = 32;
    std::size_t concurrency = 4;
    int max_retries = 3;
    int backoff_ms = 250;
    int timeout_s = 30;

    std::string identity() const;
};

// One row per corpus sample, in corpus order, rows normalized. When
// cache_dir is non-empty, per-text vectors are reused across runs keyed by
// (provider identity, text hash), so edits to a corpus only re-embed the
// texts that changed.
EmbeddingMatrix embed_corpus(const LabeledCorpus& corpus, const EmbeddingProvider& provider,
                             const std::filesystem::path& cache_dir = {});

}  // namespace dqe
