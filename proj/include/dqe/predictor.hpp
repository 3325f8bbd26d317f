#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "dqe/corpus.hpp"
#include "dqe/embedding.hpp"

namespace dqe {

// Marker a generative model's output maps to when it is not a valid label.
inline constexpr std::string_view kUnexpectedLabel = "<unexpected>";

struct Prediction {
    std::string sample_id;
    std::string raw_output;    // verbatim model output, kept for audit
    std::string parsed_label;  // vocab token or kUnexpectedLabel
    std::string gold_label;
    bool correct = false;
};

// Trim, ASCII case-fold and strip trailing punctuation, then match exactly
// against the vocabulary normalized the same way. Anything else is
// unexpected output; there is no fuzzy rescue.
std::string parse_output(std::string_view raw, const std::vector<std::string>& vocab);

struct BaselineConfig {
    enum class Kind { nearest_centroid, knn };
    Kind kind = Kind::knn;
    std::size_t k = 1;  // knn neighbourhood size
};

// Embedding-space stand-in for a fine-tuned classifier. nearest_centroid
// stores one normalized mean vector per label; knn votes over the k nearest
// training rows (vote ties fall back to the single nearest neighbour).
class EmbeddingBaseline {
public:
    static EmbeddingBaseline fit(const std::vector<std::string>& train_ids,
                                 const LabeledCorpus& corpus, const EmbeddingMatrix& emb,
                                 const BaselineConfig& cfg);

    std::string predict(std::span<const float> query) const;
    std::vector<std::string> predict_rows(const EmbeddingMatrix& emb,
                                          const std::vector<std::string>& ids) const;

private:
    BaselineConfig cfg_;
    // nearest_centroid
    std::vector<std::string> centroid_labels_;
    std::vector<float> centroids_;  // row-major
    // knn
    std::vector<std::string> train_labels_;
    std::vector<float> train_vectors_;  // row-major
    std::size_t dim_ = 0;
};

EmbeddingBaseline fit_baseline(const std::vector<std::string>& train_ids,
                               const LabeledCorpus& corpus, const EmbeddingMatrix& emb,
                               const BaselineConfig& cfg);

struct PredictorBackend {
    enum class Kind { file_import, http_inference, embedding_baseline };
    Kind kind = Kind::embedding_baseline;

    std::filesystem::path file;  // file_import: jsonl of {id, raw_output}

    std::string endpoint;  // http_inference
    std::string prompt_template =
        "Classify the following text into exactly one of these labels: {labels}.\n"
        "Respond with the label only.\n\nText: {text}\nLabel:";
    std::string api_key_env = "DQE_INFERENCE_API_KEY";
    std::size_t concurrency = 4;
    int max_retries = 3;
    int backoff_ms = 250;
    int timeout_s = 30;
    // When set, completed {id, raw_output} records are appended here as they
    // arrive and reused on the next run, so interrupted runs resume.
    std::filesystem::path partial_path;

    BaselineConfig baseline;
};

struct PredictContext {
    const LabeledCorpus& corpus;
    std::vector<std::string> targets;               // ids, order preserved in output
    const EmbeddingMatrix* embeddings = nullptr;    // embedding_baseline
    const std::vector<std::string>* train_ids = nullptr;  // embedding_baseline fit set
};

// One Prediction per target id, in target order. raw_output is recorded
// verbatim; correct compares the parsed label with the gold label.
std::vector<Prediction> predict_all(const PredictContext& ctx, const PredictorBackend& backend);

// Predictions file: one JSON object per line, fields id and raw_output.
void write_predictions(const std::vector<Prediction>& preds, const std::filesystem::path& path);
std::vector<std::pair<std::string, std::string>> read_raw_predictions(
    const std::filesystem::path& path);

}  // namespace dqe
