#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dqe/coreset.hpp"
#include "dqe/corpus.hpp"
#include "dqe/embedding.hpp"
#include "dqe/judge.hpp"
#include "dqe/predictor.hpp"
#include "dqe/triage.hpp"
#include "json.hpp"

namespace dqe {

inline constexpr std::string_view kToolVersion = "0.1.0";

enum class Stage { preprocess, embed, sample, predict, triage, judge, assemble, evaluate };

inline constexpr std::array<Stage, 8> kStageOrder = {
    Stage::preprocess, Stage::embed, Stage::sample, Stage::predict,
    Stage::triage,     Stage::judge, Stage::assemble, Stage::evaluate};

std::string to_string(Stage s);
Stage stage_from_string(std::string_view s);

struct JudgeSettings {
    enum class Kind { http_chat, oracle };
    Kind kind = Kind::oracle;
    std::string endpoint;
    std::string model = "gpt-4o";
    std::string api_key_env = "DQE_JUDGE_API_KEY";
    std::filesystem::path truth_path;  // oracle
    std::size_t concurrency = 4;
    int max_retries = 3;
    int backoff_ms = 250;
    int timeout_s = 30;

    std::string identity() const;
};

struct PipelineConfig {
    std::filesystem::path input_path;
    CorpusFormat input_format = CorpusFormat::jsonl;
    bool strict_parse = true;
    std::optional<std::vector<std::string>> vocabulary;
    std::map<std::string, std::string> label_descriptions;

    EmbeddingProvider embedding;

    std::optional<std::size_t> sampler_k;  // default floor(n/2)
    std::optional<std::uint64_t> sampler_seed;  // default sub_seed(seed, "sample")
    Metric sampler_metric = Metric::cosine_distance;

    PredictorBackend predictor;
    JudgeSettings judge;

    std::optional<double> similarity_threshold;

    std::uint64_t seed = 0;
    std::filesystem::path output_dir = "dqe_out";

    std::uint64_t effective_sampler_seed() const;
    static PipelineConfig from_json(const nlohmann::json& j,
                                    const std::filesystem::path& config_dir);
    static PipelineConfig load(const std::filesystem::path& config_path);
};

// Per-stage record of input/output content hashes; a stage reruns iff any
// input hash changed.
class RunManifest {
public:
    explicit RunManifest(std::filesystem::path state_dir);

    struct Entry {
        std::map<std::string, std::string> inputs;   // name -> hash
        std::map<std::string, std::string> outputs;  // path -> hash
        std::string timestamp;
        std::string tool_version;
    };

    std::optional<Entry> entry(Stage s) const;
    void record(Stage s, Entry entry);
    void save() const;

private:
    std::filesystem::path path_;
    std::map<std::string, Entry> entries_;
};

// One pipeline instance per state directory.
class StateLock {
public:
    explicit StateLock(const std::filesystem::path& state_dir);
    ~StateLock();
    StateLock(const StateLock&) = delete;
    StateLock& operator=(const StateLock&) = delete;

private:
    std::filesystem::path path_;
    bool owned_ = false;
};

struct StageResult {
    Stage stage;
    bool skipped = false;  // inputs unchanged, outputs reused
    std::vector<std::filesystem::path> outputs;
};

class Pipeline {
public:
    Pipeline(PipelineConfig config, std::filesystem::path state_dir, bool force = false);

    StageResult run_stage(Stage stage);
    std::vector<StageResult> run_all();

    const std::filesystem::path& state_dir() const { return state_dir_; }

    // Artifact paths within the state directory.
    std::filesystem::path corpus_path() const;
    std::filesystem::path preprocess_report_path() const;
    std::filesystem::path embeddings_path() const;
    std::filesystem::path partition_path() const;
    std::filesystem::path predictions_path() const;
    std::filesystem::path triage_report_path() const;
    std::filesystem::path verdicts_path() const;
    std::filesystem::path final_set_path() const;
    std::filesystem::path final_provenance_path() const;
    std::filesystem::path eval_report_path() const;
    std::filesystem::path eval_text_path() const;

private:
    struct StagePlan {
        std::map<std::string, std::string> inputs;
        std::vector<std::filesystem::path> outputs;
    };
    StagePlan plan(Stage stage) const;
    void execute(Stage stage);
    void require_artifact(const std::filesystem::path& p, Stage producer) const;
    std::string stage_config_hash(Stage stage) const;

    LabeledCorpus load_preprocessed() const;

    PipelineConfig config_;
    std::filesystem::path state_dir_;
    bool force_ = false;
    RunManifest manifest_;
};

}  // namespace dqe
