#include "dqe/pipeline.hpp"

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include "dqe/errors.hpp"
#include "dqe/evaluate.hpp"
#include "dqe/fixture.hpp"
#include "dqe/hash.hpp"

namespace dqe {
namespace {

using nlohmann::json;

std::string now_iso8601() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_text_atomic(const std::filesystem::path& path, const std::string& content) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ArtifactError("cannot write " + path.string());
        out << content;
        if (!out) throw ArtifactError("write failed: " + path.string());
    }
    std::filesystem::rename(tmp, path);
}

json load_json_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ArtifactError("cannot open " + path.string());
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ArtifactError(path.string() + ": invalid JSON");
    return j;
}

std::filesystem::path resolve_relative(const std::filesystem::path& p,
                                       const std::filesystem::path& base) {
    if (p.empty() || p.is_absolute()) return p;
    return base / p;
}

std::filesystem::path ensure_state_dir(const std::filesystem::path& requested,
                                       const std::filesystem::path& fallback) {
    auto dir = requested.empty() ? fallback : requested;
    if (dir.empty()) throw UsageError("no state directory: set output_dir or --state-dir");
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace

std::string to_string(Stage s) {
    switch (s) {
        case Stage::preprocess: return "preprocess";
        case Stage::embed: return "embed";
        case Stage::sample: return "sample";
        case Stage::predict: return "predict";
        case Stage::triage: return "triage";
        case Stage::judge: return "judge";
        case Stage::assemble: return "assemble";
        case Stage::evaluate: return "evaluate";
    }
    return "preprocess";
}

Stage stage_from_string(std::string_view s) {
    for (Stage st : kStageOrder) {
        if (to_string(st) == s) return st;
    }
    throw UsageError("unknown stage: " + std::string(s));
}

std::string JudgeSettings::identity() const {
    if (kind == Kind::oracle) return "oracle:" + truth_path.string();
    return model + "@" + endpoint;
}

std::uint64_t PipelineConfig::effective_sampler_seed() const {
    return sampler_seed ? *sampler_seed : sub_seed(seed, "sample");
}

PipelineConfig PipelineConfig::from_json(const json& j, const std::filesystem::path& config_dir) {
    PipelineConfig cfg;
    try {
        const auto& input = j.at("input");
        cfg.input_path = resolve_relative(input.at("path").get<std::string>(), config_dir);
        cfg.input_format = corpus_format_from_string(input.value("format", "jsonl"));
        cfg.strict_parse = input.value("strict", true);
        if (input.contains("vocabulary")) {
            cfg.vocabulary = input["vocabulary"].get<std::vector<std::string>>();
        }
        if (input.contains("label_descriptions")) {
            cfg.label_descriptions =
                input["label_descriptions"].get<std::map<std::string, std::string>>();
        }

        if (j.contains("embedding")) {
            const auto& e = j["embedding"];
            std::string kind = e.value("kind", "file_import");
            if (kind == "file_import") {
                cfg.embedding.kind = EmbeddingProvider::Kind::file_import;
                cfg.embedding.file = resolve_relative(e.at("path").get<std::string>(), config_dir);
            } else if (kind == "http_service") {
                cfg.embedding.kind = EmbeddingProvider::Kind::http_service;
                cfg.embedding.endpoint = e.at("endpoint").get<std::string>();
            } else {
                throw UsageError("embedding.kind must be file_import or http_service");
            }
            cfg.embedding.api_key_env = e.value("api_key_env", cfg.embedding.api_key_env);
            cfg.embedding.batch_size = e.value("batch_size", cfg.embedding.batch_size);
            if (cfg.embedding.batch_size < 1) throw UsageError("embedding.batch_size must be >= 1");
            cfg.embedding.concurrency = e.value("concurrency", cfg.embedding.concurrency);
            cfg.embedding.max_retries = e.value("max_retries", cfg.embedding.max_retries);
            cfg.embedding.backoff_ms = e.value("backoff_ms", cfg.embedding.backoff_ms);
            cfg.embedding.timeout_s = e.value("timeout_s", cfg.embedding.timeout_s);
        }

        if (j.contains("sampler")) {
            const auto& s = j["sampler"];
            if (s.contains("k") && !s["k"].is_null()) {
                cfg.sampler_k = s["k"].get<std::size_t>();
            }
            if (s.contains("seed") && !s["seed"].is_null()) {
                cfg.sampler_seed = s["seed"].get<std::uint64_t>();
            }
            cfg.sampler_metric = metric_from_string(s.value("metric", "cosine_distance"));
        }

        if (j.contains("predictor")) {
            const auto& p = j["predictor"];
            std::string kind = p.value("kind", "embedding_baseline");
            if (kind == "file_import") {
                cfg.predictor.kind = PredictorBackend::Kind::file_import;
                cfg.predictor.file = resolve_relative(p.at("path").get<std::string>(), config_dir);
            } else if (kind == "http_inference") {
                cfg.predictor.kind = PredictorBackend::Kind::http_inference;
                cfg.predictor.endpoint = p.at("endpoint").get<std::string>();
            } else if (kind == "embedding_baseline") {
                cfg.predictor.kind = PredictorBackend::Kind::embedding_baseline;
            } else {
                throw UsageError(
                    "predictor.kind must be file_import, http_inference or embedding_baseline");
            }
            cfg.predictor.prompt_template = p.value("prompt_template", cfg.predictor.prompt_template);
            cfg.predictor.api_key_env = p.value("api_key_env", cfg.predictor.api_key_env);
            cfg.predictor.concurrency = p.value("concurrency", cfg.predictor.concurrency);
            cfg.predictor.max_retries = p.value("max_retries", cfg.predictor.max_retries);
            cfg.predictor.backoff_ms = p.value("backoff_ms", cfg.predictor.backoff_ms);
            cfg.predictor.timeout_s = p.value("timeout_s", cfg.predictor.timeout_s);
            if (p.contains("baseline")) {
                const auto& b = p["baseline"];
                std::string bkind = b.value("kind", "knn");
                if (bkind == "nearest_centroid") {
                    cfg.predictor.baseline.kind = BaselineConfig::Kind::nearest_centroid;
                } else if (bkind == "knn") {
                    cfg.predictor.baseline.kind = BaselineConfig::Kind::knn;
                } else {
                    throw UsageError("predictor.baseline.kind must be nearest_centroid or knn");
                }
                cfg.predictor.baseline.k = b.value("k", cfg.predictor.baseline.k);
            }
        }

        if (j.contains("judge")) {
            const auto& jj = j["judge"];
            std::string kind = jj.value("kind", "oracle");
            if (kind == "oracle") {
                cfg.judge.kind = JudgeSettings::Kind::oracle;
                cfg.judge.truth_path =
                    resolve_relative(jj.at("truth_path").get<std::string>(), config_dir);
            } else if (kind == "http_chat") {
                cfg.judge.kind = JudgeSettings::Kind::http_chat;
                cfg.judge.endpoint = jj.at("endpoint").get<std::string>();
                cfg.judge.model = jj.value("model", cfg.judge.model);
            } else {
                throw UsageError("judge.kind must be oracle or http_chat");
            }
            cfg.judge.api_key_env = jj.value("api_key_env", cfg.judge.api_key_env);
            cfg.judge.concurrency = jj.value("concurrency", cfg.judge.concurrency);
            cfg.judge.max_retries = jj.value("max_retries", cfg.judge.max_retries);
            cfg.judge.backoff_ms = jj.value("backoff_ms", cfg.judge.backoff_ms);
            cfg.judge.timeout_s = jj.value("timeout_s", cfg.judge.timeout_s);
        }

        if (j.contains("triage")) {
            const auto& t = j["triage"];
            if (t.contains("similarity_threshold") && !t["similarity_threshold"].is_null()) {
                cfg.similarity_threshold = t["similarity_threshold"].get<double>();
            }
        }

        cfg.seed = j.value("seed", std::uint64_t{0});
        cfg.output_dir = resolve_relative(j.value("output_dir", "dqe_out"), config_dir);
    } catch (const json::exception& e) {
        throw UsageError(std::string("invalid config: ") + e.what());
    }
    return cfg;
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& config_path) {
    std::ifstream in(config_path, std::ios::binary);
    if (!in) throw UsageError("cannot open config: " + config_path.string());
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw UsageError(config_path.string() + ": invalid JSON");
    return from_json(j, config_path.parent_path());
}

RunManifest::RunManifest(std::filesystem::path state_dir)
    : path_(state_dir / "manifest.json") {
    if (!std::filesystem::exists(path_)) return;
    json j = load_json_file(path_);
    for (auto it = j["stages"].begin(); it != j["stages"].end(); ++it) {
        Entry e;
        e.inputs = it.value().value("inputs", std::map<std::string, std::string>{});
        e.outputs = it.value().value("outputs", std::map<std::string, std::string>{});
        e.timestamp = it.value().value("timestamp", "");
        e.tool_version = it.value().value("tool_version", "");
        entries_[it.key()] = std::move(e);
    }
}

std::optional<RunManifest::Entry> RunManifest::entry(Stage s) const {
    auto it = entries_.find(to_string(s));
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

void RunManifest::record(Stage s, Entry entry) {
    entry.timestamp = now_iso8601();
    entry.tool_version = std::string(kToolVersion);
    entries_[to_string(s)] = std::move(entry);
    save();
}

void RunManifest::save() const {
    nlohmann::ordered_json j;
    j["tool_version"] = std::string(kToolVersion);
    nlohmann::ordered_json stages = nlohmann::ordered_json::object();
    for (const auto& [name, e] : entries_) {
        stages[name] = {{"inputs", e.inputs},
                        {"outputs", e.outputs},
                        {"timestamp", e.timestamp},
                        {"tool_version", e.tool_version}};
    }
    j["stages"] = stages;
    write_text_atomic(path_, j.dump(2) + "\n");
}

StateLock::StateLock(const std::filesystem::path& state_dir)
    : path_(state_dir / ".dqe.lock") {
    std::filesystem::create_directories(state_dir);
    std::FILE* f = std::fopen(path_.c_str(), "wx");
    if (!f) {
        throw ArtifactError("state directory is locked by another pipeline instance (" +
                            path_.string() + "); remove the lock file if that run is dead");
    }
    std::fprintf(f, "%ld\n", static_cast<long>(::getpid()));
    std::fclose(f);
    owned_ = true;
}

StateLock::~StateLock() {
    if (owned_) {
        std::error_code ec;
        std::filesystem::remove(path_, ec);
    }
}

Pipeline::Pipeline(PipelineConfig config, std::filesystem::path state_dir, bool force)
    : config_(std::move(config)),
      state_dir_(ensure_state_dir(state_dir, config_.output_dir)),
      force_(force),
      manifest_(state_dir_) {}

std::filesystem::path Pipeline::corpus_path() const { return state_dir_ / "corpus.jsonl"; }
std::filesystem::path Pipeline::preprocess_report_path() const {
    return state_dir_ / "preprocess_report.json";
}
std::filesystem::path Pipeline::embeddings_path() const { return state_dir_ / "embeddings.dqev"; }
std::filesystem::path Pipeline::partition_path() const { return state_dir_ / "partition.json"; }
std::filesystem::path Pipeline::predictions_path() const {
    return state_dir_ / "predictions.jsonl";
}
std::filesystem::path Pipeline::triage_report_path() const {
    return state_dir_ / "triage_report.json";
}
std::filesystem::path Pipeline::verdicts_path() const { return state_dir_ / "verdicts.json"; }
std::filesystem::path Pipeline::final_set_path() const {
    return state_dir_ / ("final_set." + to_string(config_.input_format));
}
std::filesystem::path Pipeline::final_provenance_path() const {
    return state_dir_ / "final_provenance.json";
}
std::filesystem::path Pipeline::eval_report_path() const {
    return state_dir_ / "eval_report.json";
}
std::filesystem::path Pipeline::eval_text_path() const { return state_dir_ / "eval_report.txt"; }

void Pipeline::require_artifact(const std::filesystem::path& p, Stage producer) const {
    if (!std::filesystem::exists(p)) {
        throw ArtifactError("missing upstream artifact " + p.string() + "; run stage '" +
                            to_string(producer) + "' first");
    }
}

std::string Pipeline::stage_config_hash(Stage stage) const {
    json j;
    switch (stage) {
        case Stage::preprocess:
            j = {{"path", config_.input_path.string()},
                 {"format", to_string(config_.input_format)},
                 {"strict", config_.strict_parse}};
            if (config_.vocabulary) j["vocabulary"] = *config_.vocabulary;
            break;
        case Stage::embed:
            j = {{"provider", config_.embedding.identity()},
                 {"batch_size", config_.embedding.batch_size}};
            break;
        case Stage::sample:
            j = {{"k", config_.sampler_k ? json(*config_.sampler_k) : json(nullptr)},
                 {"seed", config_.effective_sampler_seed()},
                 {"metric", to_string(config_.sampler_metric)}};
            break;
        case Stage::predict:
            j = {{"kind", static_cast<int>(config_.predictor.kind)},
                 {"file", config_.predictor.file.string()},
                 {"endpoint", config_.predictor.endpoint},
                 {"prompt_template", config_.predictor.prompt_template},
                 {"baseline_kind", static_cast<int>(config_.predictor.baseline.kind)},
                 {"baseline_k", config_.predictor.baseline.k}};
            break;
        case Stage::triage:
            j = {{"similarity_threshold", config_.similarity_threshold
                                              ? json(*config_.similarity_threshold)
                                              : json(nullptr)}};
            break;
        case Stage::judge:
            j = {{"judge", config_.judge.identity()}};
            break;
        case Stage::assemble:
        case Stage::evaluate:
            j = json::object();
            break;
    }
    return hash_hex(fnv1a64(j.dump()));
}

Pipeline::StagePlan Pipeline::plan(Stage stage) const {
    StagePlan p;
    p.inputs["config"] = stage_config_hash(stage);
    auto file_input = [&](const std::filesystem::path& path) {
        p.inputs[path.filename().string()] = hash_hex(hash_file(path.string()));
    };
    switch (stage) {
        case Stage::preprocess:
            require_artifact(config_.input_path, stage);
            file_input(config_.input_path);
            p.outputs = {corpus_path(), preprocess_report_path()};
            break;
        case Stage::embed:
            require_artifact(corpus_path(), Stage::preprocess);
            file_input(corpus_path());
            if (config_.embedding.kind == EmbeddingProvider::Kind::file_import) {
                require_artifact(config_.embedding.file, stage);
                file_input(config_.embedding.file);
            }
            p.outputs = {embeddings_path()};
            break;
        case Stage::sample:
            require_artifact(embeddings_path(), Stage::embed);
            file_input(embeddings_path());
            p.outputs = {partition_path()};
            break;
        case Stage::predict:
            require_artifact(corpus_path(), Stage::preprocess);
            require_artifact(partition_path(), Stage::sample);
            file_input(corpus_path());
            file_input(partition_path());
            if (config_.predictor.kind == PredictorBackend::Kind::embedding_baseline) {
                require_artifact(embeddings_path(), Stage::embed);
                file_input(embeddings_path());
            }
            if (config_.predictor.kind == PredictorBackend::Kind::file_import) {
                require_artifact(config_.predictor.file, stage);
                file_input(config_.predictor.file);
            }
            p.outputs = {predictions_path()};
            break;
        case Stage::triage:
            require_artifact(corpus_path(), Stage::preprocess);
            require_artifact(embeddings_path(), Stage::embed);
            require_artifact(partition_path(), Stage::sample);
            require_artifact(predictions_path(), Stage::predict);
            file_input(corpus_path());
            file_input(embeddings_path());
            file_input(partition_path());
            file_input(predictions_path());
            p.outputs = {triage_report_path()};
            break;
        case Stage::judge:
            require_artifact(corpus_path(), Stage::preprocess);
            require_artifact(triage_report_path(), Stage::triage);
            file_input(corpus_path());
            file_input(triage_report_path());
            if (config_.judge.kind == JudgeSettings::Kind::oracle) {
                require_artifact(config_.judge.truth_path, stage);
                file_input(config_.judge.truth_path);
            }
            p.outputs = {verdicts_path()};
            break;
        case Stage::assemble:
            require_artifact(corpus_path(), Stage::preprocess);
            require_artifact(partition_path(), Stage::sample);
            require_artifact(triage_report_path(), Stage::triage);
            require_artifact(verdicts_path(), Stage::judge);
            file_input(corpus_path());
            file_input(partition_path());
            file_input(triage_report_path());
            file_input(verdicts_path());
            p.outputs = {final_set_path(), final_provenance_path()};
            break;
        case Stage::evaluate:
            require_artifact(corpus_path(), Stage::preprocess);
            require_artifact(predictions_path(), Stage::predict);
            require_artifact(triage_report_path(), Stage::triage);
            file_input(corpus_path());
            file_input(predictions_path());
            file_input(triage_report_path());
            p.outputs = {eval_report_path(), eval_text_path()};
            break;
    }
    return p;
}

LabeledCorpus Pipeline::load_preprocessed() const {
    LoadOptions opts;
    opts.strict = true;
    LabeledCorpus corpus = load_corpus(corpus_path(), CorpusFormat::jsonl, opts);
    if (config_.vocabulary) {
        corpus.label_vocabulary = *config_.vocabulary;
        std::sort(corpus.label_vocabulary.begin(), corpus.label_vocabulary.end());
    }
    corpus.label_descriptions = config_.label_descriptions;
    return corpus;
}

void Pipeline::execute(Stage stage) {
    switch (stage) {
        case Stage::preprocess: {
            LoadOptions opts;
            opts.strict = config_.strict_parse;
            opts.vocabulary = config_.vocabulary;
            LabeledCorpus raw = load_corpus(config_.input_path, config_.input_format, opts);
            auto [clean, report] = preprocess(raw);
            if (clean.size() == 0) {
                std::fprintf(stderr, "warning: preprocessing removed every sample\n");
            }
            write_corpus(clean, corpus_path(), CorpusFormat::jsonl);
            write_text_atomic(preprocess_report_path(), report.to_json().dump(2) + "\n");
            break;
        }
        case Stage::embed: {
            LabeledCorpus corpus = load_preprocessed();
            EmbeddingMatrix m = embed_corpus(corpus, config_.embedding, state_dir_ / "cache");
            write_embeddings(m, embeddings_path());
            break;
        }
        case Stage::sample: {
            EmbeddingMatrix m = read_embeddings(embeddings_path());
            SamplerConfig sc;
            sc.k = config_.sampler_k;
            sc.seed = config_.effective_sampler_seed();
            sc.metric = config_.sampler_metric;
            Partition p = k_center_greedy(m, sc);
            write_text_atomic(partition_path(), p.to_json().dump(2) + "\n");
            break;
        }
        case Stage::predict: {
            LabeledCorpus corpus = load_preprocessed();
            EmbeddingMatrix m = read_embeddings(embeddings_path());
            Partition part = Partition::from_json(load_json_file(partition_path()), m);
            PredictContext ctx{corpus, part.unsampled, &m, &part.sampled};
            PredictorBackend backend = config_.predictor;
            if (backend.kind == PredictorBackend::Kind::http_inference) {
                backend.partial_path = state_dir_ / "predictions.partial.jsonl";
            }
            auto preds = predict_all(ctx, backend);
            write_predictions(preds, predictions_path());
            break;
        }
        case Stage::triage: {
            LabeledCorpus corpus = load_preprocessed();
            EmbeddingMatrix m = read_embeddings(embeddings_path());
            Partition part = Partition::from_json(load_json_file(partition_path()), m);
            PredictContext ctx{corpus, part.unsampled, nullptr, nullptr};
            PredictorBackend import;
            import.kind = PredictorBackend::Kind::file_import;
            import.file = predictions_path();
            auto preds = predict_all(ctx, import);
            std::vector<std::string> mispredicted;
            for (const auto& p : preds) {
                if (!p.correct) mispredicted.push_back(p.sample_id);
            }
            TriageOptions opts;
            opts.similarity_threshold = config_.similarity_threshold;
            auto records = triage_all(mispredicted, corpus, m, part, opts);
            write_text_atomic(triage_report_path(),
                              triage_report_json(records, corpus).dump(2) + "\n");
            break;
        }
        case Stage::judge: {
            LabeledCorpus corpus = load_preprocessed();
            auto records = triage_records_from_json(load_json_file(triage_report_path()));
            std::vector<std::string> to_judge;
            for (const auto& rec : records) {
                if (rec.category != Category::noisy) continue;
                to_judge.push_back(rec.qa_id);
                to_judge.push_back(rec.qb_id);
            }
            std::unique_ptr<JudgeClient> client;
            if (config_.judge.kind == JudgeSettings::Kind::oracle) {
                client = oracle_judge(read_truth_map(config_.judge.truth_path));
            } else {
                client = std::make_unique<HttpChatJudge>(config_.judge.endpoint,
                                                         config_.judge.model,
                                                         config_.judge.api_key_env,
                                                         config_.judge.timeout_s);
            }
            VerdictCache cache(state_dir_ / "cache" / "verdicts.jsonl");
            std::filesystem::create_directories(state_dir_ / "cache");
            AdjudicatorOptions opts;
            opts.concurrency = config_.judge.concurrency;
            opts.max_retries = config_.judge.max_retries;
            opts.backoff_ms = config_.judge.backoff_ms;
            Adjudicator adj(*client, corpus, &cache, opts);
            auto verdicts = adj.adjudicate_ids(to_judge);
            write_text_atomic(verdicts_path(), verdicts_to_json(verdicts).dump(2) + "\n");
            break;
        }
        case Stage::assemble: {
            LabeledCorpus corpus = load_preprocessed();
            EmbeddingMatrix m = read_embeddings(embeddings_path());
            Partition part = Partition::from_json(load_json_file(partition_path()), m);
            auto records = triage_records_from_json(load_json_file(triage_report_path()));
            auto verdicts = verdicts_from_json(load_json_file(verdicts_path()));
            FinalSet fs = assemble_final(part, records, verdicts);

            auto idx = corpus_index(corpus);
            std::vector<std::size_t> rows;
            rows.reserve(fs.included.size());
            for (const auto& [id, _] : fs.included) rows.push_back(idx.at(id));
            std::sort(rows.begin(), rows.end());
            LabeledCorpus final_corpus;
            final_corpus.label_vocabulary = corpus.label_vocabulary;
            for (std::size_t r : rows) final_corpus.samples.push_back(corpus.samples[r]);
            write_corpus(final_corpus, final_set_path(), config_.input_format);
            write_text_atomic(final_provenance_path(), fs.to_json().dump(2) + "\n");
            break;
        }
        case Stage::evaluate: {
            LabeledCorpus corpus = load_preprocessed();
            EmbeddingMatrix m = read_embeddings(embeddings_path());
            Partition part = Partition::from_json(load_json_file(partition_path()), m);
            PredictContext ctx{corpus, part.unsampled, nullptr, nullptr};
            PredictorBackend import;
            import.kind = PredictorBackend::Kind::file_import;
            import.file = predictions_path();
            auto preds = predict_all(ctx, import);
            EvalReport report = accuracy(preds);
            auto records = triage_records_from_json(load_json_file(triage_report_path()));
            CategoryShares shares = category_proportions(records, corpus.size());

            nlohmann::ordered_json j;
            j["predictions"] = report.to_json();
            j["categories"] = shares.to_json();
            write_text_atomic(eval_report_path(), j.dump(2) + "\n");
            write_text_atomic(eval_text_path(),
                              render_eval_table(report) + "\n" + render_category_table(shares));
            break;
        }
    }
}

StageResult Pipeline::run_stage(Stage stage) {
    StagePlan p = plan(stage);
    StageResult result;
    result.stage = stage;
    result.outputs = p.outputs;

    auto previous = manifest_.entry(stage);
    if (!force_ && previous && previous->inputs == p.inputs) {
        bool outputs_ok = true;
        bool tampered = false;
        for (const auto& out : p.outputs) {
            if (!std::filesystem::exists(out)) {
                outputs_ok = false;
                break;
            }
            auto it = previous->outputs.find(out.filename().string());
            if (it == previous->outputs.end() ||
                it->second != hash_hex(hash_file(out.string()))) {
                tampered = true;
                break;
            }
        }
        if (tampered) {
            throw ArtifactError("stage '" + to_string(stage) +
                                "' outputs do not match the manifest; rerun with --force to "
                                "overwrite");
        }
        if (outputs_ok) {
            result.skipped = true;
            return result;
        }
    }

    execute(stage);

    RunManifest::Entry entry;
    entry.inputs = p.inputs;
    for (const auto& out : p.outputs) {
        entry.outputs[out.filename().string()] = hash_hex(hash_file(out.string()));
    }
    manifest_.record(stage, std::move(entry));
    return result;
}

std::vector<StageResult> Pipeline::run_all() {
    std::vector<StageResult> results;
    for (Stage s : kStageOrder) results.push_back(run_stage(s));
    return results;
}

}  // namespace dqe
