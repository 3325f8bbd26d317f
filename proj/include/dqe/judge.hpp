#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "dqe/corpus.hpp"
#include "json.hpp"

namespace dqe {

enum class Decision { label_correct, label_incorrect, undetermined };

std::string to_string(Decision d);
Decision decision_from_string(std::string_view s);

struct Verdict {
    std::string sample_id;
    Decision decision = Decision::undetermined;
    std::string judge_raw;       // verbatim response
    std::string judge_identity;  // model/endpoint tag
    bool cached = false;
    std::string error;  // transport failure detail, if any
};

// Deterministic prompt: the text, its assigned label, every vocabulary
// label with its description (falling back to the bare token), and the
// constrained CORRECT / INCORRECT / UNSURE answer format.
std::string build_judgment_prompt(const Sample& sample, const std::vector<std::string>& vocab,
                                  const std::map<std::string, std::string>& descriptions);

// Total: trim, case-fold and strip trailing punctuation, then match the
// three answer tokens exactly; anything else is undetermined.
Decision parse_verdict(std::string_view raw);

class JudgeClient {
public:
    virtual ~JudgeClient() = default;
    virtual std::string identity() const = 0;
    // Raw response text for one sample. Throws ServiceError on transport
    // failure (retries are the adjudicator's job).
    virtual std::string respond(const Sample& sample, const std::string& prompt) = 0;
};

// Chat-completion HTTP judge: POST {model, messages:[{role, content}]} ->
// {choices:[{message:{content}}]}.
class HttpChatJudge : public JudgeClient {
public:
    HttpChatJudge(std::string endpoint, std::string model,
                  std::string api_key_env = "DQE_JUDGE_API_KEY", int timeout_s = 30);
    std::string identity() const override;
    std::string respond(const Sample& sample, const std::string& prompt) override;

private:
    std::string endpoint_;
    std::string model_;
    std::string api_key_env_;
    int timeout_s_;
};

// Test double with planted ground truth: answers CORRECT iff the stored
// label equals the true label. Throws if an id is missing from the truth
// map.
class OracleJudge : public JudgeClient {
public:
    explicit OracleJudge(std::map<std::string, std::string> truth);
    std::string identity() const override;
    std::string respond(const Sample& sample, const std::string& prompt) override;

private:
    std::map<std::string, std::string> truth_;
};

std::unique_ptr<JudgeClient> oracle_judge(std::map<std::string, std::string> truth);

// Content-addressed verdict cache persisted as append-only jsonl; safe for
// concurrent lookups and stores.
class VerdictCache {
public:
    VerdictCache() = default;
    explicit VerdictCache(const std::filesystem::path& file);

    bool enabled() const { return !path_.empty(); }
    std::optional<Verdict> lookup(std::uint64_t key) const;
    void store(std::uint64_t key, const Verdict& v);

    static std::uint64_t key_of(const Sample& sample, const std::vector<std::string>& vocab,
                                const std::string& judge_identity);

private:
    std::filesystem::path path_;
    std::unordered_map<std::uint64_t, Verdict> entries_;
    mutable std::mutex mu_;
};

struct AdjudicatorOptions {
    std::size_t concurrency = 4;
    int max_retries = 3;
    int backoff_ms = 250;
};

// Owns prompting, retry, parsing and caching around a JudgeClient.
class Adjudicator {
public:
    Adjudicator(JudgeClient& client, const LabeledCorpus& corpus, VerdictCache* cache = nullptr,
                AdjudicatorOptions options = {});

    // Transport failure after the retry budget yields an undetermined
    // verdict with the error recorded, never an exception.
    Verdict adjudicate(const Sample& sample);
    std::pair<Verdict, Verdict> adjudicate_pair(const Sample& qa, const Sample& qb);
    // Verdicts for every distinct id, queried with bounded concurrency.
    std::map<std::string, Verdict> adjudicate_ids(const std::vector<std::string>& ids);

private:
    JudgeClient& client_;
    const LabeledCorpus& corpus_;
    VerdictCache* cache_;
    AdjudicatorOptions options_;
};

nlohmann::ordered_json verdicts_to_json(const std::map<std::string, Verdict>& verdicts);
std::map<std::string, Verdict> verdicts_from_json(const nlohmann::json& j);

}  // namespace dqe
