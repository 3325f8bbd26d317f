#include "dqe/judge.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <fstream>
#include <set>
#include <thread>

#include "dqe/errors.hpp"
#include "dqe/hash.hpp"
#include "dqe/unicode.hpp"
#include "http_util.hpp"

namespace dqe {
namespace {

using nlohmann::json;

std::string fold_token(std::string_view raw) {
    std::string s = trim_whitespace(raw);
    while (!s.empty()) {
        char c = s.back();
        if (c == '.' || c == ',' || c == ';' || c == ':' || c == '!' || c == '?' ||
            c == '"' || c == '\'') {
            s.pop_back();
        } else {
            break;
        }
    }
    s = trim_whitespace(s);
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

}  // namespace

std::string to_string(Decision d) {
    switch (d) {
        case Decision::label_correct: return "label_correct";
        case Decision::label_incorrect: return "label_incorrect";
        case Decision::undetermined: return "undetermined";
    }
    return "undetermined";
}

Decision decision_from_string(std::string_view s) {
    if (s == "label_correct") return Decision::label_correct;
    if (s == "label_incorrect") return Decision::label_incorrect;
    if (s == "undetermined") return Decision::undetermined;
    throw std::invalid_argument("unknown decision: " + std::string(s));
}

std::string build_judgment_prompt(const Sample& sample, const std::vector<std::string>& vocab,
                                  const std::map<std::string, std::string>& descriptions) {
    std::vector<std::string> labels = vocab;
    std::sort(labels.begin(), labels.end());
    std::string prompt;
    prompt += "You are reviewing the label assigned to a text classification sample.\n\n";
    prompt += "Text:\n" + sample.text + "\n\n";
    prompt += "Assigned label: " + sample.label + "\n\n";
    prompt += "Available labels:\n";
    for (const auto& label : labels) {
        auto it = descriptions.find(label);
        const std::string& desc = it != descriptions.end() && !it->second.empty()
                                      ? it->second
                                      : label;
        prompt += "- " + label + ": " + desc + "\n";
    }
    prompt += "\nDecide whether the assigned label is correct for the text. ";
    prompt += "Answer with exactly one word: CORRECT if the label is right, ";
    prompt += "INCORRECT if it is wrong, or UNSURE if you cannot determine.";
    return prompt;
}

Decision parse_verdict(std::string_view raw) {
    std::string token = fold_token(raw);
    if (token == "correct") return Decision::label_correct;
    if (token == "incorrect") return Decision::label_incorrect;
    return Decision::undetermined;
}

HttpChatJudge::HttpChatJudge(std::string endpoint, std::string model, std::string api_key_env,
                             int timeout_s)
    : endpoint_(std::move(endpoint)),
      model_(std::move(model)),
      api_key_env_(std::move(api_key_env)),
      timeout_s_(timeout_s) {}

std::string HttpChatJudge::identity() const { return model_ + "@" + endpoint_; }

std::string HttpChatJudge::respond(const Sample&, const std::string& prompt) {
    json req;
    req["model"] = model_;
    req["messages"] = json::array({json{{"role", "user"}, {"content", prompt}}});
    std::string token = http::env_or_empty(api_key_env_);
    // Retries are owned by the adjudicator; a single attempt here.
    std::string body = http::post_json_with_retry(endpoint_, req.dump(), token,
                                                  /*max_retries=*/0, /*backoff_ms=*/0,
                                                  timeout_s_);
    json res = json::parse(body, nullptr, false);
    if (res.is_discarded() || !res.contains("choices") || !res["choices"].is_array() ||
        res["choices"].empty() || !res["choices"][0].contains("message") ||
        !res["choices"][0]["message"].contains("content")) {
        throw ServiceError(endpoint_ + ": malformed chat completion response");
    }
    return res["choices"][0]["message"]["content"].get<std::string>();
}

OracleJudge::OracleJudge(std::map<std::string, std::string> truth) : truth_(std::move(truth)) {}

std::string OracleJudge::identity() const { return "oracle"; }

std::string OracleJudge::respond(const Sample& sample, const std::string&) {
    auto it = truth_.find(sample.id);
    if (it == truth_.end()) {
        throw std::out_of_range("oracle judge has no truth for id " + sample.id);
    }
    return sample.label == it->second ? "CORRECT" : "INCORRECT";
}

std::unique_ptr<JudgeClient> oracle_judge(std::map<std::string, std::string> truth) {
    return std::make_unique<OracleJudge>(std::move(truth));
}

VerdictCache::VerdictCache(const std::filesystem::path& file) : path_(file) {
    std::ifstream f(path_, std::ios::binary);
    if (!f) return;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        json obj = json::parse(line, nullptr, false);
        if (obj.is_discarded() || !obj.contains("key")) continue;
        Verdict v;
        v.sample_id = obj.value("sample_id", "");
        v.decision = decision_from_string(obj.value("decision", "undetermined"));
        v.judge_raw = obj.value("judge_raw", "");
        v.judge_identity = obj.value("judge_identity", "");
        v.error = obj.value("error", "");
        entries_[std::stoull(obj["key"].get<std::string>(), nullptr, 16)] = std::move(v);
    }
}

std::optional<Verdict> VerdictCache::lookup(std::uint64_t key) const {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    Verdict v = it->second;
    v.cached = true;
    return v;
}

void VerdictCache::store(std::uint64_t key, const Verdict& v) {
    std::lock_guard<std::mutex> lock(mu_);
    if (!entries_.emplace(key, v).second) return;
    if (path_.empty()) return;
    std::ofstream f(path_, std::ios::binary | std::ios::app);
    json obj;
    obj["key"] = hash_hex(key);
    obj["sample_id"] = v.sample_id;
    obj["decision"] = to_string(v.decision);
    obj["judge_raw"] = v.judge_raw;
    obj["judge_identity"] = v.judge_identity;
    obj["error"] = v.error;
    f << obj.dump() << "\n";
}

std::uint64_t VerdictCache::key_of(const Sample& sample, const std::vector<std::string>& vocab,
                                   const std::string& judge_identity) {
    std::vector<std::string> sorted = vocab;
    std::sort(sorted.begin(), sorted.end());
    std::uint64_t h = fnv1a64(sample.text);
    h = fnv1a64("\x1f", h);
    h = fnv1a64(sample.label, h);
    for (const auto& l : sorted) {
        h = fnv1a64("\x1f", h);
        h = fnv1a64(l, h);
    }
    h = fnv1a64("\x1f", h);
    h = fnv1a64(judge_identity, h);
    return h;
}

Adjudicator::Adjudicator(JudgeClient& client, const LabeledCorpus& corpus, VerdictCache* cache,
                         AdjudicatorOptions options)
    : client_(client), corpus_(corpus), cache_(cache), options_(options) {}

Verdict Adjudicator::adjudicate(const Sample& sample) {
    std::uint64_t key = VerdictCache::key_of(sample, corpus_.label_vocabulary,
                                             client_.identity());
    if (cache_) {
        if (auto hit = cache_->lookup(key)) {
            hit->sample_id = sample.id;
            return *hit;
        }
    }
    Verdict v;
    v.sample_id = sample.id;
    v.judge_identity = client_.identity();
    std::string prompt = build_judgment_prompt(sample, corpus_.label_vocabulary,
                                               corpus_.label_descriptions);
    for (int attempt = 0; attempt <= options_.max_retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(
                std::chrono::milliseconds(options_.backoff_ms << (attempt - 1)));
        }
        try {
            v.judge_raw = client_.respond(sample, prompt);
            v.decision = parse_verdict(v.judge_raw);
            v.error.clear();
            break;
        } catch (const ServiceError& e) {
            // Fail-safe: exhausted retries leave the verdict undetermined,
            // which downstream treats as discard.
            v.decision = Decision::undetermined;
            v.error = e.what();
        }
    }
    if (cache_) cache_->store(key, v);
    return v;
}

std::pair<Verdict, Verdict> Adjudicator::adjudicate_pair(const Sample& qa, const Sample& qb) {
    return {adjudicate(qa), adjudicate(qb)};
}

std::map<std::string, Verdict> Adjudicator::adjudicate_ids(const std::vector<std::string>& ids) {
    std::vector<std::string> unique = ids;
    std::sort(unique.begin(), unique.end());
    unique.erase(std::unique(unique.begin(), unique.end()), unique.end());

    auto idx = corpus_index(corpus_);
    std::vector<const Sample*> samples;
    samples.reserve(unique.size());
    for (const auto& id : unique) {
        auto it = idx.find(id);
        if (it == idx.end()) throw ArtifactError("judge target not in corpus: " + id);
        samples.push_back(&corpus_.samples[it->second]);
    }

    std::vector<Verdict> results(unique.size());
    std::atomic<std::size_t> cursor{0};
    std::size_t workers = std::max<std::size_t>(1, std::min(options_.concurrency, unique.size()));
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < workers; ++w) {
        threads.emplace_back([&] {
            while (true) {
                std::size_t i = cursor.fetch_add(1);
                if (i >= unique.size()) return;
                results[i] = adjudicate(*samples[i]);
            }
        });
    }
    for (auto& t : threads) t.join();

    std::map<std::string, Verdict> out;
    for (std::size_t i = 0; i < unique.size(); ++i) out.emplace(unique[i], std::move(results[i]));
    return out;
}

nlohmann::ordered_json verdicts_to_json(const std::map<std::string, Verdict>& verdicts) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& [id, v] : verdicts) {
        arr.push_back({{"sample_id", id},
                       {"decision", to_string(v.decision)},
                       {"judge_raw", v.judge_raw},
                       {"judge_identity", v.judge_identity},
                       {"cached", v.cached},
                       {"error", v.error}});
    }
    return arr;
}

std::map<std::string, Verdict> verdicts_from_json(const nlohmann::json& j) {
    std::map<std::string, Verdict> out;
    for (const auto& item : j) {
        Verdict v;
        v.sample_id = item.at("sample_id").get<std::string>();
        v.decision = decision_from_string(item.at("decision").get<std::string>());
        v.judge_raw = item.value("judge_raw", "");
        v.judge_identity = item.value("judge_identity", "");
        v.cached = item.value("cached", false);
        v.error = item.value("error", "");
        out.emplace(v.sample_id, std::move(v));
    }
    return out;
}

}  // namespace dqe
