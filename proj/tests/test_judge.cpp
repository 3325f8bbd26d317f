#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <atomic>
#include <filesystem>

#include "dqe/errors.hpp"
#include "dqe/judge.hpp"

using namespace dqe;

namespace {

LabeledCorpus sentiment_corpus() {
    LabeledCorpus c;
    c.samples = {{"s0", "a fine film", "pos", 0}, {"s1", "dreadful", "neg", 1}};
    c.label_vocabulary = {"neg", "pos"};
    c.label_descriptions = {{"pos", "the review speaks favourably"},
                            {"neg", "the review speaks unfavourably"}};
    return c;
}

class ScriptedJudge : public JudgeClient {
public:
    explicit ScriptedJudge(std::string answer) : answer_(std::move(answer)) {}
    std::string identity() const override { return "scripted"; }
    std::string respond(const Sample&, const std::string&) override {
        ++calls;
        return answer_;
    }
    std::atomic<int> calls{0};

private:
    std::string answer_;
};

class FailingJudge : public JudgeClient {
public:
    std::string identity() const override { return "failing"; }
    std::string respond(const Sample&, const std::string&) override {
        ++calls;
        throw ServiceError("connection refused");
    }
    std::atomic<int> calls{0};
};

std::filesystem::path temp_path(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "dqe_judge_tests";
    std::filesystem::create_directories(dir);
    auto p = dir / name;
    std::filesystem::remove(p);
    return p;
}

}  // namespace

TEST_CASE("prompt carries text, label, descriptions and answer tokens") {
    auto c = sentiment_corpus();
    auto prompt = build_judgment_prompt(c.samples[0], c.label_vocabulary,
                                        c.label_descriptions);
    CHECK(prompt.find("a fine film") != std::string::npos);
    CHECK(prompt.find("Assigned label: pos") != std::string::npos);
    CHECK(prompt.find("the review speaks favourably") != std::string::npos);
    CHECK(prompt.find("the review speaks unfavourably") != std::string::npos);
    CHECK(prompt.find("CORRECT") != std::string::npos);
    CHECK(prompt.find("INCORRECT") != std::string::npos);
    CHECK(prompt.find("UNSURE") != std::string::npos);
}

TEST_CASE("prompt falls back to label tokens without descriptions") {
    auto c = sentiment_corpus();
    auto prompt = build_judgment_prompt(c.samples[0], c.label_vocabulary, {});
    CHECK(prompt.find("- neg: neg") != std::string::npos);
    CHECK(prompt.find("- pos: pos") != std::string::npos);
}

TEST_CASE("prompt construction is deterministic") {
    auto c = sentiment_corpus();
    auto a = build_judgment_prompt(c.samples[0], c.label_vocabulary, c.label_descriptions);
    auto b = build_judgment_prompt(c.samples[0], c.label_vocabulary, c.label_descriptions);
    CHECK(a == b);
}

TEST_CASE("parse_verdict is total") {
    CHECK(parse_verdict("CORRECT") == Decision::label_correct);
    CHECK(parse_verdict("CORRECT.") == Decision::label_correct);
    CHECK(parse_verdict(" incorrect\n") == Decision::label_incorrect);
    CHECK(parse_verdict("Unsure") == Decision::undetermined);
    CHECK(parse_verdict("The label could be either.") == Decision::undetermined);
    CHECK(parse_verdict("") == Decision::undetermined);
    CHECK(parse_verdict("correct, I think, maybe") == Decision::undetermined);
}

TEST_CASE("oracle judge answers from planted truth") {
    auto c = sentiment_corpus();
    auto client = oracle_judge({{"s0", "pos"}, {"s1", "pos"}});
    Adjudicator adj(*client, c);
    CHECK(adj.adjudicate(c.samples[0]).decision == Decision::label_correct);
    CHECK(adj.adjudicate(c.samples[1]).decision == Decision::label_incorrect);
}

TEST_CASE("oracle judge errors on unknown ids") {
    auto c = sentiment_corpus();
    auto client = oracle_judge({{"s0", "pos"}});
    Adjudicator adj(*client, c);
    CHECK_THROWS_AS(adj.adjudicate(c.samples[1]), std::out_of_range);
}

TEST_CASE("adjudicate_pair judges each sample independently") {
    auto c = sentiment_corpus();
    ScriptedJudge client("CORRECT");
    Adjudicator adj(client, c);
    auto [va, vb] = adj.adjudicate_pair(c.samples[0], c.samples[1]);
    CHECK(va.sample_id == "s0");
    CHECK(vb.sample_id == "s1");
    CHECK(client.calls == 2);
}

TEST_CASE("transport failure after retries yields undetermined with the error recorded") {
    auto c = sentiment_corpus();
    FailingJudge client;
    AdjudicatorOptions opts;
    opts.max_retries = 2;
    opts.backoff_ms = 1;
    Adjudicator adj(client, c, nullptr, opts);
    auto v = adj.adjudicate(c.samples[0]);
    CHECK(v.decision == Decision::undetermined);
    CHECK(v.error.find("connection refused") != std::string::npos);
    CHECK(client.calls == 3);  // initial + 2 retries
}

TEST_CASE("cache hits avoid network calls and survive restarts") {
    auto c = sentiment_corpus();
    auto cache_path = temp_path("verdicts.jsonl");
    {
        ScriptedJudge client("CORRECT");
        VerdictCache cache(cache_path);
        Adjudicator adj(client, c, &cache);
        auto v1 = adj.adjudicate(c.samples[0]);
        CHECK_FALSE(v1.cached);
        auto v2 = adj.adjudicate(c.samples[0]);
        CHECK(v2.cached);
        CHECK(v2.decision == Decision::label_correct);
        CHECK(client.calls == 1);
    }
    {
        // fresh cache object backed by the same file: still no new calls
        ScriptedJudge client("INCORRECT");
        VerdictCache cache(cache_path);
        Adjudicator adj(client, c, &cache);
        auto v = adj.adjudicate(c.samples[0]);
        CHECK(v.cached);
        CHECK(v.decision == Decision::label_correct);  // cached answer, not the new one
        CHECK(client.calls == 0);
    }
}

TEST_CASE("cache keys distinguish text, label, vocabulary and judge") {
    Sample a{"x", "text", "pos", 0};
    Sample b{"x", "text", "neg", 0};
    Sample c2{"x", "other text", "pos", 0};
    std::vector<std::string> vocab{"neg", "pos"};
    std::vector<std::string> vocab2{"neg", "pos", "mid"};
    auto k = VerdictCache::key_of(a, vocab, "j1");
    CHECK(k != VerdictCache::key_of(b, vocab, "j1"));
    CHECK(k != VerdictCache::key_of(c2, vocab, "j1"));
    CHECK(k != VerdictCache::key_of(a, vocab2, "j1"));
    CHECK(k != VerdictCache::key_of(a, vocab, "j2"));
    CHECK(k == VerdictCache::key_of(a, vocab, "j1"));
    // vocabulary order does not matter
    CHECK(k == VerdictCache::key_of(a, {"pos", "neg"}, "j1"));
}

TEST_CASE("adjudicate_ids covers distinct ids concurrently and deterministically") {
    LabeledCorpus c;
    std::map<std::string, std::string> truth;
    for (int i = 0; i < 40; ++i) {
        std::string id = "t" + std::to_string(i);
        c.samples.push_back({id, "text " + id, i % 3 ? "a" : "b", c.samples.size()});
        truth[id] = i % 2 ? "a" : "b";
    }
    c.label_vocabulary = {"a", "b"};
    auto client = oracle_judge(truth);
    AdjudicatorOptions opts;
    opts.concurrency = 4;
    Adjudicator adj(*client, c, nullptr, opts);
    std::vector<std::string> ids;
    for (const auto& s : c.samples) {
        ids.push_back(s.id);
        ids.push_back(s.id);  // duplicates collapse
    }
    auto verdicts = adj.adjudicate_ids(ids);
    CHECK(verdicts.size() == 40);
    for (const auto& [id, v] : verdicts) {
        auto expected = c.samples[*c.index_of(id)].label == truth[id]
                            ? Decision::label_correct
                            : Decision::label_incorrect;
        CHECK(v.decision == expected);
    }
}

TEST_CASE("verdict json round-trip") {
    std::map<std::string, Verdict> verdicts;
    Verdict v;
    v.sample_id = "s0";
    v.decision = Decision::label_incorrect;
    v.judge_raw = "INCORRECT.";
    v.judge_identity = "oracle";
    verdicts["s0"] = v;
    auto j = verdicts_to_json(verdicts);
    auto back = verdicts_from_json(j);
    REQUIRE(back.count("s0") == 1);
    CHECK(back["s0"].decision == Decision::label_incorrect);
    CHECK(back["s0"].judge_raw == "INCORRECT.");
}
