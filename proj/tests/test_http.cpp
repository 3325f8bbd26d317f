#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include "dqe/embedding.hpp"
#include "dqe/errors.hpp"
#include "dqe/judge.hpp"
#include "dqe/predictor.hpp"
#include "httplib.h"
#include "json.hpp"

using namespace dqe;
using nlohmann::json;

namespace {

struct TestServer {
    httplib::Server server;
    int port = 0;
    std::thread thread;

    void start() {
        port = server.bind_to_any_port("127.0.0.1");
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }
    ~TestServer() {
        server.stop();
        if (thread.joinable()) thread.join();
    }
    std::string url(const std::string& path) const {
        return "http://127.0.0.1:" + std::to_string(port) + path;
    }
};

LabeledCorpus three_corpus() {
    LabeledCorpus c;
    c.samples = {{"s0", "first text", "pos", 0},
                 {"s1", "second text", "neg", 1},
                 {"s2", "third text", "pos", 2}};
    c.label_vocabulary = {"neg", "pos"};
    return c;
}

std::filesystem::path fresh_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "dqe_http_tests" / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

// deterministic fake embedding derived from text length
std::vector<double> fake_vector(const std::string& text) {
    return {1.0 + static_cast<double>(text.size()), 1.0, 0.5};
}

}  // namespace

TEST_CASE("http embedding provider: batching, order and auth header") {
    TestServer ts;
    std::atomic<int> requests{0};
    std::string seen_auth;
    ts.server.Post("/embed", [&](const httplib::Request& req, httplib::Response& res) {
        ++requests;
        if (req.has_header("Authorization")) seen_auth = req.get_header_value("Authorization");
        auto texts = json::parse(req.body);
        json out = json::array();
        for (const auto& t : texts) out.push_back(fake_vector(t.get<std::string>()));
        res.set_content(out.dump(), "application/json");
    });
    ts.start();

    setenv("DQE_TEST_EMBED_KEY", "sekret", 1);
    auto corpus = three_corpus();
    EmbeddingProvider provider;
    provider.kind = EmbeddingProvider::Kind::http_service;
    provider.endpoint = ts.url("/embed");
    provider.api_key_env = "DQE_TEST_EMBED_KEY";
    provider.batch_size = 2;  // 3 texts -> 2 batches
    auto m = embed_corpus(corpus, provider);

    CHECK(requests == 2);
    CHECK(seen_auth == "Bearer sekret");
    REQUIRE(m.rows() == 3);
    CHECK(m.ids == std::vector<std::string>{"s0", "s1", "s2"});
    CHECK(m.dim == 3);
    // rows normalized but proportional to the fake vectors
    for (std::size_t i = 0; i < 3; ++i) {
        auto fake = fake_vector(corpus.samples[i].text);
        double ratio = m.row(i)[0] / fake[0];
        CHECK(m.row(i)[1] == doctest::Approx(fake[1] * ratio).epsilon(1e-5));
    }
}

TEST_CASE("http embedding provider caches per text") {
    TestServer ts;
    std::atomic<int> texts_served{0};
    ts.server.Post("/embed", [&](const httplib::Request& req, httplib::Response& res) {
        auto texts = json::parse(req.body);
        texts_served += static_cast<int>(texts.size());
        json out = json::array();
        for (const auto& t : texts) out.push_back(fake_vector(t.get<std::string>()));
        res.set_content(out.dump(), "application/json");
    });
    ts.start();

    auto cache_dir = fresh_dir("embed_cache");
    auto corpus = three_corpus();
    EmbeddingProvider provider;
    provider.kind = EmbeddingProvider::Kind::http_service;
    provider.endpoint = ts.url("/embed");
    provider.api_key_env = "";
    auto m1 = embed_corpus(corpus, provider, cache_dir);
    CHECK(texts_served == 3);

    // one text edited: only that text goes back to the service
    corpus.samples[1].text = "second text, edited";
    auto m2 = embed_corpus(corpus, provider, cache_dir);
    CHECK(texts_served == 4);
    CHECK(m2.rows() == 3);
}

TEST_CASE("http embedding provider retries transient failures") {
    TestServer ts;
    std::atomic<int> attempts{0};
    ts.server.Post("/embed", [&](const httplib::Request& req, httplib::Response& res) {
        if (++attempts <= 2) {
            res.status = 503;
            return;
        }
        auto texts = json::parse(req.body);
        json out = json::array();
        for (const auto& t : texts) out.push_back(fake_vector(t.get<std::string>()));
        res.set_content(out.dump(), "application/json");
    });
    ts.start();

    auto corpus = three_corpus();
    EmbeddingProvider provider;
    provider.kind = EmbeddingProvider::Kind::http_service;
    provider.endpoint = ts.url("/embed");
    provider.api_key_env = "";
    provider.batch_size = 16;
    provider.max_retries = 3;
    provider.backoff_ms = 1;
    auto m = embed_corpus(corpus, provider);
    CHECK(m.rows() == 3);
    CHECK(attempts == 3);
}

TEST_CASE("http embedding provider fails after bounded retries") {
    TestServer ts;
    std::atomic<int> attempts{0};
    ts.server.Post("/embed", [&](const httplib::Request&, httplib::Response& res) {
        ++attempts;
        res.status = 500;
    });
    ts.start();

    auto corpus = three_corpus();
    EmbeddingProvider provider;
    provider.kind = EmbeddingProvider::Kind::http_service;
    provider.endpoint = ts.url("/embed");
    provider.api_key_env = "";
    provider.max_retries = 2;
    provider.backoff_ms = 1;
    CHECK_THROWS_AS(embed_corpus(corpus, provider), ServiceError);
    CHECK(attempts == 3);
}

TEST_CASE("http embedding provider rejects inconsistent dimensions") {
    TestServer ts;
    ts.server.Post("/embed", [&](const httplib::Request& req, httplib::Response& res) {
        auto texts = json::parse(req.body);
        json out = json::array();
        bool first = true;
        for (const auto& t : texts) {
            (void)t;
            out.push_back(first ? json::array({1.0, 0.0}) : json::array({1.0, 0.0, 0.0}));
            first = false;
        }
        res.set_content(out.dump(), "application/json");
    });
    ts.start();

    auto corpus = three_corpus();
    EmbeddingProvider provider;
    provider.kind = EmbeddingProvider::Kind::http_service;
    provider.endpoint = ts.url("/embed");
    provider.api_key_env = "";
    provider.batch_size = 16;
    CHECK_THROWS_AS(embed_corpus(corpus, provider), ServiceError);
}

TEST_CASE("http inference renders the prompt template and joins answers") {
    TestServer ts;
    std::vector<std::string> prompts;
    std::mutex mu;
    ts.server.Post("/complete", [&](const httplib::Request& req, httplib::Response& res) {
        auto body = json::parse(req.body);
        std::string prompt = body.at("prompt").get<std::string>();
        {
            std::lock_guard<std::mutex> lock(mu);
            prompts.push_back(prompt);
        }
        // answer pos iff the text mentions "first"
        json out;
        out["completion"] = prompt.find("first") != std::string::npos ? "pos" : "neg";
        res.set_content(out.dump(), "application/json");
    });
    ts.start();

    auto corpus = three_corpus();
    PredictorBackend backend;
    backend.kind = PredictorBackend::Kind::http_inference;
    backend.endpoint = ts.url("/complete");
    backend.api_key_env = "";
    backend.prompt_template = "Labels: {labels}. Text: {text}";
    backend.concurrency = 2;
    PredictContext ctx{corpus, {"s0", "s1", "s2"}, nullptr, nullptr};
    auto preds = predict_all(ctx, backend);
    REQUIRE(preds.size() == 3);
    CHECK(preds[0].parsed_label == "pos");
    CHECK(preds[0].correct);
    CHECK(preds[1].parsed_label == "neg");
    CHECK(preds[2].parsed_label == "neg");  // gold pos -> mispredicted
    CHECK_FALSE(preds[2].correct);

    REQUIRE(prompts.size() == 3);
    for (const auto& p : prompts) {
        CHECK(p.find("Labels: neg, pos.") != std::string::npos);
        CHECK(p.find("Text: ") != std::string::npos);
    }
}

TEST_CASE("http inference resumes from the partial file") {
    TestServer ts;
    std::atomic<int> served{0};
    ts.server.Post("/complete", [&](const httplib::Request&, httplib::Response& res) {
        ++served;
        res.set_content(R"({"completion":"pos"})", "application/json");
    });
    ts.start();

    auto dir = fresh_dir("resume");
    auto partial = dir / "partial.jsonl";
    {
        std::ofstream f(partial, std::ios::binary);
        f << R"({"id":"s0","raw_output":"neg"})" << "\n";  // already done
    }
    auto corpus = three_corpus();
    PredictorBackend backend;
    backend.kind = PredictorBackend::Kind::http_inference;
    backend.endpoint = ts.url("/complete");
    backend.api_key_env = "";
    backend.partial_path = partial;
    PredictContext ctx{corpus, {"s0", "s1", "s2"}, nullptr, nullptr};
    auto preds = predict_all(ctx, backend);
    CHECK(served == 2);  // s0 reused
    CHECK(preds[0].raw_output == "neg");
    CHECK(preds[1].raw_output == "pos");

    // the partial file now covers everything: a rerun makes no calls
    auto again = predict_all(ctx, backend);
    CHECK(served == 2);
    CHECK(again.size() == 3);
}

TEST_CASE("http inference failure after retries raises ServiceError") {
    TestServer ts;
    ts.server.Post("/complete", [&](const httplib::Request&, httplib::Response& res) {
        res.status = 502;
    });
    ts.start();

    auto corpus = three_corpus();
    PredictorBackend backend;
    backend.kind = PredictorBackend::Kind::http_inference;
    backend.endpoint = ts.url("/complete");
    backend.api_key_env = "";
    backend.max_retries = 1;
    backend.backoff_ms = 1;
    PredictContext ctx{corpus, {"s0"}, nullptr, nullptr};
    CHECK_THROWS_AS(predict_all(ctx, backend), ServiceError);
}

TEST_CASE("chat judge speaks the chat-completion contract") {
    TestServer ts;
    std::string seen_model;
    std::string seen_content;
    ts.server.Post("/v1/chat/completions",
                   [&](const httplib::Request& req, httplib::Response& res) {
                       auto body = json::parse(req.body);
                       seen_model = body.at("model").get<std::string>();
                       seen_content =
                           body.at("messages").at(0).at("content").get<std::string>();
                       json out = {{"choices",
                                    json::array({{{"message",
                                                   {{"content", "INCORRECT."}}}}})}};
                       res.set_content(out.dump(), "application/json");
                   });
    ts.start();

    auto corpus = three_corpus();
    HttpChatJudge judge(ts.url("/v1/chat/completions"), "test-model", "", 5);
    Adjudicator adj(judge, corpus);
    auto v = adj.adjudicate(corpus.samples[0]);
    CHECK(v.decision == Decision::label_incorrect);
    CHECK(v.judge_raw == "INCORRECT.");
    CHECK(seen_model == "test-model");
    CHECK(seen_content.find("first text") != std::string::npos);
    CHECK(seen_content.find("Assigned label: pos") != std::string::npos);
}

TEST_CASE("chat judge transport failure becomes undetermined after retries") {
    auto corpus = three_corpus();
    // port 1 refuses connections
    HttpChatJudge judge("http://127.0.0.1:1/v1/chat/completions", "m", "", 1);
    AdjudicatorOptions opts;
    opts.max_retries = 1;
    opts.backoff_ms = 1;
    Adjudicator adj(judge, corpus, nullptr, opts);
    auto v = adj.adjudicate(corpus.samples[0]);
    CHECK(v.decision == Decision::undetermined);
    CHECK_FALSE(v.error.empty());
}

TEST_CASE("malformed chat response becomes undetermined") {
    TestServer ts;
    ts.server.Post("/chat", [&](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"({"nope": true})", "application/json");
    });
    ts.start();

    auto corpus = three_corpus();
    HttpChatJudge judge(ts.url("/chat"), "m", "", 5);
    AdjudicatorOptions opts;
    opts.max_retries = 0;
    Adjudicator adj(judge, corpus, nullptr, opts);
    auto v = adj.adjudicate(corpus.samples[0]);
    CHECK(v.decision == Decision::undetermined);
}
