#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>

#include "dqe/corpus.hpp"

using namespace dqe;

namespace {

std::filesystem::path temp_file(const std::string& name, const std::string& content) {
    auto dir = std::filesystem::temp_directory_path() / "dqe_corpus_tests";
    std::filesystem::create_directories(dir);
    auto path = dir / name;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
    return path;
}

LabeledCorpus corpus_of(std::vector<std::tuple<std::string, std::string, std::string>> rows) {
    LabeledCorpus c;
    std::set<std::string> labels;
    std::size_t i = 0;
    for (auto& [id, text, label] : rows) {
        c.samples.push_back({id, text, label, i++});
        if (!label.empty()) labels.insert(label);
    }
    c.label_vocabulary.assign(labels.begin(), labels.end());
    return c;
}

}  // namespace

TEST_CASE("load jsonl assigns vocabulary and preserves order") {
    auto path = temp_file("basic.jsonl",
                          R"({"id":"a","text":"good","label":"pos"})" "\n"
                          R"({"id":"b","text":"bad","label":"neg"})" "\n"
                          R"({"id":"c","text":"fine","label":"pos"})" "\n");
    auto corpus = load_corpus(path, CorpusFormat::jsonl);
    REQUIRE(corpus.size() == 3);
    CHECK(corpus.label_vocabulary == std::vector<std::string>{"neg", "pos"});
    CHECK(corpus.samples[0].id == "a");
    CHECK(corpus.samples[2].text == "fine");
    CHECK(corpus.samples[1].source_index == 1);
}

TEST_CASE("load jsonl auto-assigns ids from position") {
    auto path = temp_file("noid.jsonl",
                          R"({"text":"x","label":"a"})" "\n"
                          R"({"text":"y","label":"b"})" "\n");
    auto corpus = load_corpus(path, CorpusFormat::jsonl);
    CHECK(corpus.samples[0].id == "0");
    CHECK(corpus.samples[1].id == "1");
}

TEST_CASE("strict mode fails on a record missing the label, naming the line") {
    auto path = temp_file("missing.jsonl",
                          R"({"text":"x","label":"a"})" "\n"
                          R"({"text":"y"})" "\n");
    CHECK_THROWS_WITH_AS(load_corpus(path, CorpusFormat::jsonl),
                         doctest::Contains(":2:"), std::runtime_error);
    LoadOptions lenient;
    lenient.strict = false;
    auto corpus = load_corpus(path, CorpusFormat::jsonl, lenient);
    CHECK(corpus.size() == 1);
}

TEST_CASE("empty and unreadable files are errors") {
    auto path = temp_file("empty.jsonl", "");
    CHECK_THROWS_AS(load_corpus(path, CorpusFormat::jsonl), std::runtime_error);
    CHECK_THROWS_AS(load_corpus("/nonexistent/x.jsonl", CorpusFormat::jsonl),
                    std::runtime_error);
}

TEST_CASE("duplicate ids are rejected") {
    auto path = temp_file("dupid.jsonl",
                          R"({"id":"a","text":"x","label":"l"})" "\n"
                          R"({"id":"a","text":"y","label":"l"})" "\n");
    CHECK_THROWS_WITH_AS(load_corpus(path, CorpusFormat::jsonl),
                         doctest::Contains("duplicate id"), std::runtime_error);
}

TEST_CASE("csv parsing handles quotes and embedded separators") {
    auto path = temp_file("t.csv",
                          "id,text,label\n"
                          "a,\"hello, world\",pos\n"
                          "b,\"she said \"\"hi\"\"\",neg\n"
                          "c,plain,pos\n");
    auto corpus = load_corpus(path, CorpusFormat::csv);
    REQUIRE(corpus.size() == 3);
    CHECK(corpus.samples[0].text == "hello, world");
    CHECK(corpus.samples[1].text == "she said \"hi\"");
}

TEST_CASE("csv requires text and label columns") {
    auto path = temp_file("badhdr.csv", "a,b\n1,2\n");
    CHECK_THROWS_WITH_AS(load_corpus(path, CorpusFormat::csv),
                         doctest::Contains("header"), std::runtime_error);
}

TEST_CASE("tsv round-trips through write_corpus") {
    auto corpus = corpus_of({{"a", "some\ttext", "pos"}, {"b", "line\nbreak", "neg"}});
    auto path = temp_file("rt.tsv", "");
    write_corpus(corpus, path, CorpusFormat::tsv);
    auto again = load_corpus(path, CorpusFormat::tsv);
    REQUIRE(again.size() == 2);
    CHECK(again.samples[0].text == "some\ttext");
    CHECK(again.samples[1].text == "line\nbreak");
    CHECK(again.samples[1].label == "neg");
}

TEST_CASE("explicit vocabulary is honored") {
    auto path = temp_file("vocab.jsonl",
                          R"({"text":"x","label":"a"})" "\n"
                          R"({"text":"y","label":"zz"})" "\n");
    LoadOptions opts;
    opts.vocabulary = std::vector<std::string>{"a", "b"};
    CHECK_THROWS_WITH_AS(load_corpus(path, CorpusFormat::jsonl, opts),
                         doctest::Contains("vocabulary"), std::runtime_error);
    opts.strict = false;
    auto corpus = load_corpus(path, CorpusFormat::jsonl, opts);
    CHECK(corpus.size() == 1);
    CHECK(corpus.label_vocabulary == std::vector<std::string>{"a", "b"});
}

TEST_CASE("drop_missing removes blank text or label") {
    auto c = corpus_of({{"1", "good", "pos"}, {"2", "", "pos"}, {"3", "bad", ""}});
    auto [out, report] = drop_missing(c);
    REQUIRE(out.size() == 1);
    CHECK(out.samples[0].id == "1");
    REQUIRE(report.removed_missing.size() == 2);
    CHECK(report.removed_missing[0].id == "2");
    CHECK(report.removed_missing[0].reason == "missing text");
    CHECK(report.removed_missing[1].id == "3");
    CHECK(report.removed_missing[1].reason == "missing label");
    CHECK(report.output_count == report.input_count - report.total_removed());
}

TEST_CASE("drop_missing treats whitespace-only text as missing") {
    auto c = corpus_of({{"1", "  \t ", "pos"}, {"2", "ok", "pos"}});
    auto [out, report] = drop_missing(c);
    CHECK(out.size() == 1);
    CHECK(out.samples[0].id == "2");
}

TEST_CASE("drop_missing is identity on clean corpora") {
    auto c = corpus_of({{"1", "a", "x"}, {"2", "b", "y"}});
    auto [out, report] = drop_missing(c);
    CHECK(out.size() == 2);
    CHECK(report.removed_missing.empty());
}

TEST_CASE("drop_missing can empty a corpus") {
    auto c = corpus_of({{"1", "a", ""}, {"2", "b", ""}});
    auto [out, report] = drop_missing(c);
    CHECK(out.size() == 0);
    CHECK(report.removed_missing.size() == 2);
}

TEST_CASE("dedup_exact collapses identical text with identical label") {
    auto c = corpus_of({{"1", "great movie", "pos"}, {"2", "great movie", "pos"}});
    auto [out, report] = dedup_exact(c);
    REQUIRE(out.size() == 1);
    CHECK(out.samples[0].id == "1");
    REQUIRE(report.removed_duplicates.size() == 1);
    CHECK(report.removed_duplicates[0].kept_id == "1");
    CHECK(report.removed_duplicates[0].dropped_ids == std::vector<std::string>{"2"});
}

TEST_CASE("dedup_exact normalizes with trim") {
    auto c = corpus_of({{"1", " great movie ", "pos"}, {"2", "great movie", "pos"}});
    auto [out, report] = dedup_exact(c);
    REQUIRE(out.size() == 1);
    CHECK(out.samples[0].id == "1");
    CHECK(out.samples[0].text == " great movie ");  // surviving text untouched
}

TEST_CASE("dedup_exact normalizes to NFC") {
    // e + combining acute vs precomposed é
    auto c = corpus_of({{"1", "caf\x65\xcc\x81", "pos"}, {"2", "caf\xc3\xa9", "pos"}});
    auto [out, report] = dedup_exact(c);
    CHECK(out.size() == 1);
}

TEST_CASE("dedup_exact is case sensitive") {
    auto c = corpus_of({{"1", "Great", "pos"}, {"2", "great", "pos"}});
    auto [out, report] = dedup_exact(c);
    CHECK(out.size() == 2);
}

TEST_CASE("dedup_exact leaves conflicting-label groups untouched") {
    auto c = corpus_of({{"1", "fine", "pos"}, {"2", "fine", "neg"}, {"3", "fine", "pos"}});
    auto [out, report] = dedup_exact(c);
    CHECK(out.size() == 3);
    CHECK(report.removed_duplicates.empty());
}

TEST_CASE("dedup_exact is identity on distinct texts") {
    auto c = corpus_of({{"1", "a", "x"}, {"2", "b", "x"}});
    auto [out, report] = dedup_exact(c);
    CHECK(out.size() == 2);
}

TEST_CASE("resolve_label_conflicts removes whole conflicting groups") {
    auto c = corpus_of({{"1", "fine", "pos"}, {"2", "fine", "neg"}, {"3", "bad", "neg"}});
    auto [out, report] = resolve_label_conflicts(c);
    REQUIRE(out.size() == 1);
    CHECK(out.samples[0].id == "3");
    REQUIRE(report.removed_conflicts.size() == 1);
    CHECK(report.removed_conflicts[0].members.size() == 2);
}

TEST_CASE("resolve_label_conflicts handles three-way conflicts") {
    auto c = corpus_of({{"1", "t", "pos"}, {"2", "t", "neg"}, {"3", "t", "neutral"}});
    auto [out, report] = resolve_label_conflicts(c);
    CHECK(out.size() == 0);
    REQUIRE(report.removed_conflicts.size() == 1);
    CHECK(report.removed_conflicts[0].members.size() == 3);
}

TEST_CASE("resolve_label_conflicts is identity without conflicts") {
    auto c = corpus_of({{"1", "a", "x"}, {"2", "b", "y"}});
    auto [out, report] = resolve_label_conflicts(c);
    CHECK(out.size() == 2);
    CHECK(report.removed_conflicts.empty());
}

TEST_CASE("preprocess chain: accounting, order stability, idempotence") {
    auto c = corpus_of({{"1", "alpha", "x"},
                        {"2", "", "x"},
                        {"3", "beta", "y"},
                        {"4", "alpha", "x"},
                        {"5", "gamma", "x"},
                        {"6", "gamma", "y"},
                        {"7", "delta", ""},
                        {"8", "omega", "y"}});
    auto [clean, report] = preprocess(c);

    CHECK(report.input_count == 8);
    CHECK(report.output_count == clean.size());
    CHECK(report.input_count == report.output_count + report.total_removed());

    // order stability: survivors keep input relative order
    std::vector<std::string> ids;
    for (const auto& s : clean.samples) ids.push_back(s.id);
    CHECK(ids == std::vector<std::string>{"1", "3", "8"});

    // surviving samples are unmodified
    CHECK(clean.samples[0].text == "alpha");
    CHECK(clean.samples[0].label == "x");

    // idempotence
    auto [clean2, report2] = preprocess(clean);
    CHECK(clean2.size() == clean.size());
    CHECK(report2.total_removed() == 0);
    for (std::size_t i = 0; i < clean.size(); ++i) {
        CHECK(clean2.samples[i].id == clean.samples[i].id);
        CHECK(clean2.samples[i].text == clean.samples[i].text);
    }
}

TEST_CASE("preprocess report serializes") {
    auto c = corpus_of({{"1", "a", "x"}, {"2", "a", "x"}, {"3", "", "x"}});
    auto [clean, report] = preprocess(c);
    auto j = report.to_json();
    CHECK(j["input_count"] == 3);
    CHECK(j["output_count"] == 1);
    CHECK(j["removed_missing"].size() == 1);
    CHECK(j["removed_duplicates"].size() == 1);
}

TEST_CASE("corpus content hash is order and content sensitive") {
    auto a = corpus_of({{"1", "x", "l"}, {"2", "y", "l"}});
    auto b = corpus_of({{"2", "y", "l"}, {"1", "x", "l"}});
    auto c = corpus_of({{"1", "x", "l"}, {"2", "y!", "l"}});
    CHECK(corpus_content_hash(a) != corpus_content_hash(b));
    CHECK(corpus_content_hash(a) != corpus_content_hash(c));
    CHECK(corpus_content_hash(a) == corpus_content_hash(a));
}
