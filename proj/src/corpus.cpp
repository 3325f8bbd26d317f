#include "dqe/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "dqe/hash.hpp"
#include "dqe/unicode.hpp"

namespace dqe {
namespace {

using nlohmann::json;

[[noreturn]] void parse_fail(const std::filesystem::path& path, std::size_t line,
                             const std::string& what) {
    throw std::runtime_error(path.string() + ":" + std::to_string(line) + ": " + what);
}

struct RawRecord {
    std::optional<std::string> id;
    std::string text;
    std::string label;
    std::size_t line = 0;
};

std::vector<RawRecord> parse_jsonl(const std::filesystem::path& path, std::istream& in,
                                   bool strict) {
    std::vector<RawRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (is_blank(line)) continue;
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::parse_error& e) {
            if (strict) parse_fail(path, line_no, std::string("invalid JSON: ") + e.what());
            continue;
        }
        if (!obj.is_object() || !obj.contains("text") || !obj.contains("label") ||
            !obj["text"].is_string() || !obj["label"].is_string()) {
            if (strict) parse_fail(path, line_no, "record must carry string fields text and label");
            continue;
        }
        RawRecord r;
        r.text = obj["text"].get<std::string>();
        r.label = obj["label"].get<std::string>();
        if (obj.contains("id")) {
            if (!obj["id"].is_string()) {
                if (strict) parse_fail(path, line_no, "id must be a string");
                continue;
            }
            r.id = obj["id"].get<std::string>();
        }
        r.line = line_no;
        records.push_back(std::move(r));
    }
    return records;
}

// RFC-4180 style parser shared by csv and tsv; handles quoted fields with
// embedded separators, quotes and newlines.
std::vector<std::vector<std::string>> parse_delimited(std::istream& in, char sep) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool in_quotes = false;
    bool row_started = false;
    char c;
    while (in.get(c)) {
        if (in_quotes) {
            if (c == '"') {
                if (in.peek() == '"') {
                    in.get();
                    field.push_back('"');
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(c);
            }
            continue;
        }
        if (c == '"' && field.empty()) {
            in_quotes = true;
            row_started = true;
        } else if (c == sep) {
            row.push_back(std::move(field));
            field.clear();
            row_started = true;
        } else if (c == '\n') {
            if (row_started || !field.empty()) {
                row.push_back(std::move(field));
                field.clear();
                rows.push_back(std::move(row));
                row.clear();
            }
            row_started = false;
        } else if (c == '\r') {
            // swallowed; handled by the following \n
        } else {
            field.push_back(c);
            row_started = true;
        }
    }
    if (row_started || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<RawRecord> parse_table(const std::filesystem::path& path, std::istream& in,
                                   char sep, bool strict) {
    auto rows = parse_delimited(in, sep);
    if (rows.empty()) throw std::runtime_error(path.string() + ": empty file");
    const auto& header = rows.front();
    auto col_of = [&](std::string_view name) -> std::optional<std::size_t> {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) return i;
        }
        return std::nullopt;
    };
    auto text_col = col_of("text");
    auto label_col = col_of("label");
    auto id_col = col_of("id");
    if (!text_col || !label_col) {
        throw std::runtime_error(path.string() + ": header must name columns text and label");
    }
    std::vector<RawRecord> records;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& row = rows[i];
        std::size_t need = std::max(*text_col, *label_col);
        if (id_col) need = std::max(need, *id_col);
        if (row.size() <= need) {
            if (strict) parse_fail(path, i + 1, "row has too few columns");
            continue;
        }
        RawRecord r;
        r.text = row[*text_col];
        r.label = row[*label_col];
        if (id_col && !row[*id_col].empty()) r.id = row[*id_col];
        r.line = i + 1;
        records.push_back(std::move(r));
    }
    return records;
}

std::string csv_quote(const std::string& s, char sep) {
    bool needs = s.find_first_of(std::string{sep, '"', '\n', '\r'}) != std::string::npos;
    if (!needs) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out.push_back('"');
    return out;
}

}  // namespace

const Sample* LabeledCorpus::find(std::string_view id) const {
    for (const auto& s : samples) {
        if (s.id == id) return &s;
    }
    return nullptr;
}

std::optional<std::size_t> LabeledCorpus::index_of(std::string_view id) const {
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (samples[i].id == id) return i;
    }
    return std::nullopt;
}

CorpusFormat corpus_format_from_string(std::string_view s) {
    if (s == "jsonl") return CorpusFormat::jsonl;
    if (s == "csv") return CorpusFormat::csv;
    if (s == "tsv") return CorpusFormat::tsv;
    throw std::invalid_argument("unknown corpus format: " + std::string(s));
}

std::string to_string(CorpusFormat f) {
    switch (f) {
        case CorpusFormat::jsonl: return "jsonl";
        case CorpusFormat::csv: return "csv";
        case CorpusFormat::tsv: return "tsv";
    }
    return "jsonl";
}

LabeledCorpus load_corpus(const std::filesystem::path& path, CorpusFormat format,
                          const LoadOptions& options) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open corpus file: " + path.string());

    std::vector<RawRecord> records;
    switch (format) {
        case CorpusFormat::jsonl: records = parse_jsonl(path, in, options.strict); break;
        case CorpusFormat::csv: records = parse_table(path, in, ',', options.strict); break;
        case CorpusFormat::tsv: records = parse_table(path, in, '\t', options.strict); break;
    }
    if (records.empty()) throw std::runtime_error(path.string() + ": no records");

    LabeledCorpus corpus;
    corpus.samples.reserve(records.size());
    std::unordered_set<std::string> seen_ids;
    std::set<std::string> labels;
    std::optional<std::set<std::string>> allowed;
    if (options.vocabulary) {
        allowed.emplace(options.vocabulary->begin(), options.vocabulary->end());
    }
    std::size_t ordinal = 0;
    for (auto& r : records) {
        Sample s;
        s.source_index = ordinal;
        s.id = r.id ? *r.id : std::to_string(ordinal);
        s.text = std::move(r.text);
        s.label = std::move(r.label);
        if (!seen_ids.insert(s.id).second) {
            parse_fail(path, r.line, "duplicate id: " + s.id);
        }
        if (allowed && !s.label.empty() && !allowed->count(s.label)) {
            if (options.strict) {
                parse_fail(path, r.line, "label not in supplied vocabulary: " + s.label);
            }
            continue;
        }
        if (!s.label.empty()) labels.insert(s.label);
        corpus.samples.push_back(std::move(s));
        ++ordinal;
    }
    if (options.vocabulary) {
        corpus.label_vocabulary = *options.vocabulary;
        std::sort(corpus.label_vocabulary.begin(), corpus.label_vocabulary.end());
        corpus.label_vocabulary.erase(
            std::unique(corpus.label_vocabulary.begin(), corpus.label_vocabulary.end()),
            corpus.label_vocabulary.end());
    } else {
        corpus.label_vocabulary.assign(labels.begin(), labels.end());
    }
    return corpus;
}

void write_corpus(const LabeledCorpus& corpus, const std::filesystem::path& path,
                  CorpusFormat format) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write corpus file: " + path.string());
    if (format == CorpusFormat::jsonl) {
        for (const auto& s : corpus.samples) {
            json obj;
            obj["id"] = s.id;
            obj["text"] = s.text;
            obj["label"] = s.label;
            out << obj.dump() << "\n";
        }
    } else {
        char sep = format == CorpusFormat::csv ? ',' : '\t';
        out << "id" << sep << "text" << sep << "label\n";
        for (const auto& s : corpus.samples) {
            out << csv_quote(s.id, sep) << sep << csv_quote(s.text, sep) << sep
                << csv_quote(s.label, sep) << "\n";
        }
    }
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::size_t PreprocessReport::total_removed() const {
    std::size_t n = removed_missing.size();
    for (const auto& g : removed_duplicates) n += g.dropped_ids.size();
    for (const auto& g : removed_conflicts) n += g.members.size();
    return n;
}

nlohmann::ordered_json PreprocessReport::to_json() const {
    nlohmann::ordered_json j;
    j["input_count"] = input_count;
    j["output_count"] = output_count;
    j["removed_missing"] = nlohmann::ordered_json::array();
    for (const auto& r : removed_missing) {
        j["removed_missing"].push_back({{"id", r.id}, {"reason", r.reason}});
    }
    j["removed_duplicates"] = nlohmann::ordered_json::array();
    for (const auto& g : removed_duplicates) {
        j["removed_duplicates"].push_back({{"kept_id", g.kept_id}, {"dropped_ids", g.dropped_ids}});
    }
    j["removed_conflicts"] = nlohmann::ordered_json::array();
    for (const auto& g : removed_conflicts) {
        nlohmann::ordered_json members = nlohmann::ordered_json::array();
        for (const auto& m : g.members) members.push_back({{"id", m.id}, {"label", m.label}});
        j["removed_conflicts"].push_back({{"text", g.normalized_text}, {"members", members}});
    }
    return j;
}

std::string normalize_text_key(std::string_view text) {
    return nfc(trim_whitespace(text));
}

std::pair<LabeledCorpus, PreprocessReport> drop_missing(const LabeledCorpus& corpus) {
    LabeledCorpus out;
    out.label_vocabulary = corpus.label_vocabulary;
    out.label_descriptions = corpus.label_descriptions;
    PreprocessReport report;
    report.input_count = corpus.size();
    for (const auto& s : corpus.samples) {
        bool no_text = is_blank(s.text);
        bool no_label = is_blank(s.label);
        if (no_text && no_label) {
            report.removed_missing.push_back({s.id, "missing text and label"});
        } else if (no_text) {
            report.removed_missing.push_back({s.id, "missing text"});
        } else if (no_label) {
            report.removed_missing.push_back({s.id, "missing label"});
        } else {
            out.samples.push_back(s);
        }
    }
    report.output_count = out.size();
    return {std::move(out), std::move(report)};
}

std::pair<LabeledCorpus, PreprocessReport> dedup_exact(const LabeledCorpus& corpus) {
    PreprocessReport report;
    report.input_count = corpus.size();

    std::unordered_map<std::string, std::vector<std::size_t>> groups;
    std::vector<std::string> keys(corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        keys[i] = normalize_text_key(corpus.samples[i].text);
        groups[keys[i]].push_back(i);
    }

    // A group collapses to its first occurrence only when every member
    // carries the same label; mixed-label groups are left for
    // resolve_label_conflicts.
    std::vector<bool> drop(corpus.size(), false);
    std::unordered_map<std::size_t, DuplicateGroup> dup_by_kept;
    std::vector<std::size_t> kept_order;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const auto& members = groups[keys[i]];
        if (members.size() < 2 || members.front() != i) continue;
        bool uniform = std::all_of(members.begin(), members.end(), [&](std::size_t m) {
            return corpus.samples[m].label == corpus.samples[i].label;
        });
        if (!uniform) continue;
        DuplicateGroup g;
        g.kept_id = corpus.samples[i].id;
        for (std::size_t k = 1; k < members.size(); ++k) {
            drop[members[k]] = true;
            g.dropped_ids.push_back(corpus.samples[members[k]].id);
        }
        dup_by_kept.emplace(i, std::move(g));
        kept_order.push_back(i);
    }

    LabeledCorpus out;
    out.label_vocabulary = corpus.label_vocabulary;
    out.label_descriptions = corpus.label_descriptions;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        if (!drop[i]) out.samples.push_back(corpus.samples[i]);
    }
    for (std::size_t i : kept_order) report.removed_duplicates.push_back(dup_by_kept[i]);
    report.output_count = out.size();
    return {std::move(out), std::move(report)};
}

std::pair<LabeledCorpus, PreprocessReport> resolve_label_conflicts(const LabeledCorpus& corpus) {
    PreprocessReport report;
    report.input_count = corpus.size();

    std::unordered_map<std::string, std::vector<std::size_t>> groups;
    std::vector<std::string> keys(corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        keys[i] = normalize_text_key(corpus.samples[i].text);
        groups[keys[i]].push_back(i);
    }

    std::vector<bool> drop(corpus.size(), false);
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const auto& members = groups[keys[i]];
        if (members.size() < 2 || members.front() != i) continue;
        bool conflicting = std::any_of(members.begin(), members.end(), [&](std::size_t m) {
            return corpus.samples[m].label != corpus.samples[i].label;
        });
        if (!conflicting) continue;
        ConflictGroup g;
        g.normalized_text = keys[i];
        for (std::size_t m : members) {
            drop[m] = true;
            g.members.push_back({corpus.samples[m].id, corpus.samples[m].label});
        }
        report.removed_conflicts.push_back(std::move(g));
    }

    LabeledCorpus out;
    out.label_vocabulary = corpus.label_vocabulary;
    out.label_descriptions = corpus.label_descriptions;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        if (!drop[i]) out.samples.push_back(corpus.samples[i]);
    }
    report.output_count = out.size();
    return {std::move(out), std::move(report)};
}

std::pair<LabeledCorpus, PreprocessReport> preprocess(const LabeledCorpus& corpus) {
    auto [c1, r1] = drop_missing(corpus);
    auto [c2, r2] = dedup_exact(c1);
    auto [c3, r3] = resolve_label_conflicts(c2);
    PreprocessReport merged;
    merged.input_count = r1.input_count;
    merged.output_count = r3.output_count;
    merged.removed_missing = std::move(r1.removed_missing);
    merged.removed_duplicates = std::move(r2.removed_duplicates);
    merged.removed_conflicts = std::move(r3.removed_conflicts);
    return {std::move(c3), std::move(merged)};
}

std::map<std::string, std::size_t, std::less<>> corpus_index(const LabeledCorpus& corpus) {
    std::map<std::string, std::size_t, std::less<>> idx;
    for (std::size_t i = 0; i < corpus.samples.size(); ++i) idx.emplace(corpus.samples[i].id, i);
    return idx;
}

std::uint64_t corpus_content_hash(const LabeledCorpus& corpus) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& s : corpus.samples) {
        h = fnv1a64(s.id, h);
        h = fnv1a64("\x1f", h);
        h = fnv1a64(s.text, h);
        h = fnv1a64("\x1f", h);
        h = fnv1a64(s.label, h);
        h = fnv1a64("\x1e", h);
    }
    return h;
}

}  // namespace dqe
