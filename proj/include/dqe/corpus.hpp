#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

namespace dqe {

struct Sample {
    std::string id;
    std::string text;
    std::string label;
    std::size_t source_index = 0;
};

struct LabeledCorpus {
    std::vector<Sample> samples;
    std::vector<std::string> label_vocabulary;  // sorted, unique
    std::map<std::string, std::string> label_descriptions;

    std::size_t size() const { return samples.size(); }
    const Sample* find(std::string_view id) const;
    std::optional<std::size_t> index_of(std::string_view id) const;
};

enum class CorpusFormat { jsonl, csv, tsv };

CorpusFormat corpus_format_from_string(std::string_view s);
std::string to_string(CorpusFormat f);

struct LoadOptions {
    bool strict = true;  // fail on malformed records instead of skipping
    std::optional<std::vector<std::string>> vocabulary;
};

// Loads a labeled dataset. jsonl: one object per line with fields `text`,
// `label` and optional `id`; csv/tsv: header row naming columns text,label
// and optionally id. Ids default to the record's ordinal position.
LabeledCorpus load_corpus(const std::filesystem::path& path, CorpusFormat format,
                          const LoadOptions& options = {});
void write_corpus(const LabeledCorpus& corpus, const std::filesystem::path& path,
                  CorpusFormat format);

struct RemovedRecord {
    std::string id;
    std::string reason;
};

struct DuplicateGroup {
    std::string kept_id;
    std::vector<std::string> dropped_ids;
};

struct ConflictMember {
    std::string id;
    std::string label;
};

struct ConflictGroup {
    std::string normalized_text;
    std::vector<ConflictMember> members;
};

struct PreprocessReport {
    std::vector<RemovedRecord> removed_missing;
    std::vector<DuplicateGroup> removed_duplicates;
    std::vector<ConflictGroup> removed_conflicts;
    std::size_t input_count = 0;
    std::size_t output_count = 0;

    std::size_t total_removed() const;
    nlohmann::ordered_json to_json() const;
};

// Text key used for duplicate / conflict detection: Unicode NFC plus
// leading/trailing whitespace trim. No case folding.
std::string normalize_text_key(std::string_view text);

std::pair<LabeledCorpus, PreprocessReport> drop_missing(const LabeledCorpus& corpus);
std::pair<LabeledCorpus, PreprocessReport> dedup_exact(const LabeledCorpus& corpus);
std::pair<LabeledCorpus, PreprocessReport> resolve_label_conflicts(const LabeledCorpus& corpus);

// drop_missing, dedup_exact, resolve_label_conflicts in sequence with a
// merged report.
std::pair<LabeledCorpus, PreprocessReport> preprocess(const LabeledCorpus& corpus);

// Order-sensitive content hash over (id, text, label) triples.
std::uint64_t corpus_content_hash(const LabeledCorpus& corpus);

// id -> position map for call sites doing many lookups.
std::map<std::string, std::size_t, std::less<>> corpus_index(const LabeledCorpus& corpus);

}  // namespace dqe
