#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dqe/coreset.hpp"
#include "dqe/corpus.hpp"
#include "dqe/embedding.hpp"
#include "dqe/judge.hpp"
#include "json.hpp"

namespace dqe {

enum class Category { uncovered, difficult, noisy };
enum class QbLocation { sampled, unsampled };

std::string to_string(Category c);
std::string to_string(QbLocation l);
Category category_from_string(std::string_view s);
QbLocation qb_location_from_string(std::string_view s);

struct TriageRecord {
    std::string qa_id;  // the mispredicted unsampled sample
    std::string qb_id;  // its most similar other sample
    double similarity = 0.0;
    QbLocation qb_location = QbLocation::unsampled;
    Category category = Category::uncovered;
};

// Three-way rule over a mispredicted sample and its nearest neighbour:
// same label + neighbour unsampled -> uncovered; same label + neighbour
// sampled -> difficult; different labels -> noisy.
Category categorize(const std::string& qa_label, const std::string& qb_label,
                    QbLocation qb_location);

struct TriageOptions {
    // Off by default: top-1 recall with no similarity threshold. When set,
    // a q_a whose best similarity falls below the threshold is routed
    // directly to uncovered.
    std::optional<double> similarity_threshold;
};

// One record per mispredicted id. The neighbour search runs over the whole
// corpus except q_a itself, regardless of partition side.
std::vector<TriageRecord> triage_all(const std::vector<std::string>& mispredicted,
                                     const LabeledCorpus& corpus, const EmbeddingMatrix& emb,
                                     const Partition& partition,
                                     const TriageOptions& options = {});

enum class Provenance { greedy_sampled, uncovered_added, difficult_added };
enum class RemovalReason { noisy_removed_sampled, noisy_discarded_unsampled };

std::string to_string(Provenance p);
std::string to_string(RemovalReason r);

struct FinalSet {
    std::vector<std::pair<std::string, Provenance>> included;
    std::vector<std::pair<std::string, RemovalReason>> removed;
    std::size_t sampled_count = 0;
    std::size_t removed_from_sampled = 0;
    std::size_t uncovered_added = 0;
    std::size_t difficult_added = 0;

    std::vector<std::string> ids() const;
    nlohmann::ordered_json to_json() const;
};

// Merges the partition with the triage outcome under the judge's verdicts:
// uncovered and difficult q_a join the final set; a noisy q_a is kept (and
// re-tagged difficult) only when the judge confirms its label, otherwise it
// is discarded; a noisy q_b in the sampled set is removed unless confirmed
// correct; a noisy q_b in the unsampled set judged incorrect never enters.
// Every noisy pair member must have a verdict.
FinalSet assemble_final(const Partition& partition, const std::vector<TriageRecord>& records,
                        const std::map<std::string, Verdict>& verdicts);

nlohmann::ordered_json triage_report_json(const std::vector<TriageRecord>& records,
                                          const LabeledCorpus& corpus);
std::vector<TriageRecord> triage_records_from_json(const nlohmann::json& j);

}  // namespace dqe
