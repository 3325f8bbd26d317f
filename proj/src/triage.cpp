#include "dqe/triage.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>
#include <unordered_set>

#include "dqe/errors.hpp"
#include "dqe/kernels.hpp"

namespace dqe {

std::string to_string(Category c) {
    switch (c) {
        case Category::uncovered: return "uncovered";
        case Category::difficult: return "difficult";
        case Category::noisy: return "noisy";
    }
    return "uncovered";
}

std::string to_string(QbLocation l) {
    return l == QbLocation::sampled ? "sampled" : "unsampled";
}

Category category_from_string(std::string_view s) {
    if (s == "uncovered") return Category::uncovered;
    if (s == "difficult") return Category::difficult;
    if (s == "noisy") return Category::noisy;
    throw std::invalid_argument("unknown category: " + std::string(s));
}

QbLocation qb_location_from_string(std::string_view s) {
    if (s == "sampled") return QbLocation::sampled;
    if (s == "unsampled") return QbLocation::unsampled;
    throw std::invalid_argument("unknown location: " + std::string(s));
}

Category categorize(const std::string& qa_label, const std::string& qb_label,
                    QbLocation qb_location) {
    if (qa_label != qb_label) return Category::noisy;
    return qb_location == QbLocation::unsampled ? Category::uncovered : Category::difficult;
}

std::vector<TriageRecord> triage_all(const std::vector<std::string>& mispredicted,
                                     const LabeledCorpus& corpus, const EmbeddingMatrix& emb,
                                     const Partition& partition, const TriageOptions& options) {
    if (corpus.size() < 2) throw std::invalid_argument("triage_all: corpus smaller than 2");

    auto idx = corpus_index(corpus);
    auto sampled = partition.sampled_set();
    std::set<std::string, std::less<>> unsampled_set(partition.unsampled.begin(),
                                                     partition.unsampled.end());
    std::vector<std::size_t> qa_rows(mispredicted.size());
    for (std::size_t i = 0; i < mispredicted.size(); ++i) {
        const auto& id = mispredicted[i];
        if (!unsampled_set.count(id)) {
            throw std::invalid_argument("mispredicted id not in unsampled set: " + id);
        }
        auto r = emb.row_of(id);
        if (!r || !idx.count(id)) {
            throw std::invalid_argument("mispredicted id lacks embedding or corpus row: " + id);
        }
        qa_rows[i] = *r;
    }

    std::vector<TriageRecord> records(mispredicted.size());
#pragma omp parallel for schedule(dynamic, 8)
    for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(mispredicted.size()); ++ii) {
        std::size_t i = static_cast<std::size_t>(ii);
        const std::string& qa_id = mispredicted[i];
        std::vector<std::uint8_t> mask(emb.rows(), 0);
        mask[qa_rows[i]] = 1;
        auto best = kernels::max_similarity_scan(emb.values.data(), emb.rows(), emb.dim,
                                                 emb.row(qa_rows[i]), mask.data());
        const std::string& qb_id = emb.ids[best.index];
        TriageRecord rec;
        rec.qa_id = qa_id;
        rec.qb_id = qb_id;
        rec.similarity = best.value;
        rec.qb_location = sampled.count(qb_id) ? QbLocation::sampled : QbLocation::unsampled;
        const std::string& qa_label = corpus.samples[idx.at(qa_id)].label;
        const std::string& qb_label = corpus.samples[idx.at(qb_id)].label;
        if (options.similarity_threshold && best.value < *options.similarity_threshold) {
            rec.category = Category::uncovered;
        } else {
            rec.category = categorize(qa_label, qb_label, rec.qb_location);
        }
        records[i] = std::move(rec);
    }
    return records;
}

std::string to_string(Provenance p) {
    switch (p) {
        case Provenance::greedy_sampled: return "greedy_sampled";
        case Provenance::uncovered_added: return "uncovered_added";
        case Provenance::difficult_added: return "difficult_added";
    }
    return "greedy_sampled";
}

std::string to_string(RemovalReason r) {
    return r == RemovalReason::noisy_removed_sampled ? "noisy_removed_sampled"
                                                     : "noisy_discarded_unsampled";
}

std::vector<std::string> FinalSet::ids() const {
    std::vector<std::string> out;
    out.reserve(included.size());
    for (const auto& [id, _] : included) out.push_back(id);
    return out;
}

nlohmann::ordered_json FinalSet::to_json() const {
    nlohmann::ordered_json j;
    j["counts"] = {{"final", included.size()},
                   {"sampled", sampled_count},
                   {"removed_from_sampled", removed_from_sampled},
                   {"uncovered_added", uncovered_added},
                   {"difficult_added", difficult_added}};
    j["included"] = nlohmann::ordered_json::array();
    for (const auto& [id, prov] : included) {
        j["included"].push_back({{"id", id}, {"provenance", to_string(prov)}});
    }
    j["removed"] = nlohmann::ordered_json::array();
    for (const auto& [id, reason] : removed) {
        j["removed"].push_back({{"id", id}, {"reason", to_string(reason)}});
    }
    return j;
}

FinalSet assemble_final(const Partition& partition, const std::vector<TriageRecord>& records,
                        const std::map<std::string, Verdict>& verdicts) {
    auto require_verdict = [&](const std::string& id) -> const Verdict& {
        auto it = verdicts.find(id);
        if (it == verdicts.end()) {
            throw ArtifactError("missing verdict for noisy pair member: " + id);
        }
        return it->second;
    };

    // Noisy pairs first: they decide the discard/removal sets.
    std::set<std::string> removed_sampled;
    std::set<std::string> vetoed_unsampled;  // q_b in unsampled judged incorrect
    std::vector<std::string> kept_noisy_qa;  // confirmed-correct q_a, re-tagged difficult
    std::set<std::string> discarded_qa;
    for (const auto& rec : records) {
        if (rec.category != Category::noisy) continue;
        const Verdict& va = require_verdict(rec.qa_id);
        const Verdict& vb = require_verdict(rec.qb_id);
        if (va.decision == Decision::label_correct) {
            kept_noisy_qa.push_back(rec.qa_id);
        } else {
            discarded_qa.insert(rec.qa_id);
        }
        if (rec.qb_location == QbLocation::sampled) {
            if (vb.decision != Decision::label_correct) removed_sampled.insert(rec.qb_id);
        } else {
            if (vb.decision == Decision::label_incorrect) vetoed_unsampled.insert(rec.qb_id);
        }
    }

    FinalSet fs;
    fs.sampled_count = partition.sampled.size();

    std::vector<std::string> uncovered_ids;
    std::vector<std::string> difficult_ids;
    for (const auto& rec : records) {
        if (rec.category == Category::noisy) continue;
        if (vetoed_unsampled.count(rec.qa_id)) continue;
        if (rec.category == Category::uncovered) {
            uncovered_ids.push_back(rec.qa_id);
        } else {
            difficult_ids.push_back(rec.qa_id);
        }
    }
    // A confirmed-correct q_a cannot be vetoed: the veto requires an
    // incorrect verdict and verdicts are per id.
    for (const auto& id : kept_noisy_qa) difficult_ids.push_back(id);

    for (const auto& id : partition.sampled) {
        if (removed_sampled.count(id)) {
            fs.removed.emplace_back(id, RemovalReason::noisy_removed_sampled);
        } else {
            fs.included.emplace_back(id, Provenance::greedy_sampled);
        }
    }
    for (const auto& id : uncovered_ids) {
        fs.included.emplace_back(id, Provenance::uncovered_added);
    }
    for (const auto& id : difficult_ids) {
        fs.included.emplace_back(id, Provenance::difficult_added);
    }
    for (const auto& id : discarded_qa) {
        fs.removed.emplace_back(id, RemovalReason::noisy_discarded_unsampled);
    }
    for (const auto& id : vetoed_unsampled) {
        if (!discarded_qa.count(id)) {
            fs.removed.emplace_back(id, RemovalReason::noisy_discarded_unsampled);
        }
    }

    fs.removed_from_sampled = removed_sampled.size();
    fs.uncovered_added = uncovered_ids.size();
    fs.difficult_added = difficult_ids.size();

    // Accounting identity, recounted from the component sets.
    std::size_t expected = fs.sampled_count - fs.removed_from_sampled + fs.uncovered_added +
                           fs.difficult_added;
    if (expected != fs.included.size()) {
        throw std::logic_error("final set accounting identity violated");
    }
    std::unordered_set<std::string> distinct;
    for (const auto& [id, _] : fs.included) {
        if (!distinct.insert(id).second) {
            throw std::logic_error("final set contains duplicate id: " + id);
        }
    }
    return fs;
}

nlohmann::ordered_json triage_report_json(const std::vector<TriageRecord>& records,
                                          const LabeledCorpus& corpus) {
    auto idx = corpus_index(corpus);
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& rec : records) {
        const Sample& qa = corpus.samples[idx.at(rec.qa_id)];
        const Sample& qb = corpus.samples[idx.at(rec.qb_id)];
        arr.push_back({{"qa_id", rec.qa_id},
                       {"qa_text", qa.text},
                       {"qa_label", qa.label},
                       {"qb_id", rec.qb_id},
                       {"qb_text", qb.text},
                       {"qb_label", qb.label},
                       {"similarity", rec.similarity},
                       {"qb_location", to_string(rec.qb_location)},
                       {"category", to_string(rec.category)}});
    }
    return arr;
}

std::vector<TriageRecord> triage_records_from_json(const nlohmann::json& j) {
    std::vector<TriageRecord> out;
    for (const auto& item : j) {
        TriageRecord rec;
        rec.qa_id = item.at("qa_id").get<std::string>();
        rec.qb_id = item.at("qb_id").get<std::string>();
        rec.similarity = item.at("similarity").get<double>();
        rec.qb_location = qb_location_from_string(item.at("qb_location").get<std::string>());
        rec.category = category_from_string(item.at("category").get<std::string>());
        out.push_back(std::move(rec));
    }
    return out;
}

}  // namespace dqe
