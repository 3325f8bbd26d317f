#include "dqe/predictor.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include "dqe/errors.hpp"
#include "dqe/kernels.hpp"
#include "dqe/unicode.hpp"
#include "http_util.hpp"
#include "json.hpp"

namespace dqe {
namespace {

using nlohmann::json;

std::string normalize_token(std::string_view raw) {
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

std::string render_prompt(const std::string& tmpl, const std::string& text,
                          const std::vector<std::string>& vocab) {
    std::string labels;
    for (std::size_t i = 0; i < vocab.size(); ++i) {
        if (i) labels += ", ";
        labels += vocab[i];
    }
    std::string out = tmpl;
    auto replace_all = [](std::string& s, std::string_view what, const std::string& with) {
        std::size_t pos = 0;
        while ((pos = s.find(what, pos)) != std::string::npos) {
            s.replace(pos, what.size(), with);
            pos += with.size();
        }
    };
    replace_all(out, "{labels}", labels);
    replace_all(out, "{text}", text);
    return out;
}

std::vector<Prediction> finalize(const PredictContext& ctx,
                                 std::vector<std::pair<std::string, std::string>> raw_by_target) {
    auto idx = corpus_index(ctx.corpus);
    std::vector<Prediction> out;
    out.reserve(raw_by_target.size());
    for (auto& [id, raw] : raw_by_target) {
        auto it = idx.find(id);
        if (it == idx.end()) throw ArtifactError("prediction target not in corpus: " + id);
        Prediction p;
        p.sample_id = id;
        p.raw_output = std::move(raw);
        p.parsed_label = parse_output(p.raw_output, ctx.corpus.label_vocabulary);
        p.gold_label = ctx.corpus.samples[it->second].label;
        p.correct = p.parsed_label == p.gold_label;
        out.push_back(std::move(p));
    }
    return out;
}

std::vector<Prediction> predict_from_file(const PredictContext& ctx,
                                          const PredictorBackend& backend) {
    auto records = read_raw_predictions(backend.file);
    std::unordered_map<std::string, std::string> by_id;
    for (auto& [id, raw] : records) by_id[id] = std::move(raw);

    std::vector<std::string> missing;
    std::vector<std::pair<std::string, std::string>> raws;
    for (const auto& id : ctx.targets) {
        auto it = by_id.find(id);
        if (it == by_id.end()) {
            missing.push_back(id);
        } else {
            raws.emplace_back(id, it->second);
        }
    }
    if (!missing.empty()) {
        std::string list;
        for (std::size_t i = 0; i < missing.size() && i < 10; ++i) {
            if (i) list += ", ";
            list += missing[i];
        }
        if (missing.size() > 10) list += ", ...";
        throw ArtifactError("predictions file " + backend.file.string() + " is missing " +
                            std::to_string(missing.size()) + " target ids: " + list);
    }
    return finalize(ctx, std::move(raws));
}

std::vector<Prediction> predict_from_baseline(const PredictContext& ctx,
                                              const PredictorBackend& backend) {
    if (!ctx.embeddings || !ctx.train_ids) {
        throw std::invalid_argument("embedding_baseline needs embeddings and train ids");
    }
    auto model = EmbeddingBaseline::fit(*ctx.train_ids, ctx.corpus, *ctx.embeddings,
                                        backend.baseline);
    auto labels = model.predict_rows(*ctx.embeddings, ctx.targets);
    std::vector<std::pair<std::string, std::string>> raws;
    raws.reserve(ctx.targets.size());
    for (std::size_t i = 0; i < ctx.targets.size(); ++i) {
        raws.emplace_back(ctx.targets[i], labels[i]);
    }
    return finalize(ctx, std::move(raws));
}

std::vector<Prediction> predict_from_http(const PredictContext& ctx,
                                          const PredictorBackend& backend) {
    // Resume support: previously completed records are reused verbatim.
    std::unordered_map<std::string, std::string> done;
    if (!backend.partial_path.empty() && std::filesystem::exists(backend.partial_path)) {
        for (auto& [id, raw] : read_raw_predictions(backend.partial_path)) {
            done[id] = std::move(raw);
        }
    }
    std::vector<std::size_t> pending;
    for (std::size_t i = 0; i < ctx.targets.size(); ++i) {
        if (!done.count(ctx.targets[i])) pending.push_back(i);
    }

    std::vector<std::string> fetched(ctx.targets.size());
    std::string token = http::env_or_empty(backend.api_key_env);
    std::atomic<std::size_t> cursor{0};
    std::mutex io_mu;
    std::exception_ptr first_error;
    std::ofstream partial;
    if (!backend.partial_path.empty()) {
        partial.open(backend.partial_path, std::ios::binary | std::ios::app);
    }

    std::size_t workers = std::max<std::size_t>(1, std::min(backend.concurrency, pending.size()));
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < workers; ++w) {
        threads.emplace_back([&] {
            while (true) {
                std::size_t j = cursor.fetch_add(1);
                if (j >= pending.size()) return;
                {
                    std::lock_guard<std::mutex> lock(io_mu);
                    if (first_error) return;
                }
                std::size_t t = pending[j];
                const auto& id = ctx.targets[t];
                const Sample* s = ctx.corpus.find(id);
                try {
                    if (!s) throw ArtifactError("prediction target not in corpus: " + id);
                    json req;
                    req["prompt"] = render_prompt(backend.prompt_template, s->text,
                                                  ctx.corpus.label_vocabulary);
                    std::string body = http::post_json_with_retry(
                        backend.endpoint, req.dump(), token, backend.max_retries,
                        backend.backoff_ms, backend.timeout_s);
                    json res = json::parse(body, nullptr, false);
                    if (res.is_discarded() || !res.contains("completion") ||
                        !res["completion"].is_string()) {
                        throw ServiceError(backend.endpoint +
                                           ": response lacks string field completion");
                    }
                    std::string raw = res["completion"].get<std::string>();
                    std::lock_guard<std::mutex> lock(io_mu);
                    fetched[t] = raw;
                    if (partial.is_open()) {
                        json rec;
                        rec["id"] = id;
                        rec["raw_output"] = raw;
                        partial << rec.dump() << "\n";
                        partial.flush();
                    }
                } catch (...) {
                    std::lock_guard<std::mutex> lock(io_mu);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& t : threads) t.join();
    if (first_error) std::rethrow_exception(first_error);

    std::vector<std::pair<std::string, std::string>> raws;
    raws.reserve(ctx.targets.size());
    for (std::size_t i = 0; i < ctx.targets.size(); ++i) {
        const auto& id = ctx.targets[i];
        auto it = done.find(id);
        raws.emplace_back(id, it != done.end() ? it->second : fetched[i]);
    }
    return finalize(ctx, std::move(raws));
}

}  // namespace

std::string parse_output(std::string_view raw, const std::vector<std::string>& vocab) {
    if (vocab.empty()) throw std::invalid_argument("parse_output: empty vocabulary");
    std::string needle = normalize_token(raw);
    for (const auto& label : vocab) {
        if (normalize_token(label) == needle) return label;
    }
    return std::string(kUnexpectedLabel);
}

EmbeddingBaseline EmbeddingBaseline::fit(const std::vector<std::string>& train_ids,
                                         const LabeledCorpus& corpus,
                                         const EmbeddingMatrix& emb,
                                         const BaselineConfig& cfg) {
    if (train_ids.empty()) throw std::invalid_argument("fit_baseline: empty training set");
    EmbeddingBaseline model;
    model.cfg_ = cfg;
    model.dim_ = emb.dim;

    auto idx = corpus_index(corpus);
    if (cfg.kind == BaselineConfig::Kind::nearest_centroid) {
        std::map<std::string, std::vector<double>> sums;
        for (const auto& id : train_ids) {
            auto cit = idx.find(id);
            auto r = emb.row_of(id);
            if (cit == idx.end() || !r) {
                throw std::invalid_argument("fit_baseline: train id missing: " + id);
            }
            auto& acc = sums[corpus.samples[cit->second].label];
            acc.resize(emb.dim, 0.0);
            auto row = emb.row(*r);
            for (std::size_t d = 0; d < emb.dim; ++d) acc[d] += row[d];
        }
        for (auto& [label, acc] : sums) {
            double norm2 = 0.0;
            for (double v : acc) norm2 += v * v;
            if (norm2 == 0.0) {
                throw std::invalid_argument("fit_baseline: degenerate centroid for label " + label);
            }
            double inv = 1.0 / std::sqrt(norm2);
            model.centroid_labels_.push_back(label);
            for (double v : acc) model.centroids_.push_back(static_cast<float>(v * inv));
        }
    } else {
        model.train_labels_.reserve(train_ids.size());
        model.train_vectors_.reserve(train_ids.size() * emb.dim);
        for (const auto& id : train_ids) {
            auto cit = idx.find(id);
            auto r = emb.row_of(id);
            if (cit == idx.end() || !r) {
                throw std::invalid_argument("fit_baseline: train id missing: " + id);
            }
            model.train_labels_.push_back(corpus.samples[cit->second].label);
            auto row = emb.row(*r);
            model.train_vectors_.insert(model.train_vectors_.end(), row.begin(), row.end());
        }
    }
    return model;
}

std::string EmbeddingBaseline::predict(std::span<const float> query) const {
    if (cfg_.kind == BaselineConfig::Kind::nearest_centroid) {
        auto best = kernels::max_similarity_scan(centroids_.data(), centroid_labels_.size(),
                                                 dim_, query, nullptr);
        return centroid_labels_[best.index];
    }
    // top-k by (similarity desc, index asc)
    const std::size_t n = train_labels_.size();
    std::vector<std::pair<double, std::size_t>> sims(n);
    for (std::size_t i = 0; i < n; ++i) {
        sims[i] = {kernels::dot(query, {train_vectors_.data() + i * dim_, dim_}), i};
    }
    std::size_t k = std::min(cfg_.k == 0 ? std::size_t{1} : cfg_.k, n);
    std::partial_sort(sims.begin(), sims.begin() + static_cast<std::ptrdiff_t>(k), sims.end(),
                      [](const auto& a, const auto& b) {
                          return a.first > b.first ||
                                 (a.first == b.first && a.second < b.second);
                      });
    std::map<std::string, std::size_t> votes;
    for (std::size_t i = 0; i < k; ++i) votes[train_labels_[sims[i].second]]++;
    std::size_t best_count = 0;
    bool tie = false;
    std::string best_label;
    for (const auto& [label, count] : votes) {
        if (count > best_count) {
            best_count = count;
            best_label = label;
            tie = false;
        } else if (count == best_count) {
            tie = true;
        }
    }
    if (tie) return train_labels_[sims[0].second];
    return best_label;
}

std::vector<std::string> EmbeddingBaseline::predict_rows(const EmbeddingMatrix& emb,
                                                         const std::vector<std::string>& ids) const {
    std::vector<std::size_t> rows(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        auto r = emb.row_of(ids[i]);
        if (!r) throw std::invalid_argument("predict: id missing from embeddings: " + ids[i]);
        rows[i] = *r;
    }
    std::vector<std::string> out(ids.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(ids.size()); ++i) {
        out[static_cast<std::size_t>(i)] = predict(emb.row(rows[static_cast<std::size_t>(i)]));
    }
    return out;
}

EmbeddingBaseline fit_baseline(const std::vector<std::string>& train_ids,
                               const LabeledCorpus& corpus, const EmbeddingMatrix& emb,
                               const BaselineConfig& cfg) {
    return EmbeddingBaseline::fit(train_ids, corpus, emb, cfg);
}

std::vector<Prediction> predict_all(const PredictContext& ctx, const PredictorBackend& backend) {
    switch (backend.kind) {
        case PredictorBackend::Kind::file_import: return predict_from_file(ctx, backend);
        case PredictorBackend::Kind::http_inference: return predict_from_http(ctx, backend);
        case PredictorBackend::Kind::embedding_baseline: return predict_from_baseline(ctx, backend);
    }
    throw std::logic_error("unreachable");
}

void write_predictions(const std::vector<Prediction>& preds, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw ArtifactError("cannot write predictions: " + path.string());
    for (const auto& p : preds) {
        json obj;
        obj["id"] = p.sample_id;
        obj["raw_output"] = p.raw_output;
        f << obj.dump() << "\n";
    }
}

std::vector<std::pair<std::string, std::string>> read_raw_predictions(
    const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ArtifactError("cannot open predictions: " + path.string());
    std::vector<std::pair<std::string, std::string>> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json obj = json::parse(line, nullptr, false);
        if (obj.is_discarded() || !obj.contains("id") || !obj.contains("raw_output")) {
            throw ArtifactError(path.string() + ":" + std::to_string(line_no) +
                                ": prediction record needs id and raw_output");
        }
        out.emplace_back(obj["id"].get<std::string>(), obj["raw_output"].get<std::string>());
    }
    return out;
}

}  // namespace dqe
