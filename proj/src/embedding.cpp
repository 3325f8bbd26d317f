#include "dqe/embedding.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "dqe/errors.hpp"
#include "dqe/hash.hpp"
#include "dqe/kernels.hpp"
#include "http_util.hpp"
#include "json.hpp"

namespace dqe {
namespace {

using nlohmann::json;

void put_u16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xFF));
    out.push_back(static_cast<char>((v >> 8) & 0xFF));
}

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

struct ByteReader {
    const std::string& buf;
    std::size_t pos = 0;
    const std::string path;

    void need(std::size_t n) {
        if (pos + n > buf.size()) {
            throw ArtifactError(path + ": truncated embedding file");
        }
    }
    std::uint16_t u16() {
        need(2);
        std::uint16_t v = static_cast<std::uint8_t>(buf[pos]) |
                          (static_cast<std::uint16_t>(static_cast<std::uint8_t>(buf[pos + 1])) << 8);
        pos += 2;
        return v;
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(buf[pos + i])) << (8 * i);
        }
        pos += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) {
            v |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(buf[pos + i])) << (8 * i);
        }
        pos += 8;
        return v;
    }
};

float f32_from_bits(std::uint32_t bits) {
    float f;
    std::memcpy(&f, &bits, sizeof(f));
    return f;
}

std::uint32_t bits_from_f32(float f) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, sizeof(bits));
    return bits;
}

EmbeddingMatrix reorder_to_corpus(const LabeledCorpus& corpus, const EmbeddingMatrix& found) {
    std::vector<std::string> missing;
    EmbeddingMatrix out;
    out.dim = found.dim;
    out.ids.reserve(corpus.size());
    out.values.reserve(corpus.size() * found.dim);
    for (const auto& s : corpus.samples) {
        auto r = found.row_of(s.id);
        if (!r) {
            missing.push_back(s.id);
            continue;
        }
        out.ids.push_back(s.id);
        auto row = found.row(*r);
        out.values.insert(out.values.end(), row.begin(), row.end());
    }
    if (!missing.empty()) {
        std::string list;
        for (std::size_t i = 0; i < missing.size() && i < 10; ++i) {
            if (i) list += ", ";
            list += missing[i];
        }
        if (missing.size() > 10) list += ", ...";
        throw ArtifactError("embedding source is missing " + std::to_string(missing.size()) +
                            " corpus ids: " + list);
    }
    out.rebuild_index();
    return out;
}

}  // namespace

std::optional<std::size_t> EmbeddingMatrix::row_of(std::string_view id) const {
    auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

void EmbeddingMatrix::rebuild_index() {
    index_.clear();
    for (std::size_t i = 0; i < ids.size(); ++i) index_.emplace(ids[i], i);
}

double cosine(std::span<const float> u, std::span<const float> v) {
    if (u.size() != v.size() || u.empty()) {
        throw std::invalid_argument("cosine: dimension mismatch (" + std::to_string(u.size()) +
                                    " vs " + std::to_string(v.size()) + ")");
    }
    double uv = 0.0, uu = 0.0, vv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        uv += static_cast<double>(u[i]) * static_cast<double>(v[i]);
        uu += static_cast<double>(u[i]) * static_cast<double>(u[i]);
        vv += static_cast<double>(v[i]) * static_cast<double>(v[i]);
    }
    if (uu == 0.0 || vv == 0.0) throw std::invalid_argument("cosine: zero-norm vector");
    double c = uv / (std::sqrt(uu) * std::sqrt(vv));
    return std::clamp(c, -1.0, 1.0);
}

EmbeddingMatrix normalize_rows(const EmbeddingMatrix& m) {
    EmbeddingMatrix out = m;
    std::size_t bad = kernels::normalize_rows(out.values.data(), out.rows(), out.dim);
    if (bad != SIZE_MAX) {
        throw std::invalid_argument("normalize_rows: zero-norm row for id " + m.ids[bad]);
    }
    out.rebuild_index();
    return out;
}

NearestResult nearest_other(std::string_view qa_id, const EmbeddingMatrix& pool,
                            const std::set<std::string, std::less<>>& exclude) {
    if (pool.rows() < 2) throw std::invalid_argument("nearest_other: pool has fewer than 2 rows");
    auto qrow = pool.row_of(qa_id);
    if (!qrow) throw std::invalid_argument("nearest_other: unknown id " + std::string(qa_id));

    std::vector<std::uint8_t> mask(pool.rows(), 0);
    mask[*qrow] = 1;
    for (const auto& id : exclude) {
        if (auto r = pool.row_of(id)) mask[*r] = 1;
    }
    auto best = kernels::max_similarity_scan(pool.values.data(), pool.rows(), pool.dim,
                                             pool.row(*qrow), mask.data());
    if (best.index == SIZE_MAX) {
        throw std::invalid_argument("nearest_other: exclusion set leaves no candidates");
    }
    return {pool.ids[best.index], best.value, best.index};
}

void write_embeddings(const EmbeddingMatrix& m, const std::filesystem::path& path) {
    std::string out;
    out.reserve(16 + m.values.size() * 4 + m.ids.size() * 12);
    out += "DQEV";
    put_u32(out, 1);
    put_u32(out, static_cast<std::uint32_t>(m.dim));
    put_u64(out, static_cast<std::uint64_t>(m.rows()));
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const std::string& id = m.ids[i];
        if (id.size() > 0xFFFF) throw std::invalid_argument("id too long for format: " + id);
        put_u16(out, static_cast<std::uint16_t>(id.size()));
        out += id;
        for (float f : m.row(i)) put_u32(out, bits_from_f32(f));
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw ArtifactError("cannot write embeddings: " + path.string());
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw ArtifactError("write failed: " + path.string());
}

EmbeddingMatrix read_embeddings(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ArtifactError("cannot open embeddings: " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    std::string buf = ss.str();

    ByteReader r{buf, 0, path.string()};
    r.need(4);
    if (buf.compare(0, 4, "DQEV") != 0) {
        throw ArtifactError(path.string() + ": bad magic, not an embedding file");
    }
    r.pos = 4;
    std::uint32_t version = r.u32();
    if (version != 1) {
        throw ArtifactError(path.string() + ": unsupported version " + std::to_string(version));
    }
    std::uint32_t dim = r.u32();
    std::uint64_t count = r.u64();
    if (dim == 0) throw ArtifactError(path.string() + ": zero dimension");

    EmbeddingMatrix m;
    m.dim = dim;
    m.ids.reserve(count);
    m.values.reserve(count * dim);
    for (std::uint64_t i = 0; i < count; ++i) {
        std::uint16_t len = r.u16();
        r.need(len);
        m.ids.emplace_back(buf.substr(r.pos, len));
        r.pos += len;
        for (std::uint32_t d = 0; d < dim; ++d) m.values.push_back(f32_from_bits(r.u32()));
    }
    if (r.pos != buf.size()) {
        throw ArtifactError(path.string() + ": trailing bytes after payload");
    }
    m.rebuild_index();
    return m;
}

void write_embeddings_jsonl(const EmbeddingMatrix& m, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw ArtifactError("cannot write embeddings: " + path.string());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        json obj;
        obj["id"] = m.ids[i];
        obj["vector"] = std::vector<float>(m.row(i).begin(), m.row(i).end());
        f << obj.dump() << "\n";
    }
}

EmbeddingMatrix read_embeddings_jsonl(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ArtifactError("cannot open embeddings: " + path.string());
    EmbeddingMatrix m;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ArtifactError(path.string() + ":" + std::to_string(line_no) +
                                ": invalid JSON: " + e.what());
        }
        if (!obj.contains("id") || !obj.contains("vector") || !obj["vector"].is_array()) {
            throw ArtifactError(path.string() + ":" + std::to_string(line_no) +
                                ": record needs id and vector fields");
        }
        auto vec = obj["vector"].get<std::vector<float>>();
        if (m.dim == 0) {
            m.dim = vec.size();
        } else if (vec.size() != m.dim) {
            throw ArtifactError(path.string() + ":" + std::to_string(line_no) +
                                ": inconsistent dimension");
        }
        m.ids.push_back(obj["id"].get<std::string>());
        m.values.insert(m.values.end(), vec.begin(), vec.end());
    }
    if (m.ids.empty()) throw ArtifactError(path.string() + ": no embedding records");
    m.rebuild_index();
    return m;
}

EmbeddingMatrix read_embeddings_any(const std::filesystem::path& path) {
    if (path.extension() == ".jsonl") return read_embeddings_jsonl(path);
    return read_embeddings(path);
}

std::string EmbeddingProvider::identity() const {
    if (kind == Kind::file_import) return "file:" + file.string();
    return "http:" + endpoint;
}

namespace {

// Per-text vector cache: one jsonl file per provider identity, records
// {text_hash, vector}.
class TextVectorCache {
public:
    TextVectorCache(const std::filesystem::path& dir, const std::string& provider_identity) {
        if (dir.empty()) return;
        std::filesystem::create_directories(dir);
        path_ = dir / ("embed_cache_" + hash_hex(fnv1a64(provider_identity)) + ".jsonl");
        load();
    }

    bool enabled() const { return !path_.empty(); }

    const std::vector<float>* lookup(std::uint64_t text_hash) const {
        auto it = entries_.find(text_hash);
        return it == entries_.end() ? nullptr : &it->second;
    }

    void store(std::uint64_t text_hash, const std::vector<float>& vec) {
        if (!enabled()) return;
        std::lock_guard<std::mutex> lock(mu_);
        if (!entries_.emplace(text_hash, vec).second) return;
        std::ofstream f(path_, std::ios::binary | std::ios::app);
        json obj;
        obj["text_hash"] = hash_hex(text_hash);
        obj["vector"] = vec;
        f << obj.dump() << "\n";
    }

private:
    void load() {
        std::ifstream f(path_, std::ios::binary);
        if (!f) return;
        std::string line;
        while (std::getline(f, line)) {
            if (line.empty()) continue;
            json obj = json::parse(line, nullptr, false);
            if (obj.is_discarded() || !obj.contains("text_hash") || !obj.contains("vector")) {
                continue;  // ignore torn tail writes
            }
            std::uint64_t h = std::stoull(obj["text_hash"].get<std::string>(), nullptr, 16);
            entries_[h] = obj["vector"].get<std::vector<float>>();
        }
    }

    std::filesystem::path path_;
    std::unordered_map<std::uint64_t, std::vector<float>> entries_;
    std::mutex mu_;
};

std::vector<std::vector<float>> fetch_batch_http(const EmbeddingProvider& provider,
                                                 const std::vector<std::string>& texts) {
    json req = json::array();
    for (const auto& t : texts) req.push_back(t);
    std::string token = http::env_or_empty(provider.api_key_env);
    std::string body = http::post_json_with_retry(provider.endpoint, req.dump(), token,
                                                  provider.max_retries, provider.backoff_ms,
                                                  provider.timeout_s);
    json res = json::parse(body, nullptr, false);
    if (res.is_discarded() || !res.is_array() || res.size() != texts.size()) {
        throw ServiceError(provider.endpoint + ": response is not an array of " +
                           std::to_string(texts.size()) + " vectors");
    }
    std::vector<std::vector<float>> out;
    out.reserve(texts.size());
    for (const auto& v : res) {
        if (!v.is_array() || v.empty()) {
            throw ServiceError(provider.endpoint + ": response row is not a vector");
        }
        out.push_back(v.get<std::vector<float>>());
    }
    return out;
}

}  // namespace

EmbeddingMatrix embed_corpus(const LabeledCorpus& corpus, const EmbeddingProvider& provider,
                             const std::filesystem::path& cache_dir) {
    if (corpus.size() == 0) throw std::invalid_argument("embed_corpus: empty corpus");

    if (provider.kind == EmbeddingProvider::Kind::file_import) {
        EmbeddingMatrix found = read_embeddings_any(provider.file);
        return normalize_rows(reorder_to_corpus(corpus, found));
    }

    TextVectorCache cache(cache_dir, provider.identity());
    std::vector<const std::vector<float>*> resolved(corpus.size(), nullptr);
    std::vector<std::size_t> pending;
    std::vector<std::uint64_t> text_hashes(corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        text_hashes[i] = fnv1a64(corpus.samples[i].text);
        if (cache.enabled()) resolved[i] = cache.lookup(text_hashes[i]);
        if (!resolved[i]) pending.push_back(i);
    }

    // Batches dispatched concurrently; results land in per-sample slots so
    // the assembled matrix follows corpus order, not completion order.
    std::vector<std::vector<float>> fetched(corpus.size());
    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t off = 0; off < pending.size(); off += provider.batch_size) {
        std::size_t end = std::min(pending.size(), off + provider.batch_size);
        batches.emplace_back(pending.begin() + static_cast<std::ptrdiff_t>(off),
                             pending.begin() + static_cast<std::ptrdiff_t>(end));
    }
    std::atomic<std::size_t> next_batch{0};
    std::mutex error_mu;
    std::exception_ptr first_error;
    std::size_t workers = std::max<std::size_t>(1, std::min(provider.concurrency, batches.size()));
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < workers; ++w) {
        threads.emplace_back([&] {
            while (true) {
                std::size_t b = next_batch.fetch_add(1);
                if (b >= batches.size()) return;
                {
                    std::lock_guard<std::mutex> lock(error_mu);
                    if (first_error) return;
                }
                try {
                    std::vector<std::string> texts;
                    for (std::size_t i : batches[b]) texts.push_back(corpus.samples[i].text);
                    auto vectors = fetch_batch_http(provider, texts);
                    for (std::size_t k = 0; k < batches[b].size(); ++k) {
                        fetched[batches[b][k]] = std::move(vectors[k]);
                    }
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mu);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& t : threads) t.join();
    if (first_error) std::rethrow_exception(first_error);

    EmbeddingMatrix m;
    m.ids.reserve(corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const std::vector<float>* vec = resolved[i] ? resolved[i] : &fetched[i];
        if (m.dim == 0) {
            m.dim = vec->size();
        } else if (vec->size() != m.dim) {
            throw ServiceError("embedding dimension changed across batches: " +
                               std::to_string(vec->size()) + " vs " + std::to_string(m.dim));
        }
        m.ids.push_back(corpus.samples[i].id);
        m.values.insert(m.values.end(), vec->begin(), vec->end());
        if (!resolved[i]) cache.store(text_hashes[i], fetched[i]);
    }
    m.rebuild_index();
    return normalize_rows(m);
}

}  // namespace dqe
