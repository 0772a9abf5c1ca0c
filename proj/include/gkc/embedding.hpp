#pragma once

// Provider-agnostic text embedding with a deterministic mock and a
// content-addressed vector cache.
//
// The mock embedder is a signed hashed bag-of-tokens projection: each token
// (case-folded, split on non-alphanumeric bytes) hashes to one coordinate
// with a +/-1 sign from a second hash bit; counts accumulate and the vector
// is length-normalized. A fixed 64-bit hash keeps vectors identical across
// platforms.

#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "gkc/common.hpp"
#include "gkc/hash.hpp"
#include "gkc/modality.hpp"

namespace gkc {

enum class TaskHint { Classification, Generic };

inline const char* task_hint_name(TaskHint h) {
    return h == TaskHint::Classification ? "classification" : "generic";
}

struct EmbeddingVector {
    std::vector<double> values;
    std::string source_digest;  // sha256 of the embedded text
    std::string provider;
    TaskHint task_hint = TaskHint::Classification;

    std::size_t dim() const { return values.size(); }
};

struct EmbedderConfig {
    std::string provider = "mock-embedder";
    int dimension = 256;
    bool normalize = true;
};

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual std::string name() const = 0;
    virtual int dimension() const = 0;
    virtual int max_attempts() const { return 1; }
    virtual std::chrono::milliseconds backoff_start() const {
        return std::chrono::milliseconds(1000);
    }
    virtual std::vector<double> embed(const std::string& text, TaskHint hint) = 0;
};

class MockEmbedder final : public EmbeddingProvider {
public:
    explicit MockEmbedder(EmbedderConfig cfg = {}) : cfg_(std::move(cfg)) {
        if (cfg_.dimension < 8) throw ConfigError("embedder dimension must be >= 8");
    }

    std::string name() const override { return cfg_.provider; }
    int dimension() const override { return cfg_.dimension; }

    std::vector<double> embed(const std::string& text, TaskHint) override {
        calls_.fetch_add(1, std::memory_order_relaxed);
        auto v = accumulate_counts(text, cfg_.dimension);
        if (cfg_.normalize) {
            double norm = 0.0;
            for (double x : v) norm += x * x;
            norm = std::sqrt(norm);
            if (norm > 0.0) {
                for (double& x : v) x /= norm;
            }
        }
        return v;
    }

    /// Signed token-count accumulation before normalization; exposed so
    /// tests can check the sparsity contract directly.
    static std::vector<double> accumulate_counts(const std::string& text, int dimension) {
        std::vector<double> v(static_cast<std::size_t>(dimension), 0.0);
        for (const auto& tok : tokenize(text)) {
            std::uint64_t h = fnv1a64(tok);
            auto idx = static_cast<std::size_t>(h % static_cast<std::uint64_t>(dimension));
            double sign = ((h >> 32) & 1u) ? 1.0 : -1.0;
            v[idx] += sign;
        }
        return v;
    }

    std::uint64_t call_count() const { return calls_.load(std::memory_order_relaxed); }

private:
    EmbedderConfig cfg_;
    std::atomic<std::uint64_t> calls_{0};
};

// ---------------------------------------------------------------------------
// Cache
// ---------------------------------------------------------------------------

struct EmbeddingCacheStats {
    std::uint64_t hits = 0;
    std::uint64_t misses = 0;
    std::uint64_t provider_calls = 0;
};

/// Content-addressed embedding cache; binary vector files plus an in-memory
/// layer. Same collapse semantics as the report cache.
class EmbeddingCache {
public:
    EmbeddingCache() = default;
    explicit EmbeddingCache(std::filesystem::path dir) : dir_(std::move(dir)) {
        std::filesystem::create_directories(*dir_);
    }

    static std::string make_key(const std::string& text_digest, const std::string& provider,
                                TaskHint hint) {
        Sha256 h;
        h.update(text_digest);
        h.update(std::string_view("\x1f", 1));
        h.update(provider);
        h.update(std::string_view("\x1f", 1));
        h.update(task_hint_name(hint));
        auto d = h.finish();
        return to_hex(d.data(), d.size());
    }

    std::vector<double> get_or_compute(const std::string& key,
                                       const std::function<std::vector<double>()>& fn) {
        {
            std::unique_lock<std::mutex> lock(mutex_);
            for (;;) {
                auto it = entries_.find(key);
                if (it != entries_.end()) {
                    ++stats_.hits;
                    return it->second;
                }
                if (!inflight_.count(key)) break;
                cv_.wait(lock);
            }
            if (dir_) {
                auto path = *dir_ / (key + ".vec");
                if (std::filesystem::exists(path)) {
                    auto v = read_vector_file(path.string());
                    entries_.emplace(key, v);
                    ++stats_.hits;
                    return v;
                }
            }
            inflight_.insert(key);
            ++stats_.misses;
        }
        std::vector<double> v;
        try {
            v = fn();
            ++stats_.provider_calls;
        } catch (...) {
            std::lock_guard<std::mutex> lock(mutex_);
            inflight_.erase(key);
            cv_.notify_all();
            throw;
        }
        {
            std::lock_guard<std::mutex> lock(mutex_);
            entries_.emplace(key, v);
            inflight_.erase(key);
        }
        cv_.notify_all();
        if (dir_) {
            auto tmp = *dir_ / (key + ".tmp");
            write_vector_file(tmp.string(), v);
            std::filesystem::rename(tmp, *dir_ / (key + ".vec"));
        }
        return v;
    }

    EmbeddingCacheStats stats() const {
        std::lock_guard<std::mutex> lock(mutex_);
        return stats_;
    }

    /// Fixed little-endian binary layout: magic, dim, then raw IEEE doubles.
    static void write_vector_file(const std::string& path, const std::vector<double>& v) {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw GkcError("cannot write " + path);
        const char magic[8] = {'G', 'K', 'C', 'V', 'E', 'C', '0', '1'};
        out.write(magic, 8);
        std::uint64_t dim = v.size();
        unsigned char buf[8];
        for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(dim >> (8 * i));
        out.write(reinterpret_cast<const char*>(buf), 8);
        for (double x : v) {
            std::uint64_t bits;
            std::memcpy(&bits, &x, 8);
            for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(bits >> (8 * i));
            out.write(reinterpret_cast<const char*>(buf), 8);
        }
    }

    static std::vector<double> read_vector_file(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw GkcError("cannot read " + path);
        char magic[8];
        in.read(magic, 8);
        if (std::memcmp(magic, "GKCVEC01", 8) != 0) throw ParseError(path + ": bad magic");
        unsigned char buf[8];
        in.read(reinterpret_cast<char*>(buf), 8);
        std::uint64_t dim = 0;
        for (int i = 0; i < 8; ++i) dim |= std::uint64_t(buf[i]) << (8 * i);
        std::vector<double> v(dim);
        for (std::uint64_t k = 0; k < dim; ++k) {
            in.read(reinterpret_cast<char*>(buf), 8);
            std::uint64_t bits = 0;
            for (int i = 0; i < 8; ++i) bits |= std::uint64_t(buf[i]) << (8 * i);
            std::memcpy(&v[k], &bits, 8);
        }
        if (!in) throw ParseError(path + ": truncated vector file");
        return v;
    }

private:
    mutable std::mutex mutex_;
    std::condition_variable cv_;
    std::map<std::string, std::vector<double>> entries_;
    std::set<std::string> inflight_;
    std::optional<std::filesystem::path> dir_;
    EmbeddingCacheStats stats_;
};

/// Embeds one text through the cache.
inline EmbeddingVector embed_text(EmbeddingProvider& provider, const std::string& text,
                                  TaskHint hint, EmbeddingCache& cache) {
    if (text.empty()) throw EmptyTextError("cannot embed empty text");
    EmbeddingVector out;
    out.source_digest = sha256_hex(text);
    out.provider = provider.name();
    out.task_hint = hint;
    const std::string key = EmbeddingCache::make_key(out.source_digest, out.provider, hint);
    out.values = cache.get_or_compute(key, [&] {
        std::chrono::milliseconds backoff = provider.backoff_start();
        const int attempts = std::max(1, provider.max_attempts());
        for (int a = 1;; ++a) {
            try {
                auto v = provider.embed(text, hint);
                for (double x : v) {
                    if (!std::isfinite(x)) throw ProviderError("non-finite embedding entry");
                }
                return v;
            } catch (const ProviderError&) {
                if (a >= attempts) throw;
                std::this_thread::sleep_for(backoff);
                backoff *= 2;
            }
        }
    });
    return out;
}

// ---------------------------------------------------------------------------
// Modality concatenation
// ---------------------------------------------------------------------------

struct GroupSpan {
    Modality modality;
    std::size_t begin = 0;
    std::size_t end = 0;  // exclusive
};

struct ConcatResult {
    std::vector<double> values;
    std::vector<GroupSpan> spans;
};

/// Concatenates per-modality vectors in canonical order (Lab < Gene < Med),
/// recording group spans for attribution. Accepts any nonempty subset.
inline ConcatResult concat_modalities(
    const std::vector<std::pair<Modality, const EmbeddingVector*>>& parts) {
    if (parts.empty()) throw DimensionMismatchError("empty modality subset");
    std::vector<std::pair<Modality, const EmbeddingVector*>> ordered(parts);
    std::sort(ordered.begin(), ordered.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    const std::size_t dim = ordered.front().second->dim();
    const std::string& provider = ordered.front().second->provider;
    ConcatResult out;
    out.values.reserve(dim * ordered.size());
    for (const auto& [m, vec] : ordered) {
        if (vec->dim() != dim) {
            throw DimensionMismatchError("modality vectors have different dimensions");
        }
        if (vec->provider != provider) {
            throw DimensionMismatchError("modality vectors come from different providers");
        }
        GroupSpan span{m, out.values.size(), out.values.size() + dim};
        out.values.insert(out.values.end(), vec->values.begin(), vec->values.end());
        out.spans.push_back(span);
    }
    return out;
}

inline ConcatResult concat_modalities(const EmbeddingVector& lab, const EmbeddingVector& gene,
                                      const EmbeddingVector& med) {
    return concat_modalities({{Modality::Lab, &lab}, {Modality::Gene, &gene},
                              {Modality::Med, &med}});
}

}  // namespace gkc
