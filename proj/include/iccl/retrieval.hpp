#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "iccl/gateway.hpp"

namespace iccl::retrieval {

struct CandidateSet {
    std::string test_id;
    // (demo_id, similarity), sorted by similarity descending, ties by
    // ascending demo_id.
    std::vector<std::pair<std::string, double>> entries;
};

double cosine(const gateway::EmbeddingVector& u, const gateway::EmbeddingVector& v);

// Exhaustive scan: the k pool entries most cosine-similar to the query.
CandidateSet top_k(const std::string& test_id, const gateway::EmbeddingVector& query,
                   const std::map<std::string, gateway::EmbeddingVector>& pool, std::size_t k);

// On-disk get-or-compute embedding store. File format: append-only
// line-delimited {model, text_hash, dims, values}; keys are
// (model_name, fnv1a64(text)). Concurrent callers see linearizable
// get-or-compute semantics. Corrupt lines are dropped, counted, and the
// affected texts recomputed.
class EmbeddingCache {
  public:
    explicit EmbeddingCache(std::filesystem::path path);

    std::map<std::string, gateway::EmbeddingVector> get_or_embed(
        const std::vector<std::string>& texts, gateway::LmGateway& gw);

    std::size_t corrupt_records() const { return corrupt_records_; }
    std::size_t stored_entries() const;

  private:
    void load();

    std::filesystem::path path_;
    std::map<std::pair<std::string, std::uint64_t>, gateway::EmbeddingVector> entries_;
    std::size_t corrupt_records_ = 0;
    mutable std::mutex mutex_;
};

} // namespace iccl::retrieval
