#include "iccl/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "json.hpp"

#include "iccl/errors.hpp"
#include "iccl/prng.hpp"

namespace iccl::retrieval {

using gateway::EmbeddingVector;
using nlohmann::json;

double cosine(const EmbeddingVector& u, const EmbeddingVector& v) {
    if (u.dims != v.dims || u.values.size() != v.values.size())
        raise(Errc::dimension_mismatch, std::to_string(u.dims) + " vs " + std::to_string(v.dims));
    double dot = 0.0, nu = 0.0, nv = 0.0;
    for (std::size_t i = 0; i < u.values.size(); ++i) {
        dot += u.values[i] * v.values[i];
        nu += u.values[i] * u.values[i];
        nv += v.values[i] * v.values[i];
    }
    if (nu == 0.0 || nv == 0.0) raise(Errc::zero_vector, "cosine undefined for a zero vector");
    return dot / (std::sqrt(nu) * std::sqrt(nv));
}

CandidateSet top_k(const std::string& test_id, const EmbeddingVector& query,
                   const std::map<std::string, EmbeddingVector>& pool, std::size_t k) {
    if (k == 0) raise(Errc::precondition, "top_k requires k >= 1");
    if (pool.empty()) raise(Errc::precondition, "top_k requires a nonempty pool");

    CandidateSet result;
    result.test_id = test_id;
    result.entries.reserve(pool.size());
    for (const auto& [demo_id, vec] : pool)
        result.entries.emplace_back(demo_id, cosine(query, vec));
    std::sort(result.entries.begin(), result.entries.end(),
              [](const auto& a, const auto& b) {
                  if (a.second != b.second) return a.second > b.second;
                  return a.first < b.first;
              });
    if (result.entries.size() > k) result.entries.resize(k);
    return result;
}

EmbeddingCache::EmbeddingCache(std::filesystem::path path) : path_(std::move(path)) {
    load();
}

void EmbeddingCache::load() {
    std::ifstream in(path_);
    if (!in) return; // cold cache
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            json record = json::parse(line);
            EmbeddingVector vec;
            vec.dims = record.at("dims").get<int>();
            vec.values = record.at("values").get<std::vector<double>>();
            if (vec.dims != static_cast<int>(vec.values.size()))
                throw Error(Errc::cache_invalid, "dims mismatch");
            const std::uint64_t hash = std::stoull(record.at("text_hash").get<std::string>(), nullptr, 16);
            entries_[{record.at("model").get<std::string>(), hash}] = std::move(vec);
        } catch (const std::exception&) {
            ++corrupt_records_; // dropped; the text will be re-embedded
        }
    }
}

std::size_t EmbeddingCache::stored_entries() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return entries_.size();
}

std::map<std::string, EmbeddingVector> EmbeddingCache::get_or_embed(
    const std::vector<std::string>& texts, gateway::LmGateway& gw) {
    const std::string& model = gw.config().model_name;
    std::map<std::string, EmbeddingVector> out;
    for (const std::string& text : texts) {
        if (text.empty()) raise(Errc::precondition, "cannot embed an empty text");
        if (out.count(text)) continue;
        const std::uint64_t hash = fnv1a64(text);
        {
            std::lock_guard<std::mutex> lock(mutex_);
            auto it = entries_.find({model, hash});
            if (it != entries_.end()) {
                out[text] = it->second;
                continue;
            }
        }
        EmbeddingVector vec = gw.embed(text);
        std::lock_guard<std::mutex> lock(mutex_);
        auto [it, inserted] = entries_.emplace(std::make_pair(model, hash), vec);
        if (inserted) {
            char hex[17];
            std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(hash));
            json record = {{"model", model},
                           {"text_hash", std::string(hex)},
                           {"dims", vec.dims},
                           {"values", vec.values}};
            std::ofstream outfile(path_, std::ios::app);
            if (!outfile) raise(Errc::io_error, "cannot append to cache " + path_.string());
            outfile << record.dump() << "\n";
        }
        out[text] = it->second;
    }
    return out;
}

} // namespace iccl::retrieval
