#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "iccl/errors.hpp"
#include "iccl/retrieval.hpp"

#include "helpers.hpp"

using namespace iccl;
using gateway::EmbeddingVector;
using retrieval::cosine;
using retrieval::top_k;

namespace {

EmbeddingVector vec(std::vector<double> values) {
    EmbeddingVector v;
    v.dims = static_cast<int>(values.size());
    v.values = std::move(values);
    return v;
}

// Brute-force oracle: full sort by (-similarity, id), then truncate.
std::vector<std::pair<std::string, double>> oracle_top_k(
    const EmbeddingVector& query, const std::map<std::string, EmbeddingVector>& pool,
    std::size_t k) {
    std::vector<std::pair<std::string, double>> all;
    for (const auto& [id, v] : pool) all.emplace_back(id, cosine(query, v));
    std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (all.size() > k) all.resize(k);
    return all;
}

} // namespace

TEST_CASE("cosine basics") {
    CHECK(cosine(vec({1, 0}), vec({0, 1})) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(cosine(vec({1, 0}), vec({1, 0})) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(cosine(vec({1, 0}), vec({1, 1})) ==
          doctest::Approx(0.7071067811865475).epsilon(1e-14));

    CHECK_THROWS_AS(cosine(vec({1, 0}), vec({1, 0, 0})), Error);
    CHECK_THROWS_AS(cosine(vec({0, 0}), vec({1, 0})), Error);
}

TEST_CASE("top_k worked example and guards") {
    std::map<std::string, EmbeddingVector> pool{
        {"a", vec({1, 0})}, {"b", vec({0, 1})}, {"c", vec({0.6, 0.8})}};
    const auto result = top_k("q", vec({1, 0}), pool, 2);
    REQUIRE(result.entries.size() == 2);
    CHECK(result.entries[0].first == "a");
    CHECK(result.entries[0].second == doctest::Approx(1.0));
    CHECK(result.entries[1].first == "c");
    CHECK(result.entries[1].second == doctest::Approx(0.6));

    // k >= pool size returns the whole pool sorted.
    CHECK(top_k("q", vec({1, 0}), pool, 10).entries.size() == 3);

    // Identical vectors tie-break by ascending id.
    std::map<std::string, EmbeddingVector> ties{
        {"z", vec({1, 1})}, {"m", vec({1, 1})}, {"a", vec({1, 1})}};
    const auto tied = top_k("q", vec({1, 1}), ties, 2);
    CHECK(tied.entries[0].first == "a");
    CHECK(tied.entries[1].first == "m");

    CHECK_THROWS_AS(top_k("q", vec({1, 0}), pool, 0), Error);
    CHECK_THROWS_AS(top_k("q", vec({1, 0}), {}, 1), Error);
}

TEST_CASE("top_k equals the sort-and-truncate oracle on random pools") {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> coord(-1.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        const int dims = 1 + static_cast<int>(rng() % 16);
        const std::size_t pool_size = 1 + rng() % 60;
        std::map<std::string, EmbeddingVector> pool;
        for (std::size_t i = 0; i < pool_size; ++i) {
            std::vector<double> values(dims);
            do {
                for (double& x : values) x = coord(rng);
            } while (std::all_of(values.begin(), values.end(), [](double x) { return x == 0.0; }));
            pool["p" + std::to_string(i)] = vec(values);
        }
        std::vector<double> q(dims);
        do {
            for (double& x : q) x = coord(rng);
        } while (std::all_of(q.begin(), q.end(), [](double x) { return x == 0.0; }));
        const std::size_t k = 1 + rng() % (pool_size + 2);

        const auto got = top_k("t", vec(q), pool, k).entries;
        const auto want = oracle_top_k(vec(q), pool, k);
        REQUIRE(got.size() == want.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
            CHECK(got[i].first == want[i].first);
            CHECK(got[i].second == doctest::Approx(want[i].second).epsilon(1e-15));
            CHECK(got[i].second >= -1.0 - 1e-9);
            CHECK(got[i].second <= 1.0 + 1e-9);
        }
    }
}

TEST_CASE("cosine symmetry and positive-scale invariance") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> coord(-2.0, 2.0);
    std::uniform_real_distribution<double> scale(0.01, 50.0);
    for (int trial = 0; trial < 200; ++trial) {
        const int dims = 2 + static_cast<int>(rng() % 8);
        std::vector<double> a(dims), b(dims);
        for (double& x : a) x = coord(rng);
        for (double& x : b) x = coord(rng);
        a[0] += 0.5; // keep away from the zero vector
        b[0] -= 0.5;
        if (std::all_of(a.begin(), a.end(), [](double x) { return x == 0.0; })) continue;
        if (std::all_of(b.begin(), b.end(), [](double x) { return x == 0.0; })) continue;

        const double ab = cosine(vec(a), vec(b));
        CHECK(std::abs(ab - cosine(vec(b), vec(a))) < 1e-12);

        const double s = scale(rng);
        std::vector<double> scaled = a;
        for (double& x : scaled) x *= s;
        CHECK(std::abs(ab - cosine(vec(scaled), vec(b))) < 1e-12);
    }
}

TEST_CASE("embedding cache: one embed per (model, text), durable across instances") {
    testutil::TempDir tmp("cache");
    const auto cache_path = tmp.path / "cache.jsonl";

    gateway::BackendConfig cfg;
    cfg.backend_kind = gateway::BackendKind::mock;
    gateway::LmGateway gw(cfg);

    {
        retrieval::EmbeddingCache cache(cache_path);
        const auto first = cache.get_or_embed({"alpha", "beta", "alpha"}, gw);
        CHECK(first.size() == 2);
        CHECK(cache.stored_entries() == 2);
        const auto again = cache.get_or_embed({"alpha"}, gw);
        CHECK(again.at("alpha") == gw.embed("alpha"));
        CHECK(cache.stored_entries() == 2);
    }
    // Each stored entry appended exactly one line.
    const std::string contents = testutil::read_file(cache_path);
    CHECK(std::count(contents.begin(), contents.end(), '\n') == 2);

    // A new cache instance over the same file serves without re-embedding.
    retrieval::EmbeddingCache warm(cache_path);
    CHECK(warm.stored_entries() == 2);
    CHECK(warm.get_or_embed({"beta"}, gw).at("beta") == gw.embed("beta"));

    // Deleting the file forces recomputation with identical values.
    std::filesystem::remove(cache_path);
    retrieval::EmbeddingCache cold(cache_path);
    CHECK(cold.stored_entries() == 0);
    CHECK(cold.get_or_embed({"alpha"}, gw).at("alpha") == gw.embed("alpha"));
}

TEST_CASE("corrupt cache lines are dropped and recomputed") {
    testutil::TempDir tmp("cache");
    const auto cache_path = tmp.path / "cache.jsonl";
    testutil::write_file(cache_path, "this is not json\n");

    gateway::BackendConfig cfg;
    cfg.backend_kind = gateway::BackendKind::mock;
    gateway::LmGateway gw(cfg);

    retrieval::EmbeddingCache cache(cache_path);
    CHECK(cache.corrupt_records() == 1);
    CHECK(cache.stored_entries() == 0);
    CHECK(cache.get_or_embed({"alpha"}, gw).at("alpha") == gw.embed("alpha"));
}
