#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "rarf/station.hpp"
#include "rarf/wavelet.hpp"

namespace rarf {

inline constexpr double kEarthRadiusKm = 6371.0;

/// Great-circle distance in kilometers.
double haversine(const Station& a, const Station& b);

/// Distance used for neighbor ranking: geographic, or Euclidean distance
/// between location embeddings supplied by a provider.
struct DistanceFn {
    enum class Kind { Haversine, EmbeddingEuclidean };
    Kind kind = Kind::Haversine;
    /// Required for EmbeddingEuclidean.
    std::function<std::vector<double>(const Station&)> embed;

    double operator()(const Station& a, const Station& b) const;

    static DistanceFn haversine_fn() { return {}; }
    static DistanceFn embedding_fn(std::function<std::vector<double>(const Station&)> e);
};

/// Per-band retrieval budgets, fast -> slow. Strictly increasing, matching
/// the rule that lower frequencies retrieve more reference points.
struct RetrievalConfig {
    int k_fast = 10;
    int k_mod = 25;
    int k_slow = 50;
    DistanceFn::Kind distance = DistanceFn::Kind::Haversine;

    void validate() const;

    /// Budgets for the bands of `spec` (suffix of fast/mod/slow for J<3).
    std::vector<int> ks_for(const BandSpec& spec) const;
};

struct Neighbor {
    std::string id;
    double distance = 0.0;
};

/// Per-band ordered neighbor lists for one target. Lists are ascending by
/// distance, never contain the target, and nest: each band's list is a
/// prefix of the next (slower) band's list.
struct RetrievalPlan {
    std::string target_id;
    std::vector<std::string> band_labels;
    std::vector<std::vector<Neighbor>> bands; // fast -> slow

    std::string to_json() const;
};

/// The k nearest stations to `target` under `d`, excluding the target
/// itself (matched by id). Ties broken by ascending station id.
std::vector<Neighbor> retrieve(const Station& target, const StationRegistry& registry,
                               int k, const DistanceFn& d);

/// Retrieval with a per-target cache of the full sorted ranking, so nested
/// plans and repeated training queries sort each target once.
class Retriever {
public:
    Retriever(const StationRegistry& registry, DistanceFn d)
        : registry_(registry), dist_(std::move(d)) {}

    std::vector<Neighbor> retrieve(const Station& target, int k) const;
    RetrievalPlan plan(const Station& target, const RetrievalConfig& cfg,
                       const BandSpec& spec) const;

    const StationRegistry& registry() const { return registry_; }

private:
    const std::vector<Neighbor>& ranking(const Station& target) const;

    const StationRegistry& registry_;
    DistanceFn dist_;
    mutable std::map<std::string, std::vector<Neighbor>> cache_;
};

/// One-shot variant of Retriever::plan.
RetrievalPlan plan_retrieval(const Station& target, const StationRegistry& registry,
                             const RetrievalConfig& cfg, const BandSpec& spec);

} // namespace rarf
