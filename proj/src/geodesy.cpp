#include "rarf/geodesy.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

#include "rarf/error.hpp"

namespace rarf {

double haversine(const Station& a, const Station& b) {
    constexpr double deg = 3.14159265358979323846 / 180.0;
    const double phi1 = a.lat * deg;
    const double phi2 = b.lat * deg;
    const double dphi = (b.lat - a.lat) * deg;
    const double dlam = (b.lon - a.lon) * deg;
    const double s1 = std::sin(dphi / 2.0);
    const double s2 = std::sin(dlam / 2.0);
    const double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
    return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(h)));
}

double DistanceFn::operator()(const Station& a, const Station& b) const {
    if (kind == Kind::Haversine) return haversine(a, b);
    if (!embed) throw invalid_error("embedding distance requires an embedding provider");
    const std::vector<double> ea = embed(a);
    const std::vector<double> eb = embed(b);
    if (ea.size() != eb.size())
        throw internal_error("embedding provider returned mismatched dimensions");
    double acc = 0.0;
    for (std::size_t i = 0; i < ea.size(); ++i) {
        const double d = ea[i] - eb[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

DistanceFn DistanceFn::embedding_fn(std::function<std::vector<double>(const Station&)> e) {
    DistanceFn d;
    d.kind = Kind::EmbeddingEuclidean;
    d.embed = std::move(e);
    return d;
}

void RetrievalConfig::validate() const {
    if (k_fast <= 0 || k_mod <= 0 || k_slow <= 0)
        throw config_error("retrieval k values must be positive");
    if (!(k_slow > k_mod && k_mod > k_fast))
        throw config_error("retrieval k values must satisfy k_slow > k_mod > k_fast, got (" +
                           std::to_string(k_fast) + ", " + std::to_string(k_mod) + ", " +
                           std::to_string(k_slow) + ")");
}

std::vector<int> RetrievalConfig::ks_for(const BandSpec& spec) const {
    validate();
    const std::vector<int> triple = {k_fast, k_mod, k_slow};
    const int nb = spec.band_count();
    if (nb > 3)
        throw config_error("retrieval budgets are defined for at most 3 bands (J <= 3)");
    // Fewer bands keep the slow-end budgets: J=0/1 -> {k_slow}, J=2 -> {k_mod, k_slow}.
    return std::vector<int>(triple.end() - nb, triple.end());
}

std::vector<Neighbor> retrieve(const Station& target, const StationRegistry& registry,
                               int k, const DistanceFn& d) {
    if (k < 0) throw invalid_error("retrieve: k must be >= 0");
    std::vector<Neighbor> ranked;
    ranked.reserve(registry.size());
    for (const Station& st : registry.all()) {
        if (st.id == target.id) continue;
        ranked.push_back({st.id, d(target, st)});
    }
    if (static_cast<std::size_t>(k) > ranked.size())
        throw invalid_error("retrieve: k=" + std::to_string(k) + " but only " +
                            std::to_string(ranked.size()) + " candidate stations available");
    std::sort(ranked.begin(), ranked.end(), [](const Neighbor& a, const Neighbor& b) {
        if (a.distance != b.distance) return a.distance < b.distance;
        return a.id < b.id;
    });
    ranked.resize(static_cast<std::size_t>(k));
    return ranked;
}

const std::vector<Neighbor>& Retriever::ranking(const Station& target) const {
    auto it = cache_.find(target.id);
    if (it != cache_.end()) return it->second;
    std::vector<Neighbor> full =
        rarf::retrieve(target, registry_, static_cast<int>(registry_.size()) -
                                              (registry_.contains(target.id) ? 1 : 0),
                       dist_);
    return cache_.emplace(target.id, std::move(full)).first->second;
}

std::vector<Neighbor> Retriever::retrieve(const Station& target, int k) const {
    const std::vector<Neighbor>& full = ranking(target);
    if (k < 0 || static_cast<std::size_t>(k) > full.size())
        throw invalid_error("retrieve: k=" + std::to_string(k) + " but only " +
                            std::to_string(full.size()) + " candidate stations available");
    return std::vector<Neighbor>(full.begin(), full.begin() + k);
}

RetrievalPlan Retriever::plan(const Station& target, const RetrievalConfig& cfg,
                              const BandSpec& spec) const {
    const std::vector<int> ks = cfg.ks_for(spec);
    RetrievalPlan plan;
    plan.target_id = target.id;
    plan.band_labels = spec.band_labels();
    // Single ranking, prefix-nested band lists.
    for (int k : ks) plan.bands.push_back(retrieve(target, k));
    return plan;
}

RetrievalPlan plan_retrieval(const Station& target, const StationRegistry& registry,
                             const RetrievalConfig& cfg, const BandSpec& spec) {
    DistanceFn d;
    d.kind = cfg.distance;
    if (cfg.distance == DistanceFn::Kind::EmbeddingEuclidean)
        throw invalid_error("plan_retrieval: embedding distance needs a Retriever with a provider");
    Retriever r(registry, d);
    return r.plan(target, cfg, spec);
}

std::string RetrievalPlan::to_json() const {
    nlohmann::json j;
    j["target"] = target_id;
    nlohmann::json bandsj = nlohmann::json::object();
    for (std::size_t b = 0; b < bands.size(); ++b) {
        nlohmann::json arr = nlohmann::json::array();
        for (const Neighbor& n : bands[b]) {
            arr.push_back({{"id", n.id}, {"distance_km", n.distance}});
        }
        bandsj[band_labels[b]] = std::move(arr);
    }
    j["bands"] = std::move(bandsj);
    return j.dump(2);
}

} // namespace rarf
