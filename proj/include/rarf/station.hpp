#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

namespace rarf {

/// A measurement site; the unit of retrieval.
struct Station {
    std::string id;
    double lat = 0.0;       // degrees, [-90, 90]
    double lon = 0.0;       // degrees, [-180, 180]
    double elevation = 0.0; // meters

    void validate() const;
};

/// Ordered collection of stations with unique ids.
class StationRegistry {
public:
    StationRegistry() = default;
    explicit StationRegistry(std::vector<Station> stations);

    void add(Station st);

    const std::vector<Station>& all() const { return stations_; }
    std::size_t size() const { return stations_.size(); }
    bool contains(const std::string& id) const { return index_.count(id) > 0; }
    const Station& by_id(const std::string& id) const;
    const Station& at(std::size_t i) const { return stations_[i]; }

private:
    std::vector<Station> stations_;
    std::unordered_map<std::string, std::size_t> index_;
};

} // namespace rarf
