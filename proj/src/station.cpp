#include "rarf/station.hpp"

#include <cmath>

#include "rarf/error.hpp"

namespace rarf {

void Station::validate() const {
    if (id.empty()) throw invalid_error("station id must not be empty");
    if (!(lat >= -90.0 && lat <= 90.0))
        throw invalid_error("station " + id + ": latitude " + std::to_string(lat) +
                            " outside [-90, 90]");
    if (!(lon >= -180.0 && lon <= 180.0))
        throw invalid_error("station " + id + ": longitude " + std::to_string(lon) +
                            " outside [-180, 180]");
    if (!std::isfinite(elevation))
        throw invalid_error("station " + id + ": elevation must be finite");
}

StationRegistry::StationRegistry(std::vector<Station> stations) {
    for (auto& st : stations) add(std::move(st));
}

void StationRegistry::add(Station st) {
    st.validate();
    if (index_.count(st.id))
        throw invalid_error("duplicate station id '" + st.id + "'");
    index_.emplace(st.id, stations_.size());
    stations_.push_back(std::move(st));
}

const Station& StationRegistry::by_id(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw invalid_error("unknown station id '" + id + "'");
    return stations_[it->second];
}

} // namespace rarf
