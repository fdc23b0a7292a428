#include <cmath>

#include "doctest.h"
#include "rarf/error.hpp"
#include "rarf/geodesy.hpp"
#include "rarf/synthetic.hpp"

using namespace rarf;

namespace {

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= static_cast<double>(a.size());
    mb /= static_cast<double>(b.size());
    double saa = 0.0, sbb = 0.0, sab = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
        sab += (a[i] - ma) * (b[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

} // namespace

TEST_CASE("generator is deterministic given the seed") {
    SynthConfig cfg;
    cfg.grid_nx = 4;
    cfg.grid_ny = 3;
    cfg.n_hours = 64;
    cfg.seed = 42;
    Dataset a = generate_synthetic(cfg);
    Dataset b = generate_synthetic(cfg);
    REQUIRE(a.stations.size() == b.stations.size());
    for (const Station& st : a.stations.all()) {
        CHECK(b.stations.by_id(st.id).elevation == st.elevation); // bit-exact
        const StationSeries& sa = a.series(st.id);
        const StationSeries& sb = b.series(st.id);
        for (std::size_t i = 0; i < sa.size(); ++i)
            for (std::size_t v = 0; v < kNumVariables; ++v)
                CHECK(sa.values[i][v] == sb.values[i][v]);
    }
    cfg.seed = 43;
    Dataset c = generate_synthetic(cfg);
    CHECK(c.series(a.stations.at(0).id).values[0][kTargetVariable] !=
          a.series(a.stations.at(0).id).values[0][kTargetVariable]);
}

TEST_CASE("length-scale ordering is enforced") {
    SynthConfig cfg;
    cfg.rho_slow_km = 500.0;
    cfg.rho_mod_km = 100.0;
    cfg.rho_fast_km = 25.0;
    CHECK_NOTHROW(cfg.validate());
    cfg.rho_fast_km = 200.0; // violates rho_mod > rho_fast
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg.rho_fast_km = 25.0;
    cfg.rho_slow_km = 50.0; // violates rho_slow > rho_mod
    CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("slow component stays correlated farther than the fast component") {
    // averaged over >= 20 pairs near 50 km separation, across 3 seeds
    double slow_acc = 0.0, fast_acc = 0.0;
    std::size_t n_pairs = 0;
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        SynthConfig cfg;
        cfg.grid_nx = 8;
        cfg.grid_ny = 8;
        cfg.n_hours = 512;
        cfg.seed = seed;
        SynthComponents comps;
        Dataset ds = generate_synthetic(cfg, &comps);
        REQUIRE(comps.band_names.size() == 3);
        const auto& stations = ds.stations.all();
        for (std::size_t i = 0; i < stations.size() && n_pairs < 60; ++i) {
            for (std::size_t j = i + 1; j < stations.size(); ++j) {
                const double d = haversine(stations[i], stations[j]);
                if (d < 35.0 || d > 75.0) continue;
                slow_acc += pearson(comps.band_fields[0][i], comps.band_fields[0][j]);
                fast_acc += pearson(comps.band_fields[2][i], comps.band_fields[2][j]);
                ++n_pairs;
                break;
            }
        }
    }
    REQUIRE(n_pairs >= 20);
    CHECK(slow_acc / static_cast<double>(n_pairs) > fast_acc / static_cast<double>(n_pairs));
}

TEST_CASE("component correlation decays with distance for every band") {
    SynthConfig cfg;
    cfg.grid_nx = 10;
    cfg.grid_ny = 1; // a line of stations: clean distance ordering
    cfg.lat_min = 45.0;
    cfg.lat_max = 45.0001;
    cfg.n_hours = 512;
    cfg.seed = 7;
    SynthComponents comps;
    generate_synthetic(cfg, &comps);
    for (std::size_t band = 0; band < 3; ++band) {
        // mean correlation of adjacent stations vs. far-apart stations
        double near = 0.0, far = 0.0;
        std::size_t n_near = 0, n_far = 0;
        for (std::size_t i = 0; i + 1 < 10; ++i) {
            near += pearson(comps.band_fields[band][i], comps.band_fields[band][i + 1]);
            ++n_near;
        }
        for (std::size_t i = 0; i < 3; ++i) {
            far += pearson(comps.band_fields[band][i], comps.band_fields[band][i + 7]);
            ++n_far;
        }
        CHECK(near / static_cast<double>(n_near) > far / static_cast<double>(n_far) - 0.05);
    }
}

TEST_CASE("synthetic series are hourly, gap free and finite") {
    SynthConfig cfg;
    cfg.grid_nx = 3;
    cfg.grid_ny = 3;
    cfg.n_hours = 100;
    Dataset ds = generate_synthetic(cfg);
    for (const Station& st : ds.stations.all()) {
        const StationSeries& s = ds.series(st.id);
        REQUIRE(s.size() == 100);
        for (std::size_t i = 1; i < s.size(); ++i) CHECK(s.hours[i] == s.hours[i - 1] + 1);
        for (const auto& row : s.values)
            for (double v : row) CHECK(std::isfinite(v));
    }
}
