#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "rarf/error.hpp"
#include "rarf/geodesy.hpp"
#include "rarf/rng.hpp"

using namespace rarf;

namespace {

Station st(const std::string& id, double lat, double lon, double elev = 0.0) {
    return Station{id, lat, lon, elev};
}

StationRegistry random_registry(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    StationRegistry reg;
    for (std::size_t i = 0; i < n; ++i) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "R%04zu", i);
        reg.add(st(buf, rng.uniform(-80.0, 80.0), rng.uniform(-179.0, 179.0)));
    }
    return reg;
}

// Independent reference: spherical law of cosines in long double.
double law_of_cosines_km(const Station& a, const Station& b) {
    const long double deg = 3.141592653589793238462643383279502884L / 180.0L;
    const long double f1 = a.lat * deg, f2 = b.lat * deg;
    const long double dl = (b.lon - a.lon) * deg;
    long double c = std::sin(f1) * std::sin(f2) + std::cos(f1) * std::cos(f2) * std::cos(dl);
    c = std::min<long double>(1.0L, std::max<long double>(-1.0L, c));
    return static_cast<double>(6371.0L * std::acos(c));
}

} // namespace

TEST_CASE("haversine basics") {
    const Station a = st("a", 48.75, -124.0);
    CHECK(haversine(a, a) == 0.0);
    CHECK(haversine(st("e0", 0.0, 0.0), st("e180", 0.0, 180.0)) ==
          doctest::Approx(3.14159265358979324 * 6371.0).epsilon(1e-12));
    // box corners against the independent great-circle oracle
    const Station b = st("b", 44.0, -120.24);
    const double oracle = law_of_cosines_km(a, b);
    CHECK(haversine(a, b) == doctest::Approx(oracle).epsilon(1e-9));
    CHECK(haversine(a, b) == doctest::Approx(601.628).epsilon(1e-4));
}

TEST_CASE("haversine symmetry and triangle inequality on random triples") {
    Rng rng(3);
    for (int rep = 0; rep < 500; ++rep) {
        const Station a = st("a", rng.uniform(-89, 89), rng.uniform(-179, 179));
        const Station b = st("b", rng.uniform(-89, 89), rng.uniform(-179, 179));
        const Station c = st("c", rng.uniform(-89, 89), rng.uniform(-179, 179));
        const double ab = haversine(a, b), ba = haversine(b, a);
        CHECK(ab == doctest::Approx(ba).epsilon(1e-14));
        CHECK(ab >= 0.0);
        CHECK(ab <= haversine(a, c) + haversine(c, b) + 1e-9);
    }
}

TEST_CASE("retrieve excludes the target and handles the singleton registry") {
    StationRegistry reg;
    reg.add(st("only", 10.0, 10.0));
    const DistanceFn d = DistanceFn::haversine_fn();
    CHECK(retrieve(reg.by_id("only"), reg, 0, d).empty());
    CHECK_THROWS_AS(retrieve(reg.by_id("only"), reg, 1, d), Error);
}

TEST_CASE("retrieve picks the nearest collinear equatorial station") {
    StationRegistry reg;
    reg.add(st("t", 0.0, 0.0));
    reg.add(st("n1", 0.0, 1.0));
    reg.add(st("n2", 0.0, 2.0));
    auto out = retrieve(reg.by_id("t"), reg, 1, DistanceFn::haversine_fn());
    REQUIRE(out.size() == 1);
    CHECK(out[0].id == "n1");
}

TEST_CASE("retrieve matches the brute-force oracle on 500 random stations") {
    StationRegistry reg = random_registry(500, 99);
    const Station target = st("tgt", 45.0, -120.0);
    const DistanceFn d = DistanceFn::haversine_fn();
    // oracle: full sort by (distance, id)
    std::vector<Neighbor> oracle;
    for (const Station& s : reg.all()) oracle.push_back({s.id, haversine(target, s)});
    std::stable_sort(oracle.begin(), oracle.end(), [](const Neighbor& x, const Neighbor& y) {
        if (x.distance != y.distance) return x.distance < y.distance;
        return x.id < y.id;
    });
    for (int k : {1, 10, 50}) {
        const auto got = retrieve(target, reg, k, d);
        REQUIRE(got.size() == static_cast<std::size_t>(k));
        for (int i = 0; i < k; ++i) {
            CHECK(got[static_cast<std::size_t>(i)].id == oracle[static_cast<std::size_t>(i)].id);
            CHECK(got[static_cast<std::size_t>(i)].distance ==
                  doctest::Approx(oracle[static_cast<std::size_t>(i)].distance));
        }
    }
}

TEST_CASE("retrieve is permutation invariant and prefix nested") {
    StationRegistry reg = random_registry(120, 5);
    const Station target = st("tgt", 20.0, 30.0);
    const DistanceFn d = DistanceFn::haversine_fn();
    const auto k40 = retrieve(target, reg, 40, d);

    // shuffled registry
    std::vector<Station> shuffled(reg.all());
    Rng rng(123);
    rng.shuffle(shuffled);
    StationRegistry reg2(shuffled);
    const auto k40b = retrieve(target, reg2, 40, d);
    REQUIRE(k40.size() == k40b.size());
    for (std::size_t i = 0; i < k40.size(); ++i) CHECK(k40[i].id == k40b[i].id);

    // nesting
    const auto k10 = retrieve(target, reg, 10, d);
    for (std::size_t i = 0; i < k10.size(); ++i) CHECK(k10[i].id == k40[i].id);
}

TEST_CASE("retrieval config enforces strict monotone budgets") {
    RetrievalConfig bad;
    bad.k_fast = 50;
    bad.k_mod = 25;
    bad.k_slow = 10;
    CHECK_THROWS_AS(bad.validate(), Error);
    RetrievalConfig equal;
    equal.k_fast = 10;
    equal.k_mod = 10;
    equal.k_slow = 50;
    CHECK_THROWS_AS(equal.validate(), Error);
    RetrievalConfig good; // (10, 25, 50)
    CHECK_NOTHROW(good.validate());
    CHECK(good.ks_for(BandSpec{3}) == std::vector<int>{10, 25, 50});
    CHECK(good.ks_for(BandSpec{0}) == std::vector<int>{50});
    CHECK(good.ks_for(BandSpec{2}) == std::vector<int>{25, 50});
}

TEST_CASE("plan_retrieval produces nested bands of the configured sizes") {
    StationRegistry reg = random_registry(300, 42);
    const Station target = st("tgt", 0.0, 0.0);
    RetrievalConfig cfg;
    RetrievalPlan plan = plan_retrieval(target, reg, cfg, BandSpec{3});
    REQUIRE(plan.bands.size() == 3);
    CHECK(plan.bands[0].size() == 10);
    CHECK(plan.bands[1].size() == 25);
    CHECK(plan.bands[2].size() == 50);
    for (std::size_t b = 0; b + 1 < plan.bands.size(); ++b) {
        CHECK(plan.bands[b].size() < plan.bands[b + 1].size());
        for (std::size_t i = 0; i < plan.bands[b].size(); ++i)
            CHECK(plan.bands[b][i].id == plan.bands[b + 1][i].id);
    }
    for (const auto& band : plan.bands) {
        for (std::size_t i = 1; i < band.size(); ++i)
            CHECK(band[i - 1].distance <= band[i].distance);
        for (const Neighbor& n : band) CHECK(n.id != target.id);
    }
    CHECK(plan.to_json().find("\"fast\"") != std::string::npos);
}

TEST_CASE("embedding distance changes membership but never the sizes") {
    StationRegistry reg = random_registry(80, 77);
    const Station target = st("tgt", 10.0, 10.0);
    RetrievalConfig cfg;
    cfg.k_fast = 3;
    cfg.k_mod = 6;
    cfg.k_slow = 12;
    Retriever hav(reg, DistanceFn::haversine_fn());
    // synthetic embedding: wildly nonlinear in the coordinates
    Retriever emb(reg, DistanceFn::embedding_fn([](const Station& s) {
        return std::vector<double>{std::sin(s.lon * 0.5), std::cos(s.lat * 0.31),
                                   std::sin(s.lat + s.lon)};
    }));
    const RetrievalPlan p1 = hav.plan(target, cfg, BandSpec{3});
    const RetrievalPlan p2 = emb.plan(target, cfg, BandSpec{3});
    for (std::size_t b = 0; b < 3; ++b) CHECK(p1.bands[b].size() == p2.bands[b].size());
}

TEST_CASE("distance function contract for embeddings") {
    const DistanceFn d = DistanceFn::embedding_fn(
        [](const Station& s) { return std::vector<double>{s.lat, 2.0 * s.lon}; });
    const Station a = st("a", 1.0, 2.0), b = st("b", 4.0, 6.0);
    CHECK(d(a, a) == 0.0);
    CHECK(d(a, b) == doctest::Approx(d(b, a)));
    CHECK(d(a, b) == doctest::Approx(std::sqrt(9.0 + 64.0)));
}
