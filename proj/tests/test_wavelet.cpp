#include <cmath>
#include <vector>

#include "doctest.h"
#include "rarf/error.hpp"
#include "rarf/rng.hpp"
#include "rarf/wavelet.hpp"

using namespace rarf;

namespace {

double sq_norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
}

double band_energy(const BandSet& b) {
    double s = sq_norm(b.approx);
    for (const auto& d : b.details) s += sq_norm(d);
    return s;
}

std::vector<double> random_signal(std::size_t n, Rng& rng) {
    std::vector<double> x(n);
    for (double& v : x) v = rng.normal();
    return x;
}

// Reference single-level DWT as an explicit orthonormal matrix multiply;
// independent of the filter-bank implementation path.
void reference_level1(const std::vector<double>& x, WaveletFamily fam,
                      std::vector<double>& approx, std::vector<double>& detail) {
    const std::size_t n = x.size();
    std::vector<double> h, g;
    if (fam == WaveletFamily::Haar) {
        h = {1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0)};
    } else {
        const double s3 = std::sqrt(3.0), d = 4.0 * std::sqrt(2.0);
        h = {(1 + s3) / d, (3 + s3) / d, (3 - s3) / d, (1 - s3) / d};
    }
    g.resize(h.size());
    for (std::size_t m = 0; m < h.size(); ++m)
        g[m] = (m % 2 == 0 ? 1.0 : -1.0) * h[h.size() - 1 - m];
    approx.assign(n / 2, 0.0);
    detail.assign(n / 2, 0.0);
    std::vector<double> row(n);
    for (std::size_t k = 0; k < n / 2; ++k) {
        std::fill(row.begin(), row.end(), 0.0);
        for (std::size_t m = 0; m < h.size(); ++m) row[(2 * k + m) % n] += h[m];
        for (std::size_t i = 0; i < n; ++i) approx[k] += row[i] * x[i];
        std::fill(row.begin(), row.end(), 0.0);
        for (std::size_t m = 0; m < g.size(); ++m) row[(2 * k + m) % n] += g[m];
        for (std::size_t i = 0; i < n; ++i) detail[k] += row[i] * x[i];
    }
}

} // namespace

TEST_CASE("haar level-1 matches the hand values and the matrix oracle") {
    const std::vector<double> x = {1, 2, 3, 4};
    BandSet b = decompose(x, BandSpec{1, WaveletFamily::Haar});
    const double s2 = std::sqrt(2.0);
    CHECK(b.approx[0] == doctest::Approx(3.0 / s2).epsilon(1e-12));
    CHECK(b.approx[1] == doctest::Approx(7.0 / s2).epsilon(1e-12));
    CHECK(b.details[0][0] == doctest::Approx(-1.0 / s2).epsilon(1e-12));
    CHECK(b.details[0][1] == doctest::Approx(-1.0 / s2).epsilon(1e-12));

    std::vector<double> ra, rd;
    reference_level1(x, WaveletFamily::Haar, ra, rd);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(b.approx[i] == doctest::Approx(ra[i]).epsilon(1e-12));
        CHECK(b.details[0][i] == doctest::Approx(rd[i]).epsilon(1e-12));
    }
}

TEST_CASE("db2 level-1 matches the matrix oracle") {
    Rng rng(11);
    const std::vector<double> x = random_signal(16, rng);
    BandSet b = decompose(x, BandSpec{1, WaveletFamily::Db2});
    std::vector<double> ra, rd;
    reference_level1(x, WaveletFamily::Db2, ra, rd);
    for (std::size_t i = 0; i < 8; ++i) {
        CHECK(b.approx[i] == doctest::Approx(ra[i]).epsilon(1e-10));
        CHECK(b.details[0][i] == doctest::Approx(rd[i]).epsilon(1e-10));
    }
}

TEST_CASE("constant vector has zero details and scaled approximation") {
    const double c = 3.25;
    std::vector<double> x(96, c);
    BandSet b = decompose(x, BandSpec{3, WaveletFamily::Haar});
    for (const auto& d : b.details)
        for (double v : d) CHECK(v == doctest::Approx(0.0).epsilon(1e-14));
    const double expect = c * std::pow(std::sqrt(2.0), 3);
    for (double v : b.approx) CHECK(v == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("perfect reconstruction and Parseval across lengths and families") {
    Rng rng(7);
    for (WaveletFamily fam : {WaveletFamily::Haar, WaveletFamily::Db2}) {
        for (std::size_t n : {8u, 48u, 96u, 384u}) {
            for (int rep = 0; rep < 50; ++rep) {
                const std::vector<double> x = random_signal(n, rng);
                const BandSpec spec{3, fam};
                BandSet b = decompose(x, spec);
                const std::vector<double> y = reconstruct(b);
                double max_err = 0.0;
                for (std::size_t i = 0; i < n; ++i)
                    max_err = std::max(max_err, std::abs(x[i] - y[i]));
                CHECK(max_err < 1e-9);
                const double ex = sq_norm(x);
                CHECK(std::abs(ex - band_energy(b)) / ex < 1e-9);
            }
        }
    }
}

TEST_CASE("linearity of the decomposition") {
    Rng rng(13);
    const std::vector<double> x = random_signal(64, rng);
    const std::vector<double> y = random_signal(64, rng);
    const double a = 1.7, c = -0.45;
    std::vector<double> z(64);
    for (std::size_t i = 0; i < 64; ++i) z[i] = a * x[i] + c * y[i];
    const BandSpec spec{3, WaveletFamily::Db2};
    BandSet bx = decompose(x, spec), by = decompose(y, spec), bz = decompose(z, spec);
    for (int band = 0; band < spec.band_count(); ++band) {
        const auto cx = band_coefficients(bx, band);
        const auto cy = band_coefficients(by, band);
        const auto cz = band_coefficients(bz, band);
        for (std::size_t i = 0; i < cz.size(); ++i)
            CHECK(cz[i] == doctest::Approx(a * cx[i] + c * cy[i]).epsilon(1e-10));
    }
}

TEST_CASE("zeroing the finest detail removes exactly its energy") {
    Rng rng(17);
    const std::vector<double> x = random_signal(96, rng);
    const BandSpec spec{3, WaveletFamily::Haar};
    BandSet b = decompose(x, spec);
    const double d1_energy = sq_norm(b.details[0]);
    b.details[0].assign(b.details[0].size(), 0.0);
    const std::vector<double> y = reconstruct(b);
    CHECK(std::abs(sq_norm(x) - (sq_norm(y) + d1_energy)) < 1e-9);
}

TEST_CASE("zero coefficients reconstruct to the zero vector") {
    BandSet b;
    b.spec = BandSpec{3, WaveletFamily::Haar};
    b.original_length = 48;
    b.details = {std::vector<double>(24, 0.0), std::vector<double>(12, 0.0),
                 std::vector<double>(6, 0.0)};
    b.approx.assign(6, 0.0);
    for (double v : reconstruct(b)) CHECK(v == 0.0);
}

TEST_CASE("band bookkeeping") {
    const BandSpec spec{3, WaveletFamily::Haar};
    SUBCASE("context lengths for N=96 decrease fast to slow") {
        std::vector<double> x(96, 0.0);
        BandSet b = decompose(x, spec);
        CHECK(b.details[0].size() == 48);
        CHECK(b.details[1].size() == 24);
        CHECK(b.details[2].size() == 12);
        CHECK(b.approx.size() == 12);
    }
    SUBCASE("forecast lengths") {
        CHECK(band_forecast_lengths(48, spec) == std::vector<std::size_t>{24, 12, 6, 6});
        CHECK(band_forecast_lengths(8, spec) == std::vector<std::size_t>{4, 2, 1, 1});
        CHECK_THROWS_AS(band_forecast_lengths(50, spec), Error);
    }
    SUBCASE("indivisible input length rejected") {
        std::vector<double> x(50, 0.0);
        CHECK_THROWS_AS(decompose(x, spec), Error);
    }
    SUBCASE("band labels and channel counts") {
        CHECK(spec.band_labels() == std::vector<std::string>{"fast", "moderate", "slow"});
        CHECK(band_channels(spec, 0) == 1);
        CHECK(band_channels(spec, 2) == 2);
        CHECK(BandSpec{0}.band_labels() == std::vector<std::string>{"full"});
    }
}

TEST_CASE("band coefficient round trip through bands_from_coefficients") {
    Rng rng(23);
    const std::vector<double> x = random_signal(48, rng);
    for (int levels : {0, 1, 2, 3}) {
        const BandSpec spec{levels, WaveletFamily::Haar};
        BandSet b = decompose(x, spec);
        std::vector<std::vector<double>> per_band;
        for (int band = 0; band < spec.band_count(); ++band)
            per_band.push_back(band_coefficients(b, band));
        const std::vector<double> y = reconstruct(bands_from_coefficients(per_band, 48, spec));
        for (std::size_t i = 0; i < x.size(); ++i)
            CHECK(y[i] == doctest::Approx(x[i]).epsilon(1e-10));
    }
}

TEST_CASE("empty input decomposes to empty bands") {
    BandSet b = decompose({}, BandSpec{3, WaveletFamily::Haar});
    CHECK(b.approx.empty());
    for (const auto& d : b.details) CHECK(d.empty());
    CHECK(reconstruct(b).empty());
}
