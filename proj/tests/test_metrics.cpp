#include <cmath>

#include "doctest.h"
#include "rarf/error.hpp"
#include "rarf/metrics.hpp"
#include "rarf/rng.hpp"

using namespace rarf;

namespace {

// Numeric-integration oracle for the CRPS integral
// int (Phi((x-mu)/sigma) - 1{x >= y})^2 dx, trapezoid rule.
double crps_by_integration(double mu, double sigma, double y) {
    const double lo = mu - 14.0 * sigma - std::abs(y - mu);
    const double hi = mu + 14.0 * sigma + std::abs(y - mu);
    const std::size_t n = 400000;
    const double dx = (hi - lo) / static_cast<double>(n);
    double acc = 0.0;
    for (std::size_t i = 0; i <= n; ++i) {
        const double x = lo + static_cast<double>(i) * dx;
        const double cdf = 0.5 * std::erfc(-(x - mu) / (sigma * std::sqrt(2.0)));
        const double step = x >= y ? 1.0 : 0.0;
        const double v = (cdf - step) * (cdf - step);
        acc += (i == 0 || i == n) ? 0.5 * v : v;
    }
    return acc * dx;
}

} // namespace

TEST_CASE("point metrics") {
    SUBCASE("perfect forecast scores zero everywhere") {
        const std::vector<double> y = {35.0, 40.0, 45.0};
        PointMetrics m = metrics_point(y, y);
        CHECK(m.mse == 0.0);
        CHECK(m.mae == 0.0);
        CHECK(m.mape == 0.0);
        CHECK(m.smape == 0.0);
    }
    SUBCASE("constant offset on constant truth has closed forms") {
        const std::vector<double> truth(10, 40.0);
        std::vector<double> pred(10, 43.0);
        PointMetrics m = metrics_point(pred, truth);
        CHECK(m.mae == doctest::Approx(3.0));
        CHECK(m.mse == doctest::Approx(9.0));
        CHECK(m.mape == doctest::Approx(100.0 * 3.0 / 40.0));
        // constant error: MSE equals MAE^2
        CHECK(m.mse == doctest::Approx(m.mae * m.mae));
    }
    SUBCASE("random case against a direct-summation oracle") {
        Rng rng(3);
        std::vector<double> pred(50), truth(50);
        for (std::size_t i = 0; i < 50; ++i) {
            pred[i] = rng.uniform(20, 60);
            truth[i] = rng.uniform(20, 60);
        }
        PointMetrics m = metrics_point(pred, truth);
        double mse = 0, mae = 0, ape = 0, sape = 0;
        for (std::size_t i = 0; i < 50; ++i) {
            const double e = pred[i] - truth[i];
            mse += e * e;
            mae += std::abs(e);
            ape += std::abs(e) / std::abs(truth[i]);
            sape += 2 * std::abs(e) / (std::abs(truth[i]) + std::abs(pred[i]));
        }
        CHECK(m.mse == doctest::Approx(mse / 50).epsilon(1e-12));
        CHECK(m.mae == doctest::Approx(mae / 50).epsilon(1e-12));
        CHECK(m.mape == doctest::Approx(100 * ape / 50).epsilon(1e-12));
        CHECK(m.smape == doctest::Approx(100 * sape / 50).epsilon(1e-12));
        CHECK(m.smape >= 0.0);
        CHECK(m.smape <= 200.0);
    }
    SUBCASE("near-zero truths are excluded and counted") {
        const std::vector<double> truth = {0.2, -0.5, 40.0, 35.0};
        const std::vector<double> pred = {5.0, 5.0, 42.0, 36.0};
        PointMetrics m = metrics_point(pred, truth);
        CHECK(m.mape_excluded == 2);
        CHECK(m.mape == doctest::Approx(100.0 * (2.0 / 40.0 + 1.0 / 35.0) / 2.0));
        // all guarded out -> NaN with full count
        PointMetrics all = metrics_point({1.0, 1.0}, {0.1, -0.3});
        CHECK(all.mape_excluded == 2);
        CHECK(std::isnan(all.mape));
    }
}

TEST_CASE("mase") {
    SUBCASE("perfect forecast scores zero") {
        std::vector<double> train(100);
        for (std::size_t i = 0; i < train.size(); ++i)
            train[i] = std::sin(static_cast<double>(i) * 0.26);
        CHECK(mase({1, 2, 3}, {1, 2, 3}, train) == 0.0);
    }
    SUBCASE("seasonal-naive forecasts on a drifting periodic series score exactly 1") {
        // base day pattern plus a fixed +d drift per day: in-sample seasonal
        // error and out-of-sample seasonal error are both exactly d
        const double d = 2.0;
        std::vector<double> train;
        for (std::size_t day = 0; day < 10; ++day)
            for (std::size_t h = 0; h < 24; ++h)
                train.push_back(std::sin(static_cast<double>(h) / 24.0 * 6.283) +
                                d * static_cast<double>(day));
        std::vector<double> preds(train.end() - 24, train.end()); // seasonal naive
        std::vector<double> truth(24);
        for (std::size_t h = 0; h < 24; ++h) truth[h] = preds[h] + d; // next day
        CHECK(mase(preds, truth, train) == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("short or constant training series raise") {
        CHECK_THROWS_AS(mase({1.0}, {1.0}, std::vector<double>(10, 1.0)), Error);
        CHECK_THROWS_AS(mase({1.0}, {1.0}, std::vector<double>(100, 5.0)), Error);
    }
}

TEST_CASE("crps") {
    SUBCASE("degenerate distribution at the truth") {
        CHECK(crps_gaussian(5.0, 1e-12, 5.0) < 1e-9);
    }
    SUBCASE("standard case against the integration oracle and the known anchor") {
        CHECK(crps_gaussian(0.0, 1.0, 0.0) == doctest::Approx(0.23369).epsilon(1e-4));
        CHECK(crps_gaussian(0.0, 1.0, 0.0) ==
              doctest::Approx(crps_by_integration(0, 1, 0)).epsilon(1e-6));
        for (auto [mu, sigma, y] : {std::tuple{1.5, 2.0, 0.3}, std::tuple{-2.0, 0.7, -1.0},
                                    std::tuple{10.0, 3.0, 22.0}}) {
            CHECK(crps_gaussian(mu, sigma, y) ==
                  doctest::Approx(crps_by_integration(mu, sigma, y)).epsilon(1e-5));
        }
    }
    SUBCASE("positive scaling scales the score linearly") {
        Rng rng(17);
        for (int rep = 0; rep < 20; ++rep) {
            const double mu = rng.uniform(-5, 5), sigma = rng.uniform(0.1, 3),
                         y = rng.uniform(-5, 5), lam = rng.uniform(0.1, 10);
            CHECK(crps_gaussian(lam * mu, lam * sigma, lam * y) ==
                  doctest::Approx(lam * crps_gaussian(mu, sigma, y)).epsilon(1e-10));
        }
    }
    SUBCASE("bounded by the absolute error plus one sigma") {
        Rng rng(19);
        for (int rep = 0; rep < 200; ++rep) {
            const double mu = rng.uniform(-5, 5), sigma = rng.uniform(0.05, 4),
                         y = rng.uniform(-8, 8);
            CHECK(crps_gaussian(mu, sigma, y) <= std::abs(y - mu) + sigma);
        }
    }
    SUBCASE("non-positive sigma raises") {
        CHECK_THROWS_AS(crps_gaussian(0, 0.0, 0), Error);
        CHECK_THROWS_AS(crps_gaussian(0, -1.0, 0), Error);
    }
}

TEST_CASE("coverage") {
    SUBCASE("exact hits and far misses") {
        const std::vector<double> mu = {1, 2, 3};
        const std::vector<double> sigma = {0.5, 0.5, 0.5};
        CHECK(coverage(mu, sigma, mu) == 1.0);
        std::vector<double> far(3);
        for (std::size_t i = 0; i < 3; ++i) far[i] = mu[i] + 10.0 * sigma[i];
        CHECK(coverage(mu, sigma, far) == 0.0);
    }
    SUBCASE("z for the 0.95 interval") {
        CHECK(normal_quantile(0.975) == doctest::Approx(1.959964).epsilon(1e-6));
    }
    SUBCASE("sampled gaussian coverage lands in [0.945, 0.955] at n = 1e5") {
        Rng rng(23);
        const std::size_t n = 100000;
        std::vector<double> mu(n, 0.0), sigma(n, 1.0), y(n);
        for (std::size_t i = 0; i < n; ++i) y[i] = rng.normal();
        const double c = coverage(mu, sigma, y);
        CHECK(c >= 0.945);
        CHECK(c <= 0.955);
    }
}

TEST_CASE("wind speed") {
    CHECK(wind_speed_mph(0, 0) == 0.0);
    CHECK(std::sqrt(3.0 * 3.0 + 4.0 * 4.0) == doctest::Approx(5.0)); // the 3-4-5 triangle
    CHECK(wind_speed_mph(3, 4) == doctest::Approx(11.18468).epsilon(1e-4));
    CHECK(wind_speed_mph(0, 5) == doctest::Approx(5.0 * 3600.0 / 1609.344).epsilon(1e-12));
}

TEST_CASE("freeze f1") {
    SUBCASE("perfect prediction with at least one freeze hour") {
        const std::vector<double> y = {30.0, 35.0, 28.0, 40.0};
        CHECK(freeze_f1(y, y) == 1.0);
    }
    SUBCASE("never predicting freeze when freezes happen scores zero") {
        const std::vector<double> pred(4, 50.0);
        const std::vector<double> truth = {30.0, 35.0, 28.0, 40.0};
        CHECK(freeze_f1(pred, truth) == 0.0);
    }
    SUBCASE("hand-counted confusion matrix") {
        // hours 0..3; pred freezes {1,2}, truth freezes {2,3}
        const std::vector<double> pred = {40, 30, 30, 40};
        const std::vector<double> truth = {40, 40, 30, 30};
        CHECK(freeze_f1(pred, truth) == doctest::Approx(0.5));
    }
    SUBCASE("true-negative padding leaves the score unchanged") {
        std::vector<double> pred = {40, 30, 30, 40};
        std::vector<double> truth = {40, 40, 30, 30};
        const double before = freeze_f1(pred, truth);
        for (int i = 0; i < 10; ++i) {
            pred.push_back(55.0);
            truth.push_back(60.0);
        }
        CHECK(freeze_f1(pred, truth) == before);
    }
    SUBCASE("threshold is strict") {
        CHECK(freeze_f1({32.0}, {32.0}) == 0.0);  // 32 is not below 32
        CHECK(freeze_f1({31.9}, {31.9}) == 1.0);
    }
}
