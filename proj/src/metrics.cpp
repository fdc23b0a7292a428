#include "rarf/metrics.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "rarf/error.hpp"

namespace rarf {

namespace {

void check_aligned(const std::vector<double>& a, const std::vector<double>& b,
                   const char* what) {
    if (a.size() != b.size())
        throw invalid_error(std::string(what) + ": length mismatch " + std::to_string(a.size()) +
                            " vs " + std::to_string(b.size()));
    if (a.empty()) throw invalid_error(std::string(what) + ": empty series");
}

constexpr double kInvSqrt2Pi = 0.3989422804014326779399460599344;
constexpr double kInvSqrtPi = 0.5641895835477562869480794515608;

double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }
double std_normal_pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }

} // namespace

PointMetrics metrics_point(const std::vector<double>& preds, const std::vector<double>& truths) {
    check_aligned(preds, truths, "metrics_point");
    PointMetrics m;
    m.n = preds.size();
    double ape = 0.0, sape = 0.0;
    std::size_t used = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const double e = preds[i] - truths[i];
        m.mse += e * e;
        m.mae += std::abs(e);
        if (std::abs(truths[i]) < 1.0) {
            ++m.mape_excluded;
            continue;
        }
        ape += std::abs(e) / std::abs(truths[i]);
        sape += 2.0 * std::abs(e) / (std::abs(truths[i]) + std::abs(preds[i]));
        ++used;
    }
    const double n = static_cast<double>(preds.size());
    m.mse /= n;
    m.mae /= n;
    if (used > 0) {
        m.mape = 100.0 * ape / static_cast<double>(used);
        m.smape = 100.0 * sape / static_cast<double>(used);
    } else {
        m.mape = std::numeric_limits<double>::quiet_NaN();
        m.smape = std::numeric_limits<double>::quiet_NaN();
    }
    return m;
}

double mase(const std::vector<double>& preds, const std::vector<double>& truths,
            const std::vector<double>& train_series, std::size_t period) {
    check_aligned(preds, truths, "mase");
    if (train_series.size() <= period)
        throw invalid_error("mase: training series shorter than one season");
    double denom = 0.0;
    for (std::size_t t = period; t < train_series.size(); ++t)
        denom += std::abs(train_series[t] - train_series[t - period]);
    denom /= static_cast<double>(train_series.size() - period);
    if (denom <= 0.0)
        throw invalid_error("mase: seasonal-naive in-sample error is zero");
    double mae = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) mae += std::abs(preds[i] - truths[i]);
    mae /= static_cast<double>(preds.size());
    return mae / denom;
}

double crps_gaussian(double mu, double sigma, double y) {
    if (!(sigma > 0.0)) throw invalid_error("crps_gaussian: sigma must be positive");
    const double z = (y - mu) / sigma;
    return sigma * (z * (2.0 * std_normal_cdf(z) - 1.0) + 2.0 * std_normal_pdf(z) - kInvSqrtPi);
}

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw invalid_error("normal_quantile: p must be in (0,1)");
    // Acklam's approximation
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;
    double x;
    if (p < plow) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - plow) {
        const double q = p - 0.5, r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    // one Halley step against the exact CDF
    const double e = std_normal_cdf(x) - p;
    const double u = e / std_normal_pdf(x);
    x -= u / (1.0 + 0.5 * x * u);
    return x;
}

double coverage(const std::vector<double>& mu, const std::vector<double>& sigma,
                const std::vector<double>& truths, double level) {
    check_aligned(mu, truths, "coverage");
    check_aligned(sigma, truths, "coverage");
    const double z = normal_quantile(0.5 + level / 2.0);
    std::size_t inside = 0;
    for (std::size_t i = 0; i < truths.size(); ++i) {
        if (std::abs(truths[i] - mu[i]) <= z * sigma[i]) ++inside;
    }
    return static_cast<double>(inside) / static_cast<double>(truths.size());
}

double wind_speed_mph(double u, double v) {
    return std::sqrt(u * u + v * v) * (3600.0 / 1609.344);
}

double freeze_f1(const std::vector<double>& pred_f, const std::vector<double>& truth_f,
                 double threshold) {
    check_aligned(pred_f, truth_f, "freeze_f1");
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < pred_f.size(); ++i) {
        const bool p = pred_f[i] < threshold;
        const bool t = truth_f[i] < threshold;
        if (p && t) ++tp;
        else if (p && !t) ++fp;
        else if (!p && t) ++fn;
    }
    if (tp == 0) return 0.0;
    const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    const double recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
    return 2.0 * precision * recall / (precision + recall);
}

double loss_nll(const std::vector<double>& mu, const std::vector<double>& sigma2,
                const std::vector<double>& truths) {
    check_aligned(mu, truths, "loss_nll");
    check_aligned(sigma2, truths, "loss_nll");
    double acc = 0.0;
    for (std::size_t t = 0; t < truths.size(); ++t) {
        if (!(sigma2[t] > 0.0)) throw invalid_error("loss_nll: sigma2 must be positive");
        const double e = truths[t] - mu[t];
        acc += std::log(sigma2[t]) + e * e / sigma2[t];
    }
    return 0.5 * acc;
}

double loss_mse(const std::vector<double>& pred, const std::vector<double>& truth) {
    check_aligned(pred, truth, "loss_mse");
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double e = pred[i] - truth[i];
        acc += e * e;
    }
    return acc / static_cast<double>(pred.size());
}

} // namespace rarf
