#pragma once

#include <cstddef>
#include <vector>

namespace rarf {

struct PointMetrics {
    double mse = 0.0;
    double mae = 0.0;
    double mape = 0.0;  // percent; NaN when every hour was guarded out
    double smape = 0.0; // percent
    std::size_t mape_excluded = 0; // hours skipped by the |truth| < 1 F guard
    std::size_t n = 0;
};

/// MSE / MAE / MAPE / sMAPE over aligned series. Hours with |truth| < 1 deg F
/// are excluded from the percentage metrics (the count is reported).
PointMetrics metrics_point(const std::vector<double>& preds, const std::vector<double>& truths);

/// MAE scaled by the in-sample seasonal-naive MAE of `train_series`.
double mase(const std::vector<double>& preds, const std::vector<double>& truths,
            const std::vector<double>& train_series, std::size_t period = 24);

/// Closed-form CRPS of a Gaussian forecast:
/// sigma * (z (2 Phi(z) - 1) + 2 phi(z) - 1/sqrt(pi)), z = (y - mu) / sigma.
double crps_gaussian(double mu, double sigma, double y);

/// Fraction of truths inside the central `level` interval mu +/- z sigma.
double coverage(const std::vector<double>& mu, const std::vector<double>& sigma,
                const std::vector<double>& truths, double level = 0.95);

/// Inverse standard normal CDF (Acklam's rational approximation plus one
/// Halley refinement); coverage(0.95) uses z_{0.975} = 1.959964.
double normal_quantile(double p);

/// sqrt(u^2 + v^2) converted from m/s to mph.
double wind_speed_mph(double u, double v);

/// F1 for freeze events (strict `< threshold`), 0 when precision + recall = 0.
double freeze_f1(const std::vector<double>& pred_f, const std::vector<double>& truth_f,
                 double threshold = 32.0);

/// Gaussian negative log-likelihood, summed over timesteps, no constant term:
/// 0.5 * sum_t (log sigma2_t + (y_t - mu_t)^2 / sigma2_t).
double loss_nll(const std::vector<double>& mu, const std::vector<double>& sigma2,
                const std::vector<double>& truths);

double loss_mse(const std::vector<double>& pred, const std::vector<double>& truth);

} // namespace rarf
