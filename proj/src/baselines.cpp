#include "rarf/baselines.hpp"

#include <cmath>
#include <numeric>

#include "rarf/error.hpp"

namespace rarf {

namespace {

void require(const std::vector<double>& ctx, std::size_t need, const char* what) {
    if (ctx.size() < need)
        throw invalid_error(std::string(what) + ": needs at least " + std::to_string(need) +
                            " context hours, got " + std::to_string(ctx.size()));
}

// (A + ridge I) x = b, Gaussian elimination with partial pivoting.
std::vector<double> solve(std::vector<double> a, std::vector<double> b, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) a[i * n + i] += 1e-8;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a[r * n + col]) > std::abs(a[piv * n + col])) piv = r;
        if (piv != col) {
            for (std::size_t c = 0; c < n; ++c) std::swap(a[col * n + c], a[piv * n + c]);
            std::swap(b[col], b[piv]);
        }
        const double d = a[col * n + col];
        if (d == 0.0) throw invalid_error("autoreg: singular normal equations");
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a[r * n + col] / d;
            if (f == 0.0) continue;
            for (std::size_t c = col; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(n);
    for (std::size_t i = n; i-- > 0;) {
        double acc = b[i];
        for (std::size_t c = i + 1; c < n; ++c) acc -= a[i * n + c] * x[c];
        x[i] = acc / a[i * n + i];
    }
    return x;
}

} // namespace

std::vector<double> baseline_last_value(const std::vector<double>& ctx, std::size_t horizon) {
    require(ctx, 1, "last_value");
    return std::vector<double>(horizon, ctx.back());
}

std::vector<double> baseline_moving_average(const std::vector<double>& ctx, std::size_t horizon,
                                            std::size_t window) {
    require(ctx, window, "moving_average");
    const double m =
        std::accumulate(ctx.end() - static_cast<std::ptrdiff_t>(window), ctx.end(), 0.0) /
        static_cast<double>(window);
    return std::vector<double>(horizon, m);
}

std::vector<double> baseline_persistence(const std::vector<double>& ctx, std::size_t horizon,
                                         std::size_t block) {
    require(ctx, block, "persistence");
    std::vector<double> out(horizon);
    for (std::size_t h = 0; h < horizon; ++h)
        out[h] = ctx[ctx.size() - block + (h % block)];
    return out;
}

std::vector<double> baseline_seasonal_naive(const std::vector<double>& ctx, std::size_t horizon,
                                            std::size_t period) {
    require(ctx, period, "seasonal_naive");
    std::vector<double> out(horizon);
    for (std::size_t h = 0; h < horizon; ++h)
        out[h] = ctx[ctx.size() - period + (h % period)];
    return out;
}

std::vector<double> autoreg_coefficients(const std::vector<double>& ctx, std::size_t order) {
    require(ctx, 2 * order + 2, "autoreg");
    const double mean = std::accumulate(ctx.begin(), ctx.end(), 0.0) /
                        static_cast<double>(ctx.size());
    const std::size_t rows = ctx.size() - order;
    // normal equations on the demeaned series, lags 1..order
    std::vector<double> xtx(order * order, 0.0), xty(order, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        const double y = ctx[r + order] - mean;
        for (std::size_t i = 0; i < order; ++i) {
            const double xi = ctx[r + order - 1 - i] - mean;
            xty[i] += xi * y;
            for (std::size_t j = i; j < order; ++j) {
                const double xj = ctx[r + order - 1 - j] - mean;
                xtx[i * order + j] += xi * xj;
            }
        }
    }
    for (std::size_t i = 0; i < order; ++i)
        for (std::size_t j = 0; j < i; ++j) xtx[i * order + j] = xtx[j * order + i];
    return solve(std::move(xtx), std::move(xty), order);
}

std::vector<double> baseline_autoreg(const std::vector<double>& ctx, std::size_t horizon,
                                     std::size_t order) {
    const std::vector<double> beta = autoreg_coefficients(ctx, order);
    const double mean = std::accumulate(ctx.begin(), ctx.end(), 0.0) /
                        static_cast<double>(ctx.size());
    std::vector<double> hist(ctx.end() - static_cast<std::ptrdiff_t>(order), ctx.end());
    for (double& v : hist) v -= mean;
    std::vector<double> out(horizon);
    for (std::size_t h = 0; h < horizon; ++h) {
        double pred = 0.0;
        for (std::size_t i = 0; i < order; ++i) pred += beta[i] * hist[hist.size() - 1 - i];
        hist.push_back(pred);
        out[h] = pred + mean;
    }
    return out;
}

std::vector<std::pair<std::string, std::vector<double>>> all_baselines(
    const std::vector<double>& ctx, std::size_t horizon) {
    return {
        {"last_value", baseline_last_value(ctx, horizon)},
        {"moving_average", baseline_moving_average(ctx, horizon)},
        {"persistence", baseline_persistence(ctx, horizon)},
        {"seasonal_naive", baseline_seasonal_naive(ctx, horizon)},
        {"autoreg", baseline_autoreg(ctx, horizon)},
    };
}

} // namespace rarf
