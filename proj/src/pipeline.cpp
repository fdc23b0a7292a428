#include <cmath>

#include "rarf/error.hpp"
#include "rarf/model.hpp"

namespace rarf {

namespace {

// Decompose each variable column of a z-scored context block and stack the
// band's channels: column index = channel * n_vars + variable.
Tensor band_context_matrix(const std::vector<double>& flat, std::size_t len, int band,
                           const BandSpec& spec) {
    const std::size_t rows = band_channel_length(len, spec, band);
    const int chans = band_channels(spec, band);
    Tensor out({rows, static_cast<std::size_t>(chans) * kNumVariables});
    if (len == 0) return out;
    std::vector<double> col(len);
    for (std::size_t v = 0; v < kNumVariables; ++v) {
        for (std::size_t t = 0; t < len; ++t) col[t] = flat[t * kNumVariables + v];
        const BandSet bands = decompose(col, spec);
        const std::vector<double> coeffs = band_coefficients(bands, band);
        for (int ch = 0; ch < chans; ++ch) {
            const std::size_t c = static_cast<std::size_t>(ch) * kNumVariables + v;
            for (std::size_t t = 0; t < rows; ++t)
                out.data[t * out.shape[1] + c] = coeffs[static_cast<std::size_t>(ch) * rows + t];
        }
    }
    return out;
}

} // namespace

ForecastInput assemble_input(const Forecaster& model, const Dataset& ds, const Station& target,
                             std::int64_t horizon_start_hour,
                             const std::vector<double>& target_ctx, std::size_t target_ctx_len,
                             const RetrievalPlan& plan) {
    const ModelConfig& cfg = model.config();
    const BandSpec spec = cfg.band_spec();
    const std::size_t div = std::size_t{1} << cfg.levels;
    if (target_ctx_len % div != 0)
        throw invalid_error("target context length " + std::to_string(target_ctx_len) +
                            " not divisible by 2^levels");
    if (target_ctx_len > cfg.context_len)
        throw invalid_error("target context longer than the model context length");
    if (target_ctx.size() != target_ctx_len * kNumVariables)
        throw invalid_error("target context buffer size mismatch");
    if (cfg.retrieval && static_cast<int>(plan.bands.size()) != cfg.n_bands())
        throw invalid_error("retrieval plan has " + std::to_string(plan.bands.size()) +
                            " bands but the model expects " + std::to_string(cfg.n_bands()));

    ForecastInput in;
    for (int b = 0; b < cfg.n_bands(); ++b) {
        BandInput band;
        band.target = target;
        band.target_ctx = band_context_matrix(target_ctx, target_ctx_len, b, spec);
        if (cfg.retrieval) {
            for (const Neighbor& nb : plan.bands[static_cast<std::size_t>(b)]) {
                auto ctx = context_before(ds, nb.id, horizon_start_hour, cfg.context_len);
                if (!ctx) continue; // gap in this station's history at the anchor
                band.neighbor_ctx.push_back(
                    band_context_matrix(*ctx, cfg.context_len, b, spec));
                band.neighbors.push_back(ds.stations.by_id(nb.id));
                band.neighbor_km.push_back(nb.distance);
            }
            if (band.neighbor_ctx.empty())
                throw invalid_error("band " + std::to_string(b) +
                                    ": no retrieved station has a complete context window at " +
                                    epoch_hour_to_iso(horizon_start_hour));
        }
        in.bands.push_back(std::move(band));
    }
    return in;
}

GaussianForecast forecast_zero_shot(const Forecaster& model, const Dataset& ds,
                                    const Station& target, std::int64_t horizon_start_hour,
                                    const std::vector<double>& target_ctx,
                                    std::size_t target_ctx_len, const RetrievalPlan& plan) {
    return model.forecast(assemble_input(model, ds, target, horizon_start_hour, target_ctx,
                                         target_ctx_len, plan));
}

} // namespace rarf
