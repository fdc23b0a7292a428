#include "rarf/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "json.hpp"

#include "rarf/baselines.hpp"
#include "rarf/error.hpp"
#include "rarf/metrics.hpp"
#include "rarf/rng.hpp"

namespace rarf {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

nlohmann::json maybe(double v) {
    return std::isnan(v) ? nlohmann::json() : nlohmann::json(v);
}

nlohmann::json metrics_json(const StationMetrics& m, bool probabilistic) {
    nlohmann::json j{{"mse", m.mse},
                     {"mae", m.mae},
                     {"mape", maybe(m.mape)},
                     {"smape", maybe(m.smape)},
                     {"mase", maybe(m.mase)},
                     {"n_windows", m.n_windows},
                     {"mape_excluded_hours", m.mape_excluded}};
    if (probabilistic) {
        j["nll"] = maybe(m.nll);
        j["crps"] = maybe(m.crps);
        j["coverage95"] = maybe(m.coverage95);
    }
    return j;
}

double mean_ignoring_nan(const std::vector<double>& v) {
    double acc = 0.0;
    std::size_t n = 0;
    for (double x : v) {
        if (!std::isnan(x)) {
            acc += x;
            ++n;
        }
    }
    return n == 0 ? kNaN : acc / static_cast<double>(n);
}

// Raw (physical-unit) target-variable slice ending just before the horizon.
std::vector<double> raw_target_context(const Dataset& ds, const std::string& id,
                                       std::int64_t horizon_start, std::size_t len) {
    const StationSeries& s = ds.series(id);
    auto idx = s.contiguous_index(horizon_start - static_cast<std::int64_t>(len), len);
    if (!idx) throw invalid_error("missing context for station '" + id + "'");
    std::vector<double> out(len);
    for (std::size_t t = 0; t < len; ++t) out[t] = s.values[*idx + t][kTargetVariable];
    return out;
}

std::vector<double> station_train_series(const Dataset& ds, const std::string& id,
                                         const SplitSpec& split) {
    const StationSeries& s = ds.series(id);
    const HourRange r = train_range(s, split);
    std::vector<double> out;
    for (std::size_t i = 0; i < s.size(); ++i)
        if (s.hours[i] >= r.lo && s.hours[i] < r.hi) out.push_back(s.values[i][kTargetVariable]);
    return out;
}

struct Accum {
    std::vector<double> preds, truths;       // pooled hours
    std::vector<double> mus, sigmas;         // probabilistic pooled hours
    std::vector<double> mse_h, mae_h;        // per-hour sums
    std::size_t windows = 0;

    void resize(std::size_t horizon) {
        mse_h.assign(horizon, 0.0);
        mae_h.assign(horizon, 0.0);
    }
};

StationMetrics finish_station(const Accum& a, bool probabilistic,
                              const std::vector<double>& train_series) {
    StationMetrics m;
    const PointMetrics pm = metrics_point(a.preds, a.truths);
    m.mse = pm.mse;
    m.mae = pm.mae;
    m.mape = pm.mape;
    m.smape = pm.smape;
    m.mape_excluded = pm.mape_excluded;
    m.n_windows = a.windows;
    m.nll = kNaN;
    m.crps = kNaN;
    m.coverage95 = kNaN;
    try {
        m.mase = mase(a.preds, a.truths, train_series);
    } catch (const Error&) {
        m.mase = kNaN;
    }
    if (probabilistic) {
        std::vector<double> sigma2(a.sigmas.size());
        for (std::size_t i = 0; i < a.sigmas.size(); ++i) sigma2[i] = a.sigmas[i] * a.sigmas[i];
        m.nll = loss_nll(a.mus, sigma2, a.truths) / static_cast<double>(a.truths.size());
        double crps_acc = 0.0;
        for (std::size_t i = 0; i < a.truths.size(); ++i)
            crps_acc += crps_gaussian(a.mus[i], a.sigmas[i], a.truths[i]);
        m.crps = crps_acc / static_cast<double>(a.truths.size());
        m.coverage95 = coverage(a.mus, a.sigmas, a.truths, 0.95);
    }
    return m;
}

StationMetrics average_stations(const std::vector<std::pair<std::string, StationMetrics>>& per) {
    StationMetrics avg;
    auto collect = [&per](auto field) {
        std::vector<double> v;
        for (const auto& [id, m] : per) v.push_back(m.*field);
        return v;
    };
    avg.mse = mean_ignoring_nan(collect(&StationMetrics::mse));
    avg.mae = mean_ignoring_nan(collect(&StationMetrics::mae));
    avg.mape = mean_ignoring_nan(collect(&StationMetrics::mape));
    avg.smape = mean_ignoring_nan(collect(&StationMetrics::smape));
    avg.mase = mean_ignoring_nan(collect(&StationMetrics::mase));
    avg.nll = mean_ignoring_nan(collect(&StationMetrics::nll));
    avg.crps = mean_ignoring_nan(collect(&StationMetrics::crps));
    avg.coverage95 = mean_ignoring_nan(collect(&StationMetrics::coverage95));
    for (const auto& [id, m] : per) {
        avg.n_windows += m.n_windows;
        avg.mape_excluded += m.mape_excluded;
    }
    return avg;
}

} // namespace

std::string MetricReport::to_json() const {
    nlohmann::json j;
    j["probabilistic"] = probabilistic;
    j["horizon_hours"] = horizon;
    j["average"] = metrics_json(average, probabilistic);
    nlohmann::json st = nlohmann::json::object();
    for (const auto& [id, m] : per_station) st[id] = metrics_json(m, probabilistic);
    j["per_station"] = std::move(st);
    j["mse_per_hour"] = mse_per_hour;
    j["mae_per_hour"] = mae_per_hour;
    return j.dump(2);
}

std::string MetricReport::per_hour_csv() const {
    std::string s = "hour,mse,mae\n";
    for (std::size_t h = 0; h < mse_per_hour.size(); ++h) {
        s += std::to_string(h + 1) + "," + std::to_string(mse_per_hour[h]) + "," +
             std::to_string(mae_per_hour[h]) + "\n";
    }
    return s;
}

MetricReport evaluate_model(const Forecaster& model, const Dataset& ds, const SplitSpec& split,
                            const std::vector<std::string>& station_ids,
                            const EvalOptions& opts) {
    const ModelConfig& cfg = model.config();
    const std::size_t ctx_hours = opts.context_hours.value_or(cfg.context_len);
    if (ctx_hours > cfg.context_len)
        throw invalid_error("context override exceeds the model context length");
    if (ctx_hours % (std::size_t{1} << cfg.levels) != 0)
        throw invalid_error("context override must be divisible by 2^levels");
    const std::size_t horizon = opts.horizon_hours.value_or(cfg.horizon_len);
    if (horizon == 0 || horizon > cfg.horizon_len)
        throw invalid_error("horizon override must be in [1, model horizon]");

    StationRegistry train_reg;
    for (const std::string& id : split.train_ids) train_reg.add(ds.stations.by_id(id));
    DistanceFn dist = cfg.retrieval_cfg.distance == DistanceFn::Kind::Haversine
                          ? DistanceFn::haversine_fn()
                          : DistanceFn::embedding_fn([&model](const Station& st) {
                                return model.embed_location_values(st);
                            });
    Retriever retriever(train_reg, dist);
    const RetrievalPlan empty_plan;
    const bool probabilistic = cfg.head == HeadKind::Gaussian;

    MetricReport report;
    report.probabilistic = probabilistic;
    report.horizon = horizon;
    std::vector<double> mse_h(horizon, 0.0), mae_h(horizon, 0.0);
    std::size_t total_windows = 0;

    for (const std::string& id : station_ids) {
        const StationSeries& s = ds.series(id);
        const HourRange r = test_range(s, split);
        // anchors at full model context length so every context override
        // scores the same horizon windows
        const auto windows =
            make_windows(ds, id, cfg.context_len, cfg.horizon_len, opts.stride, r);
        RetrievalPlan plan;
        if (cfg.retrieval)
            plan = retriever.plan(ds.stations.by_id(id), cfg.retrieval_cfg, cfg.band_spec());

        Accum acc;
        acc.resize(horizon);
        for (const SeriesWindow& w : windows) {
            // keep the trailing ctx_hours rows of the context
            std::vector<double> ctx(w.context.end() -
                                        static_cast<std::ptrdiff_t>(ctx_hours * kNumVariables),
                                    w.context.end());
            GaussianForecast f = forecast_zero_shot(
                model, ds, ds.stations.by_id(id),
                w.t0 + static_cast<std::int64_t>(w.context_len), ctx, ctx_hours,
                cfg.retrieval ? plan : empty_plan);
            ++acc.windows;
            for (std::size_t h = 0; h < horizon; ++h) {
                const double e = f.mu[h] - w.horizon[h];
                acc.preds.push_back(f.mu[h]);
                acc.truths.push_back(w.horizon[h]);
                mse_h[h] += e * e;
                mae_h[h] += std::abs(e);
                acc.mse_h[h] += e * e;
                acc.mae_h[h] += std::abs(e);
                if (probabilistic) {
                    acc.mus.push_back(f.mu[h]);
                    acc.sigmas.push_back(std::sqrt(f.sigma2[h]));
                }
            }
        }
        if (acc.windows == 0) continue;
        total_windows += acc.windows;
        report.per_station.emplace_back(
            id, finish_station(acc, probabilistic, station_train_series(ds, id, split)));
    }
    if (report.per_station.empty())
        throw invalid_error("evaluation produced no windows for any station");

    report.average = average_stations(report.per_station);
    report.mse_per_hour.resize(horizon);
    report.mae_per_hour.resize(horizon);
    for (std::size_t h = 0; h < horizon; ++h) {
        report.mse_per_hour[h] = mse_h[h] / static_cast<double>(total_windows);
        report.mae_per_hour[h] = mae_h[h] / static_cast<double>(total_windows);
    }
    return report;
}

std::vector<std::pair<std::string, MetricReport>> evaluate_baselines(
    const Dataset& ds, const SplitSpec& split, const std::vector<std::string>& station_ids,
    std::size_t context_len, std::size_t horizon_len, std::size_t stride) {
    static const std::vector<std::string> names = {"last_value", "moving_average", "persistence",
                                                   "seasonal_naive", "autoreg"};
    struct PerBaseline {
        std::vector<std::pair<std::string, StationMetrics>> per_station;
        std::vector<double> mse_h, mae_h;
        std::size_t total_windows = 0;
    };
    std::map<std::string, PerBaseline> acc;
    for (const std::string& n : names) {
        acc[n].mse_h.assign(horizon_len, 0.0);
        acc[n].mae_h.assign(horizon_len, 0.0);
    }

    for (const std::string& id : station_ids) {
        const StationSeries& s = ds.series(id);
        const HourRange r = test_range(s, split);
        const auto windows = make_windows(ds, id, context_len, horizon_len, stride, r);
        std::map<std::string, Accum> sacc;
        for (const std::string& n : names) sacc[n].resize(horizon_len);
        for (const SeriesWindow& w : windows) {
            const std::vector<double> ctx = raw_target_context(
                ds, id, w.t0 + static_cast<std::int64_t>(w.context_len), context_len);
            for (auto& [name, pred] : all_baselines(ctx, horizon_len)) {
                Accum& a = sacc[name];
                ++a.windows;
                for (std::size_t h = 0; h < horizon_len; ++h) {
                    const double e = pred[h] - w.horizon[h];
                    a.preds.push_back(pred[h]);
                    a.truths.push_back(w.horizon[h]);
                    a.mse_h[h] += e * e;
                    a.mae_h[h] += std::abs(e);
                }
            }
        }
        const auto train_series = station_train_series(ds, id, split);
        for (const std::string& n : names) {
            if (sacc[n].windows == 0) continue;
            acc[n].per_station.emplace_back(id, finish_station(sacc[n], false, train_series));
            acc[n].total_windows += sacc[n].windows;
            for (std::size_t h = 0; h < horizon_len; ++h) {
                acc[n].mse_h[h] += sacc[n].mse_h[h];
                acc[n].mae_h[h] += sacc[n].mae_h[h];
            }
        }
    }

    std::vector<std::pair<std::string, MetricReport>> out;
    for (const std::string& n : names) {
        PerBaseline& pb = acc[n];
        if (pb.per_station.empty())
            throw invalid_error("baseline evaluation produced no windows");
        MetricReport rep;
        rep.per_station = std::move(pb.per_station);
        rep.average = average_stations(rep.per_station);
        rep.horizon = horizon_len;
        rep.mse_per_hour.resize(horizon_len);
        rep.mae_per_hour.resize(horizon_len);
        for (std::size_t h = 0; h < horizon_len; ++h) {
            rep.mse_per_hour[h] = pb.mse_h[h] / static_cast<double>(pb.total_windows);
            rep.mae_per_hour[h] = pb.mae_h[h] / static_cast<double>(pb.total_windows);
        }
        out.emplace_back(n, std::move(rep));
    }
    return out;
}

SweepAxis sweep_axis_from_string(const std::string& s) {
    if (s == "horizon") return SweepAxis::Horizon;
    if (s == "context_len") return SweepAxis::ContextLen;
    throw config_error("unknown sweep axis '" + s + "' (expected horizon or context_len)");
}

SweepResult sweep(const Forecaster& model, const Dataset& ds, const SplitSpec& split,
                  const std::vector<std::string>& station_ids, SweepAxis axis,
                  const std::vector<std::size_t>& values, std::size_t stride) {
    SweepResult out;
    for (std::size_t v : values) {
        EvalOptions opts;
        opts.stride = stride;
        if (axis == SweepAxis::Horizon) {
            if (v == 0 || v > model.config().horizon_len) {
                out.skipped.push_back(v);
                continue;
            }
            opts.horizon_hours = v;
        } else {
            if (v > model.config().context_len ||
                v % (std::size_t{1} << model.config().levels) != 0) {
                out.skipped.push_back(v);
                continue;
            }
            opts.context_hours = v;
        }
        out.results.emplace_back(v, evaluate_model(model, ds, split, station_ids, opts));
    }
    return out;
}

// ------------------------------------------------------ correlation analysis

std::optional<std::vector<std::pair<std::string, double>>> band_correlations(
    const Dataset& ds, const std::string& id_a, const std::string& id_b, const BandSpec& spec,
    std::size_t min_overlap) {
    const StationSeries& a = ds.series(id_a);
    const StationSeries& b = ds.series(id_b);
    if (a.size() == 0 || b.size() == 0) return std::nullopt;
    const std::int64_t lo = std::max(a.hours.front(), b.hours.front());
    const std::int64_t hi = std::min(a.hours.back(), b.hours.back());
    if (hi < lo) return std::nullopt;
    std::size_t span = static_cast<std::size_t>(hi - lo + 1);
    span -= span % (std::size_t{1} << spec.levels);
    if (span < min_overlap) return std::nullopt;
    const auto ia = a.contiguous_index(lo, span);
    const auto ib = b.contiguous_index(lo, span);
    if (!ia || !ib) return std::nullopt;

    std::vector<double> xa(span), xb(span);
    for (std::size_t t = 0; t < span; ++t) {
        xa[t] = a.values[*ia + t][kTargetVariable];
        xb[t] = b.values[*ib + t][kTargetVariable];
    }
    const BandSet ba = decompose(xa, spec);
    const BandSet bb = decompose(xb, spec);
    const auto labels = spec.band_labels();
    std::vector<std::pair<std::string, double>> out;
    for (int band = 0; band < spec.band_count(); ++band) {
        const std::vector<double> ca = band_coefficients(ba, band);
        const std::vector<double> cb = band_coefficients(bb, band);
        double ma = 0.0, mb = 0.0;
        for (std::size_t i = 0; i < ca.size(); ++i) {
            ma += ca[i];
            mb += cb[i];
        }
        ma /= static_cast<double>(ca.size());
        mb /= static_cast<double>(cb.size());
        double saa = 0.0, sbb = 0.0, sab = 0.0;
        for (std::size_t i = 0; i < ca.size(); ++i) {
            saa += (ca[i] - ma) * (ca[i] - ma);
            sbb += (cb[i] - mb) * (cb[i] - mb);
            sab += (ca[i] - ma) * (cb[i] - mb);
        }
        if (saa <= 0.0 || sbb <= 0.0) return std::nullopt;
        out.emplace_back(labels[static_cast<std::size_t>(band)], sab / std::sqrt(saa * sbb));
    }
    return out;
}

std::vector<CorrRow> corr_vs_distance(const Dataset& ds, const BandSpec& spec,
                                      std::size_t n_pairs, std::uint64_t seed,
                                      std::size_t min_overlap) {
    const auto& stations = ds.stations.all();
    if (stations.size() < 2) throw invalid_error("corr_vs_distance needs at least two stations");
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < stations.size(); ++i)
        for (std::size_t j = i + 1; j < stations.size(); ++j) pairs.emplace_back(i, j);
    Rng rng(derive_seed(seed, "corr_pairs"));
    rng.shuffle(pairs);
    if (pairs.size() > n_pairs) pairs.resize(n_pairs);

    std::vector<CorrRow> rows;
    for (const auto& [i, j] : pairs) {
        const auto corr = band_correlations(ds, stations[i].id, stations[j].id, spec, min_overlap);
        if (!corr) continue;
        const double d = haversine(stations[i], stations[j]);
        for (const auto& [band, r] : *corr) {
            rows.push_back({stations[i].id, stations[j].id, d, band, r});
        }
    }
    return rows;
}

std::string corr_rows_csv(const std::vector<CorrRow>& rows) {
    std::string s = "station_a,station_b,distance_km,band,pearson_r\n";
    for (const CorrRow& r : rows) {
        s += r.station_a + "," + r.station_b + "," + std::to_string(r.distance_km) + "," +
             r.band + "," + std::to_string(r.pearson) + "\n";
    }
    return s;
}

double correlation_halving_distance(const std::vector<CorrRow>& rows, const std::string& band,
                                    double threshold, std::size_t n_bins) {
    double max_d = 0.0;
    for (const CorrRow& r : rows)
        if (r.band == band) max_d = std::max(max_d, r.distance_km);
    if (max_d <= 0.0) throw invalid_error("no rows for band '" + band + "'");
    std::vector<double> sum(n_bins, 0.0);
    std::vector<std::size_t> cnt(n_bins, 0);
    for (const CorrRow& r : rows) {
        if (r.band != band) continue;
        std::size_t b = static_cast<std::size_t>(r.distance_km / max_d * static_cast<double>(n_bins));
        if (b >= n_bins) b = n_bins - 1;
        sum[b] += r.pearson;
        ++cnt[b];
    }
    for (std::size_t b = 0; b < n_bins; ++b) {
        if (cnt[b] == 0) continue;
        if (sum[b] / static_cast<double>(cnt[b]) < threshold)
            return (static_cast<double>(b) + 0.5) * max_d / static_cast<double>(n_bins);
    }
    return max_d;
}

} // namespace rarf
