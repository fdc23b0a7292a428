#include "rarf/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "json.hpp"

#include "rarf/error.hpp"
#include "rarf/metrics.hpp"
#include "rarf/rng.hpp"

namespace rarf {

LossKind loss_from_string(const std::string& s) {
    if (s == "mse") return LossKind::Mse;
    if (s == "nll") return LossKind::Nll;
    throw config_error("unknown loss kind '" + s + "' (expected mse or nll)");
}

std::string to_string(LossKind k) { return k == LossKind::Mse ? "mse" : "nll"; }

void TrainConfig::validate() const {
    if (epochs <= 0 || phase2_epochs <= 0) throw config_error("epochs must be positive");
    if (lr <= 0.0 || phase2_lr <= 0.0) throw config_error("learning rates must be positive");
    if (batch_size == 0 || windows_per_epoch == 0)
        throw config_error("batch_size and windows_per_epoch must be positive");
    if (window_stride == 0 || eval_stride == 0) throw config_error("strides must be positive");
    if (patience < 0) throw config_error("patience must be >= 0");
}

std::string TrainLog::to_json() const {
    nlohmann::json j;
    j["best_epoch"] = best_epoch;
    j["best_val_mse"] = best_val;
    nlohmann::json arr = nlohmann::json::array();
    for (const EpochStats& e : epochs) {
        arr.push_back({{"epoch", e.epoch},
                       {"train_loss", e.train_loss},
                       {"val_mse", std::isnan(e.val_mse) ? nlohmann::json() : nlohmann::json(e.val_mse)}});
    }
    j["epochs"] = std::move(arr);
    return j.dump(2);
}

Var window_loss(ModelGraph& g, const Forecaster& model, const ForecastInput& in,
                const std::vector<double>& horizon_f, LossKind kind) {
    const ModelConfig& cfg = model.config();
    if (kind == LossKind::Nll && cfg.head != HeadKind::Gaussian)
        throw config_error("nll loss requires the gaussian head");
    const auto targets = model.coefficient_targets(horizon_f);
    Var total;
    for (int b = 0; b < cfg.n_bands(); ++b) {
        ModelGraph::Head h = g.run_band(b, in.bands[static_cast<std::size_t>(b)]);
        Var target = g.tape().constant(Tensor::vec(targets[static_cast<std::size_t>(b)]));
        Var diff = sub(h.mu, target);
        Var term;
        if (kind == LossKind::Mse) {
            term = sum(mul(diff, diff));
        } else {
            term = scale(sum(add(log_op(h.sigma2), div(mul(diff, diff), h.sigma2))), 0.5);
        }
        total = b == 0 ? term : add(total, term);
    }
    if (kind == LossKind::Mse)
        total = scale(total, 1.0 / static_cast<double>(cfg.horizon_len));
    return total;
}

namespace {

struct Pool {
    std::vector<SeriesWindow> windows;
};

Pool collect_windows(const Dataset& ds, const std::vector<std::string>& ids,
                     const SplitSpec& split, bool val_segment, std::size_t context_len,
                     std::size_t horizon_len, std::size_t stride) {
    Pool pool;
    for (const std::string& id : ids) {
        const StationSeries& s = ds.series(id);
        const HourRange r = val_segment ? val_range(s, split) : train_range(s, split);
        auto w = make_windows(ds, id, context_len, horizon_len, stride, r);
        pool.windows.insert(pool.windows.end(), std::make_move_iterator(w.begin()),
                            std::make_move_iterator(w.end()));
    }
    return pool;
}

StationRegistry sub_registry(const Dataset& ds, const std::vector<std::string>& ids) {
    StationRegistry reg;
    for (const std::string& id : ids) reg.add(ds.stations.by_id(id));
    return reg;
}

DistanceFn distance_for(const Forecaster& model) {
    if (model.config().retrieval_cfg.distance == DistanceFn::Kind::Haversine)
        return DistanceFn::haversine_fn();
    return DistanceFn::embedding_fn(
        [&model](const Station& st) { return model.embed_location_values(st); });
}

std::vector<Tensor> snapshot(const ParamStore& store) {
    std::vector<Tensor> out;
    for (const Param& p : store.all()) out.push_back(p.value);
    return out;
}

void restore(ParamStore& store, const std::vector<Tensor>& snap) {
    for (std::size_t i = 0; i < store.size(); ++i) store.all()[i].value = snap[i];
}

struct TrainDriver {
    const Dataset& ds;
    const SplitSpec& split;
    Forecaster& model;
    const TrainConfig& cfg;
    const Retriever& retriever;

    RetrievalPlan plan_for(const std::string& id) const {
        return retriever.plan(ds.stations.by_id(id), model.config().retrieval_cfg,
                              model.config().band_spec());
    }

    TrainLog run(Pool& pool, const std::vector<std::string>& val_ids, int epochs, double lr,
                 std::uint64_t seed_label_salt) {
        if (pool.windows.empty()) throw invalid_error("no training windows available");
        const ModelConfig& mcfg = model.config();
        Adam adam(model.params(), {lr});
        Rng rng(derive_seed(cfg.seed, "train_order/" + std::to_string(seed_label_salt)));

        // plans are fixed across the run; cache one per pseudo-target
        std::map<std::string, RetrievalPlan> plans;
        if (mcfg.retrieval) {
            for (const SeriesWindow& w : pool.windows) {
                if (!plans.count(w.station_id)) plans.emplace(w.station_id, plan_for(w.station_id));
            }
        }
        const RetrievalPlan empty_plan;

        TrainLog log;
        std::vector<Tensor> best = snapshot(model.params());
        double best_val = std::numeric_limits<double>::infinity();
        int best_epoch = -1;
        int since_best = 0;
        std::size_t step = 0;

        std::vector<std::size_t> order(pool.windows.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

        for (int epoch = 1; epoch <= epochs; ++epoch) {
            rng.shuffle(order);
            const std::size_t take = std::min<std::size_t>(cfg.windows_per_epoch, order.size());
            double epoch_loss = 0.0;
            std::size_t done = 0;
            while (done < take) {
                const std::size_t batch = std::min<std::size_t>(cfg.batch_size, take - done);
                model.params().zero_grads();
                for (std::size_t i = 0; i < batch; ++i) {
                    const SeriesWindow& w = pool.windows[order[done + i]];
                    const RetrievalPlan& plan =
                        mcfg.retrieval ? plans.at(w.station_id) : empty_plan;
                    ForecastInput in = assemble_input(
                        model, ds, ds.stations.by_id(w.station_id),
                        w.t0 + static_cast<std::int64_t>(w.context_len), w.context,
                        w.context_len, plan);
                    ModelGraph g(model, true);
                    Var loss = window_loss(g, model, in, w.horizon, cfg.loss);
                    const double lv = loss.value().data[0];
                    if (!std::isfinite(lv))
                        throw invalid_error("training loss not finite at step " +
                                            std::to_string(step));
                    epoch_loss += lv;
                    g.backward(scale(loss, 1.0 / static_cast<double>(batch)));
                }
                adam.step(model.params());
                ++step;
                done += batch;
            }

            EpochStats st;
            st.epoch = epoch;
            st.train_loss = epoch_loss / static_cast<double>(take);
            st.val_mse = std::numeric_limits<double>::quiet_NaN();
            if (!val_ids.empty()) {
                st.val_mse = mean_forecast_mse(model, ds, val_ids, split, true, cfg.eval_stride);
                if (st.val_mse < best_val - 1e-12) {
                    best_val = st.val_mse;
                    best = snapshot(model.params());
                    best_epoch = epoch;
                    since_best = 0;
                } else {
                    ++since_best;
                }
            }
            log.epochs.push_back(st);
            if (!val_ids.empty() && since_best > cfg.patience) break;
        }

        if (!val_ids.empty() && best_epoch > 0) {
            restore(model.params(), best);
            log.best_epoch = best_epoch;
            log.best_val = best_val;
        } else {
            log.best_epoch = log.epochs.empty() ? -1 : log.epochs.back().epoch;
            log.best_val = std::numeric_limits<double>::quiet_NaN();
        }
        return log;
    }
};

} // namespace

double mean_forecast_mse(const Forecaster& model, const Dataset& ds,
                         const std::vector<std::string>& station_ids, const SplitSpec& split,
                         bool use_val_range, std::size_t stride) {
    const ModelConfig& cfg = model.config();
    StationRegistry train_reg = sub_registry(ds, split.train_ids);
    Retriever retriever(train_reg, distance_for(model));
    const RetrievalPlan empty_plan;

    double acc = 0.0;
    std::size_t n = 0;
    for (const std::string& id : station_ids) {
        const StationSeries& s = ds.series(id);
        const HourRange r = use_val_range ? val_range(s, split) : test_range(s, split);
        const auto windows = make_windows(ds, id, cfg.context_len, cfg.horizon_len, stride, r);
        RetrievalPlan plan;
        if (cfg.retrieval)
            plan = retriever.plan(ds.stations.by_id(id), cfg.retrieval_cfg, cfg.band_spec());
        for (const SeriesWindow& w : windows) {
            GaussianForecast f = forecast_zero_shot(
                model, ds, ds.stations.by_id(id),
                w.t0 + static_cast<std::int64_t>(w.context_len), w.context, w.context_len,
                cfg.retrieval ? plan : empty_plan);
            acc += loss_mse(f.mu, w.horizon);
            ++n;
        }
    }
    if (n == 0) throw invalid_error("no evaluation windows available");
    return acc / static_cast<double>(n);
}

TrainLog train_phase1(const Dataset& ds, const SplitSpec& split, Forecaster& model,
                      const TrainConfig& cfg) {
    split.validate();
    cfg.validate();
    model.params().unfreeze_all();
    StationRegistry train_reg = sub_registry(ds, split.train_ids);
    Retriever retriever(train_reg, distance_for(model));
    Pool pool = collect_windows(ds, split.train_ids, split, false, model.config().context_len,
                                model.config().horizon_len, cfg.window_stride);
    TrainDriver driver{ds, split, model, cfg, retriever};
    return driver.run(pool, split.val_ids, cfg.epochs, cfg.lr, 1);
}

TrainLog train_phase2(const Dataset& ds, const SplitSpec& split, Forecaster& model,
                      const std::string& station_id, const TrainConfig& cfg) {
    split.validate();
    cfg.validate();
    bool any_transfer = false;
    for (const Param& p : model.params().all()) any_transfer = any_transfer || p.transfer;
    if (!any_transfer)
        throw invalid_error("phase 2 requires transfer parameters (model has none)");

    StationRegistry train_reg = sub_registry(ds, split.train_ids);
    Retriever retriever(train_reg, distance_for(model));
    Pool pool = collect_windows(ds, {station_id}, split, false, model.config().context_len,
                                model.config().horizon_len, cfg.window_stride);

    model.params().freeze_non_transfer();
    TrainDriver driver{ds, split, model, cfg, retriever};
    TrainLog log;
    try {
        log = driver.run(pool, {station_id}, cfg.phase2_epochs, cfg.phase2_lr, 2);
    } catch (...) {
        model.params().unfreeze_all();
        throw;
    }
    model.params().unfreeze_all();
    return log;
}

} // namespace rarf
