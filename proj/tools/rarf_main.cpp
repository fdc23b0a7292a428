#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "rarf/analysis.hpp"
#include "rarf/baselines.hpp"
#include "rarf/config.hpp"
#include "rarf/error.hpp"
#include "rarf/model.hpp"
#include "rarf/params.hpp"
#include "rarf/rng.hpp"
#include "rarf/training.hpp"

namespace fs = std::filesystem;
using namespace rarf;

namespace {

constexpr const char* kVersion = "0.1.0";

void write_file(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw io_error("cannot write '" + path.string() + "'");
    out << content;
}

std::string hex64(std::uint64_t v) {
    char buf[19];
    std::snprintf(buf, sizeof(buf), "0x%016llx", static_cast<unsigned long long>(v));
    return buf;
}

void write_run_manifest(const std::string& out_dir, const std::string& command,
                        const RunConfig& cfg) {
    nlohmann::json j;
    j["command"] = command;
    j["version"] = kVersion;
    j["checkpoint_format_version"] = 1;
    j["seed"] = cfg.seed;
    j["config_digest"] = hex64(cfg.digest());
    j["model_digest"] = hex64(cfg.model.digest());
    write_file(fs::path(out_dir) / "run_manifest.json", j.dump(2) + "\n");
}

RunConfig config_for(const std::string& config_path, std::optional<std::uint64_t> seed_override,
                     const std::string& band_ks) {
    RunConfig cfg = load_run_config(config_path);
    if (seed_override) {
        cfg.seed = *seed_override;
        cfg.train.seed = derive_seed(cfg.seed, "train");
        cfg.synth.seed = derive_seed(cfg.seed, "synth");
        cfg.raw_text += "\n# seed-override = " + std::to_string(*seed_override) + "\n";
    }
    if (!band_ks.empty()) {
        std::vector<int> ks;
        std::stringstream ss(band_ks);
        std::string tok;
        while (std::getline(ss, tok, ',')) ks.push_back(std::stoi(tok));
        if (ks.size() != 3) throw config_error("--band-ks expects three values fast,mod,slow");
        cfg.model.retrieval_cfg.k_fast = ks[0];
        cfg.model.retrieval_cfg.k_mod = ks[1];
        cfg.model.retrieval_cfg.k_slow = ks[2];
        cfg.model.retrieval_cfg.validate();
        cfg.raw_text += "\n# band-ks-override = " + band_ks + "\n";
    }
    return cfg;
}

Forecaster model_from_checkpoint(const RunConfig& cfg, const std::string& checkpoint_path) {
    return Forecaster(cfg.model, load_checkpoint(checkpoint_path));
}

struct Experiment {
    Dataset ds;
    SplitSpec split;
};

Experiment load_experiment(const RunConfig& cfg) {
    Experiment e{load_dataset(cfg), {}};
    e.split = resolve_split(cfg, e.ds.stations);
    e.ds.norm_stats = compute_norm_stats(e.ds, e.split);
    return e;
}

DistanceFn cli_distance(const RunConfig& cfg, const std::optional<Forecaster>& model) {
    if (cfg.model.retrieval_cfg.distance == DistanceFn::Kind::Haversine)
        return DistanceFn::haversine_fn();
    if (!model)
        throw config_error("embedding distance requires --checkpoint");
    const Forecaster* m = &*model;
    return DistanceFn::embedding_fn(
        [m](const Station& st) { return m->embed_location_values(st); });
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"resolution-aware retrieval-augmented zero-shot forecasting"};
    app.require_subcommand(1);

    std::string config_path, out_dir, checkpoint_path, target_id, input_path;
    std::string band_ks, axis = "horizon", values_csv, family = "haar", t0_iso;
    std::optional<std::uint64_t> seed_override;
    int levels = 3;
    std::size_t n_pairs = 400;
    std::optional<std::size_t> context_hours, horizon_hours;

    auto add_common = [&](CLI::App* cmd, bool needs_out) {
        cmd->add_option("--config", config_path, "run configuration file")->required();
        auto* o = cmd->add_option("--out", out_dir, "output directory");
        if (needs_out) o->required();
        cmd->add_option("--seed", seed_override, "override the run seed");
        return cmd;
    };

    auto* c_gen = add_common(app.add_subcommand("gen-synth", "generate a synthetic dataset"), true);

    auto* c_ingest = app.add_subcommand("ingest", "ingest a raw exchange CSV");
    c_ingest->add_option("--input", input_path, "raw csv path")->required();
    c_ingest->add_option("--out", out_dir, "output directory")->required();

    auto* c_train = add_common(app.add_subcommand("train", "phase-1 training"), true);
    c_train->add_option("--band-ks", band_ks, "override k_fast,k_mod,k_slow");

    auto* c_adapt = add_common(app.add_subcommand("adapt", "phase-2 transfer adaptation"), true);
    c_adapt->add_option("--checkpoint", checkpoint_path, "phase-1 checkpoint")->required();
    c_adapt->add_option("--target", target_id, "station to adapt")->required();

    auto* c_forecast = add_common(app.add_subcommand("forecast", "zero-shot forecast"), true);
    c_forecast->add_option("--checkpoint", checkpoint_path, "model checkpoint")->required();
    c_forecast->add_option("--target", target_id, "target station id")->required();
    c_forecast->add_option("--t0", t0_iso, "horizon start (ISO hour); default: last anchor");
    c_forecast->add_option("--context-hours", context_hours, "target context length");

    auto* c_eval = add_common(app.add_subcommand("evaluate", "evaluate on the test split"), true);
    c_eval->add_option("--checkpoint", checkpoint_path, "model checkpoint")->required();
    c_eval->add_option("--context-hours", context_hours, "truncate the target context");
    c_eval->add_option("--horizon", horizon_hours, "score only the first N hours");

    auto* c_retrieve = add_common(app.add_subcommand("retrieve", "emit a retrieval plan"), false);
    c_retrieve->add_option("--target", target_id, "target station id")->required();
    c_retrieve->add_option("--band-ks", band_ks, "override k_fast,k_mod,k_slow");
    c_retrieve->add_option("--checkpoint", checkpoint_path, "needed for embedding distance");

    auto* c_decomp = app.add_subcommand("decompose", "wavelet-decompose a signal");
    c_decomp->add_option("--input", input_path, "one value per line")->required();
    c_decomp->add_option("--levels", levels, "decomposition levels");
    c_decomp->add_option("--family", family, "haar or db2");
    c_decomp->add_option("--out", out_dir, "output directory (stdout when omitted)");

    auto* c_corr = add_common(app.add_subcommand("corr-dist", "correlation vs distance table"),
                              true);
    c_corr->add_option("--pairs", n_pairs, "station pairs to sample");

    auto* c_base = add_common(app.add_subcommand("baseline", "classical baselines"), true);

    auto* c_sweep = add_common(app.add_subcommand("sweep", "horizon / context sweeps"), true);
    c_sweep->add_option("--checkpoint", checkpoint_path, "model checkpoint")->required();
    c_sweep->add_option("--axis", axis, "horizon or context_len");
    c_sweep->add_option("--values", values_csv, "comma-separated sweep values")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (c_gen->parsed()) {
            RunConfig cfg = config_for(config_path, seed_override, "");
            if (!cfg.use_synth) throw config_error("gen-synth needs a [SynthConfig] data source");
            Dataset ds = generate_synthetic(cfg.synth);
            save_manifest(ds, (fs::path(out_dir) / "dataset").string());
            write_run_manifest(out_dir, "gen-synth", cfg);
            std::cout << "generated " << ds.stations.size() << " stations x " << cfg.synth.n_hours
                      << " hours under " << out_dir << "/dataset\n";
        } else if (c_ingest->parsed()) {
            Dataset ds = ingest_csv(input_path);
            save_manifest(ds, (fs::path(out_dir) / "dataset").string());
            std::cout << "ingested " << ds.stations.size() << " stations ("
                      << ds.dropped_rows << " rows dropped for missing values)\n";
        } else if (c_train->parsed()) {
            RunConfig cfg = config_for(config_path, seed_override, band_ks);
            Experiment e = load_experiment(cfg);
            Forecaster model(cfg.model, e.ds.norm_stats, e.ds.stations,
                             derive_seed(cfg.seed, "model_init"));
            TrainLog log = train_phase1(e.ds, e.split, model, cfg.train);
            save_checkpoint((fs::path(out_dir) / "checkpoint.rarf").string(), model.params(),
                            model.norm(), cfg.model.digest());
            write_file(fs::path(out_dir) / "train_log.json", log.to_json() + "\n");
            write_run_manifest(out_dir, "train", cfg);
            std::cout << "trained " << cfg.train.epochs << " epochs; checkpoint at " << out_dir
                      << "/checkpoint.rarf\n";
        } else if (c_adapt->parsed()) {
            RunConfig cfg = config_for(config_path, seed_override, "");
            Experiment e = load_experiment(cfg);
            Forecaster model = model_from_checkpoint(cfg, checkpoint_path);
            TrainLog log = train_phase2(e.ds, e.split, model, target_id, cfg.train);
            save_checkpoint((fs::path(out_dir) / "checkpoint_adapted.rarf").string(),
                            model.params(), model.norm(), cfg.model.digest());
            write_file(fs::path(out_dir) / "adapt_log.json", log.to_json() + "\n");
            write_run_manifest(out_dir, "adapt", cfg);
            std::cout << "adapted transfer module for " << target_id << "\n";
        } else if (c_forecast->parsed()) {
            RunConfig cfg = config_for(config_path, seed_override, "");
            Experiment e = load_experiment(cfg);
            Forecaster model = model_from_checkpoint(cfg, checkpoint_path);
            const Station& target = e.ds.stations.by_id(target_id);
            const StationSeries& s = e.ds.series(target_id);
            const std::size_t ctx_len = context_hours.value_or(cfg.model.context_len);
            std::int64_t t0 = t0_iso.empty()
                                  ? s.hours.back() + 1 - static_cast<std::int64_t>(cfg.model.horizon_len)
                                  : iso_to_epoch_hour(t0_iso);
            auto ctx = context_before(e.ds, target_id, t0, ctx_len);
            if (!ctx) throw invalid_error("target has no gap-free context before " +
                                          epoch_hour_to_iso(t0));
            RetrievalPlan plan;
            if (cfg.model.retrieval) {
                StationRegistry train_reg;
                for (const std::string& id : e.split.train_ids)
                    train_reg.add(e.ds.stations.by_id(id));
                DistanceFn dist =
                    cfg.model.retrieval_cfg.distance == DistanceFn::Kind::Haversine
                        ? DistanceFn::haversine_fn()
                        : DistanceFn::embedding_fn([&model](const Station& st) {
                              return model.embed_location_values(st);
                          });
                Retriever r(train_reg, dist);
                plan = r.plan(target, cfg.model.retrieval_cfg, cfg.model.band_spec());
            }
            GaussianForecast f =
                forecast_zero_shot(model, e.ds, target, t0, *ctx, ctx_len, plan);
            nlohmann::json j;
            j["station"] = target_id;
            j["t0"] = epoch_hour_to_iso(t0);
            j["mu"] = f.mu;
            if (!f.sigma2.empty()) j["sigma2"] = f.sigma2;
            write_file(fs::path(out_dir) / "forecast.json", j.dump(2) + "\n");
            write_run_manifest(out_dir, "forecast", cfg);
            std::cout << "forecast written to " << out_dir << "/forecast.json\n";
        } else if (c_eval->parsed()) {
            RunConfig cfg = config_for(config_path, seed_override, "");
            Experiment e = load_experiment(cfg);
            Forecaster model = model_from_checkpoint(cfg, checkpoint_path);
            EvalOptions opts;
            opts.stride = cfg.train.eval_stride;
            opts.context_hours = context_hours;
            opts.horizon_hours = horizon_hours;
            MetricReport rep = evaluate_model(model, e.ds, e.split, e.split.test_ids, opts);
            write_file(fs::path(out_dir) / "report.json", rep.to_json() + "\n");
            write_file(fs::path(out_dir) / "per_hour.csv", rep.per_hour_csv());
            write_run_manifest(out_dir, "evaluate", cfg);
            std::cout << "test MSE " << rep.average.mse << ", MAE " << rep.average.mae << "\n";
        } else if (c_retrieve->parsed()) {
            RunConfig cfg = config_for(config_path, seed_override, band_ks);
            Experiment e = load_experiment(cfg);
            std::optional<Forecaster> model;
            if (!checkpoint_path.empty()) model.emplace(model_from_checkpoint(cfg, checkpoint_path));
            Retriever r(e.ds.stations, cli_distance(cfg, model));
            RetrievalPlan plan = r.plan(e.ds.stations.by_id(target_id), cfg.model.retrieval_cfg,
                                        cfg.model.band_spec());
            const std::string json = plan.to_json() + "\n";
            if (out_dir.empty()) {
                std::cout << json;
            } else {
                write_file(fs::path(out_dir) / "plan.json", json);
                write_run_manifest(out_dir, "retrieve", cfg);
                std::cout << "plan written to " << out_dir << "/plan.json\n";
            }
        } else if (c_decomp->parsed()) {
            std::ifstream in(input_path);
            if (!in) throw io_error("cannot open '" + input_path + "'");
            std::vector<double> x;
            std::string line;
            while (std::getline(in, line)) {
                if (line.empty()) continue;
                x.push_back(std::stod(line));
            }
            BandSpec spec{levels, wavelet_family_from_string(family)};
            BandSet bands = decompose(x, spec);
            nlohmann::json j;
            for (int d = 0; d < spec.levels; ++d)
                j["d" + std::to_string(d + 1)] = bands.details[static_cast<std::size_t>(d)];
            j["a" + std::to_string(spec.levels)] = bands.approx;
            const std::string json = j.dump(2) + "\n";
            if (out_dir.empty()) std::cout << json;
            else write_file(fs::path(out_dir) / "bands.json", json);
        } else if (c_corr->parsed()) {
            RunConfig cfg = config_for(config_path, seed_override, "");
            Dataset ds = load_dataset(cfg);
            const auto rows = corr_vs_distance(ds, cfg.model.band_spec(), n_pairs, cfg.seed);
            write_file(fs::path(out_dir) / "corr_dist.csv", corr_rows_csv(rows));
            nlohmann::json j;
            for (const std::string& band : cfg.model.band_spec().band_labels())
                j["halving_distance_km"][band] = correlation_halving_distance(rows, band);
            write_file(fs::path(out_dir) / "corr_summary.json", j.dump(2) + "\n");
            write_run_manifest(out_dir, "corr-dist", cfg);
            std::cout << rows.size() << " correlation rows written\n";
        } else if (c_base->parsed()) {
            RunConfig cfg = config_for(config_path, seed_override, "");
            Experiment e = load_experiment(cfg);
            auto reports = evaluate_baselines(e.ds, e.split, e.split.test_ids,
                                              cfg.model.context_len, cfg.model.horizon_len,
                                              cfg.train.eval_stride);
            nlohmann::json j;
            for (auto& [name, rep] : reports)
                j[name] = nlohmann::json::parse(rep.to_json());
            write_file(fs::path(out_dir) / "baselines.json", j.dump(2) + "\n");
            write_run_manifest(out_dir, "baseline", cfg);
            for (auto& [name, rep] : reports)
                std::cout << name << ": MSE " << rep.average.mse << "\n";
        } else if (c_sweep->parsed()) {
            RunConfig cfg = config_for(config_path, seed_override, "");
            Experiment e = load_experiment(cfg);
            Forecaster model = model_from_checkpoint(cfg, checkpoint_path);
            std::vector<std::size_t> values;
            std::stringstream ss(values_csv);
            std::string tok;
            while (std::getline(ss, tok, ',')) values.push_back(std::stoul(tok));
            SweepResult res = sweep(model, e.ds, e.split, e.split.test_ids,
                                    sweep_axis_from_string(axis), values, cfg.train.eval_stride);
            nlohmann::json j;
            j["axis"] = axis;
            j["skipped"] = res.skipped;
            nlohmann::json arr = nlohmann::json::array();
            for (auto& [v, rep] : res.results)
                arr.push_back({{"value", v}, {"report", nlohmann::json::parse(rep.to_json())}});
            j["results"] = std::move(arr);
            write_file(fs::path(out_dir) / "sweep.json", j.dump(2) + "\n");
            write_run_manifest(out_dir, "sweep", cfg);
            for (const std::size_t v : res.skipped)
                std::cout << "skipped value " << v << " (divisibility)\n";
            std::cout << res.results.size() << " sweep points written\n";
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.kind_name() << ": " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
