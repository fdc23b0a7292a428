#include "rarf/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "rarf/error.hpp"
#include "rarf/rng.hpp"

namespace rarf {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    std::size_t e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    std::stringstream ss(s);
    while (std::getline(ss, cur, ',')) {
        cur = trim(cur);
        if (!cur.empty()) out.push_back(cur);
    }
    return out;
}

struct Kv {
    std::string section, key, value;
    std::size_t line;
};

double to_double(const Kv& kv) {
    try {
        std::size_t pos = 0;
        double v = std::stod(kv.value, &pos);
        if (pos != kv.value.size()) throw std::invalid_argument("");
        return v;
    } catch (const std::exception&) {
        throw config_error("line " + std::to_string(kv.line) + ": bad number for " + kv.section +
                           "." + kv.key);
    }
}

std::int64_t to_int(const Kv& kv) {
    try {
        std::size_t pos = 0;
        long long v = std::stoll(kv.value, &pos);
        if (pos != kv.value.size()) throw std::invalid_argument("");
        return v;
    } catch (const std::exception&) {
        throw config_error("line " + std::to_string(kv.line) + ": bad integer for " +
                           kv.section + "." + kv.key);
    }
}

bool to_bool(const Kv& kv) {
    if (kv.value == "true" || kv.value == "1") return true;
    if (kv.value == "false" || kv.value == "0") return false;
    throw config_error("line " + std::to_string(kv.line) + ": bad boolean for " + kv.section +
                       "." + kv.key);
}

} // namespace

std::uint64_t RunConfig::digest() const { return fnv1a64(raw_text); }

void RunConfig::validate() const {
    int sources = (manifest_path ? 1 : 0) + (csv_path ? 1 : 0) + (use_synth ? 1 : 0);
    if (sources != 1)
        throw config_error("exactly one data source required ([Dataset] manifest/csv or "
                           "[SynthConfig])");
    if (use_synth) synth.validate();
    model.validate();
    train.validate();
    const double frac_sum = train_frac + val_frac + test_frac;
    if (std::abs(frac_sum - 1.0) > 1e-9)
        throw config_error("temporal fractions must sum to 1");
}

RunConfig parse_run_config(const std::string& text) {
    RunConfig cfg;
    cfg.raw_text = text;
    bool synth_section_seen = false, dataset_section_seen = false;

    std::istringstream in(text);
    std::string line, section;
    std::size_t line_no = 0;
    std::vector<Kv> kvs;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty() || line[0] == '#' || line[0] == ';') continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw config_error("line " + std::to_string(line_no) + ": bad section header");
            section = trim(line.substr(1, line.size() - 2));
            static const std::vector<std::string> known = {
                "Dataset", "SynthConfig", "SplitSpec", "BandSpec",
                "RetrievalConfig", "ModelConfig", "TrainConfig"};
            if (std::find(known.begin(), known.end(), section) == known.end())
                throw config_error("line " + std::to_string(line_no) + ": unknown section [" +
                                   section + "]");
            if (section == "SynthConfig") synth_section_seen = true;
            if (section == "Dataset") dataset_section_seen = true;
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw config_error("line " + std::to_string(line_no) + ": expected key = value");
        kvs.push_back({section, trim(line.substr(0, eq)), trim(line.substr(eq + 1)), line_no});
    }

    for (const Kv& kv : kvs) {
        const std::string& s = kv.section;
        const std::string& k = kv.key;
        auto unknown = [&kv]() -> Error {
            return config_error("line " + std::to_string(kv.line) + ": unknown key '" + kv.key +
                                "' in section [" + kv.section + "]");
        };
        if (s.empty()) {
            if (k == "seed") cfg.seed = static_cast<std::uint64_t>(to_int(kv));
            else throw unknown();
        } else if (s == "Dataset") {
            if (k == "manifest") cfg.manifest_path = kv.value;
            else if (k == "csv") cfg.csv_path = kv.value;
            else throw unknown();
        } else if (s == "SynthConfig") {
            SynthConfig& sy = cfg.synth;
            if (k == "grid_nx") sy.grid_nx = static_cast<int>(to_int(kv));
            else if (k == "grid_ny") sy.grid_ny = static_cast<int>(to_int(kv));
            else if (k == "lat_min") sy.lat_min = to_double(kv);
            else if (k == "lat_max") sy.lat_max = to_double(kv);
            else if (k == "lon_min") sy.lon_min = to_double(kv);
            else if (k == "lon_max") sy.lon_max = to_double(kv);
            else if (k == "rho_slow_km") sy.rho_slow_km = to_double(kv);
            else if (k == "rho_mod_km") sy.rho_mod_km = to_double(kv);
            else if (k == "rho_fast_km") sy.rho_fast_km = to_double(kv);
            else if (k == "period_slow_h") sy.period_slow_h = to_double(kv);
            else if (k == "period_mod_h") sy.period_mod_h = to_double(kv);
            else if (k == "period_fast_h") sy.period_fast_h = to_double(kv);
            else if (k == "amp_slow") sy.amp_slow = to_double(kv);
            else if (k == "amp_mod") sy.amp_mod = to_double(kv);
            else if (k == "amp_fast") sy.amp_fast = to_double(kv);
            else if (k == "noise_std") sy.noise_std = to_double(kv);
            else if (k == "n_hours") sy.n_hours = static_cast<std::size_t>(to_int(kv));
            else if (k == "start_hour") sy.start_hour = to_int(kv);
            else throw unknown();
        } else if (s == "SplitSpec") {
            if (k == "n_val") cfg.n_val = static_cast<std::size_t>(to_int(kv));
            else if (k == "n_test") cfg.n_test = static_cast<std::size_t>(to_int(kv));
            else if (k == "val_ids") cfg.val_ids = split_list(kv.value);
            else if (k == "test_ids") cfg.test_ids = split_list(kv.value);
            else if (k == "train_frac") cfg.train_frac = to_double(kv);
            else if (k == "val_frac") cfg.val_frac = to_double(kv);
            else if (k == "test_frac") cfg.test_frac = to_double(kv);
            else throw unknown();
        } else if (s == "BandSpec") {
            if (k == "levels") cfg.model.levels = static_cast<int>(to_int(kv));
            else if (k == "family") cfg.model.family = wavelet_family_from_string(kv.value);
            else throw unknown();
        } else if (s == "RetrievalConfig") {
            RetrievalConfig& rc = cfg.model.retrieval_cfg;
            if (k == "k_fast") rc.k_fast = static_cast<int>(to_int(kv));
            else if (k == "k_mod") rc.k_mod = static_cast<int>(to_int(kv));
            else if (k == "k_slow") rc.k_slow = static_cast<int>(to_int(kv));
            else if (k == "distance") {
                if (kv.value == "haversine") rc.distance = DistanceFn::Kind::Haversine;
                else if (kv.value == "embedding") rc.distance = DistanceFn::Kind::EmbeddingEuclidean;
                else throw config_error("line " + std::to_string(kv.line) +
                                        ": distance must be haversine or embedding");
            } else throw unknown();
        } else if (s == "ModelConfig") {
            ModelConfig& m = cfg.model;
            if (k == "context_len") m.context_len = static_cast<std::size_t>(to_int(kv));
            else if (k == "horizon_len") m.horizon_len = static_cast<std::size_t>(to_int(kv));
            else if (k == "d_model") m.d_model = static_cast<std::size_t>(to_int(kv));
            else if (k == "d_loc") m.d_loc = static_cast<std::size_t>(to_int(kv));
            else if (k == "n_heads") m.n_heads = static_cast<std::size_t>(to_int(kv));
            else if (k == "n_layers") m.n_layers = static_cast<std::size_t>(to_int(kv));
            else if (k == "d_ff") m.d_ff = static_cast<std::size_t>(to_int(kv));
            else if (k == "d_loc_attn") m.d_loc_attn = static_cast<std::size_t>(to_int(kv));
            else if (k == "retrieval") m.retrieval = to_bool(kv);
            else if (k == "transfer") m.transfer = transfer_from_string(kv.value);
            else if (k == "head") m.head = head_from_string(kv.value);
            else if (k == "gnn_tau_km") m.gnn_tau_km = to_double(kv);
            else if (k == "fc_inverse_distance") m.fc_inverse_distance = to_bool(kv);
            else throw unknown();
        } else if (s == "TrainConfig") {
            TrainConfig& t = cfg.train;
            if (k == "epochs") t.epochs = static_cast<int>(to_int(kv));
            else if (k == "lr") t.lr = to_double(kv);
            else if (k == "phase2_epochs") t.phase2_epochs = static_cast<int>(to_int(kv));
            else if (k == "phase2_lr") t.phase2_lr = to_double(kv);
            else if (k == "batch_size") t.batch_size = static_cast<std::size_t>(to_int(kv));
            else if (k == "windows_per_epoch")
                t.windows_per_epoch = static_cast<std::size_t>(to_int(kv));
            else if (k == "window_stride") t.window_stride = static_cast<std::size_t>(to_int(kv));
            else if (k == "eval_stride") t.eval_stride = static_cast<std::size_t>(to_int(kv));
            else if (k == "loss") t.loss = loss_from_string(kv.value);
            else if (k == "patience") t.patience = static_cast<int>(to_int(kv));
            else throw unknown();
        }
    }

    if (dataset_section_seen && (cfg.manifest_path || cfg.csv_path)) cfg.use_synth = false;
    else if (dataset_section_seen && !synth_section_seen)
        throw config_error("[Dataset] section needs a manifest or csv key");
    cfg.train.seed = derive_seed(cfg.seed, "train");
    cfg.synth.seed = derive_seed(cfg.seed, "synth");
    cfg.validate();
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open config '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_run_config(ss.str());
}

Dataset load_dataset(const RunConfig& cfg) {
    if (cfg.manifest_path) return load_manifest(*cfg.manifest_path);
    if (cfg.csv_path) return ingest_csv(*cfg.csv_path);
    return generate_synthetic(cfg.synth);
}

SplitSpec resolve_split(const RunConfig& cfg, const StationRegistry& registry) {
    SplitSpec split;
    if (!cfg.val_ids.empty() || !cfg.test_ids.empty()) {
        split.val_ids = cfg.val_ids;
        split.test_ids = cfg.test_ids;
        std::set<std::string> held(split.val_ids.begin(), split.val_ids.end());
        held.insert(split.test_ids.begin(), split.test_ids.end());
        for (const Station& st : registry.all())
            if (!held.count(st.id)) split.train_ids.push_back(st.id);
        for (const std::string& id : held) registry.by_id(id); // existence check
    } else {
        split = make_station_split(registry, cfg.n_val, cfg.n_test, cfg.seed);
    }
    split.train_frac = cfg.train_frac;
    split.val_frac = cfg.val_frac;
    split.test_frac = cfg.test_frac;
    split.validate();
    return split;
}

} // namespace rarf
