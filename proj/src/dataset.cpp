#include "rarf/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "rarf/error.hpp"
#include "rarf/rng.hpp"

namespace rarf {

namespace {

// Days since 1970-01-01 for a proleptic Gregorian date (Hinnant's algorithm).
std::int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2u) / 5u +
                         static_cast<unsigned>(d) - 1u;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
    y = static_cast<int>(yy + (m <= 2));
}

double fahrenheit_from_kelvin(double k) { return (k - 273.15) * 1.8 + 32.0; }

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

double parse_double(const std::string& s, std::size_t line_no, const char* what) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw parse_error("line " + std::to_string(line_no) + ": bad " + what + " value '" + s +
                          "'");
    }
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

std::string epoch_hour_to_iso(std::int64_t hour) {
    std::int64_t days = hour >= 0 ? hour / 24 : (hour - 23) / 24;
    int h = static_cast<int>(hour - days * 24);
    int y, m, d;
    civil_from_days(days, y, m, d);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:00:00Z", y, m, d, h);
    return buf;
}

std::int64_t iso_to_epoch_hour(const std::string& iso) {
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
    char z = 0;
    int n = std::sscanf(iso.c_str(), "%d-%d-%dT%d:%d:%d%c", &y, &mo, &d, &h, &mi, &s, &z);
    if (n < 6 || (n == 7 && z != 'Z'))
        throw parse_error("bad ISO-8601 timestamp '" + iso + "'");
    if (mo < 1 || mo > 12 || d < 1 || d > 31 || h < 0 || h > 23)
        throw parse_error("bad ISO-8601 timestamp '" + iso + "'");
    if (mi != 0 || s != 0)
        throw parse_error("timestamp '" + iso + "' is not on an hour boundary");
    return days_from_civil(y, mo, d) * 24 + h;
}

std::optional<std::size_t> StationSeries::contiguous_index(std::int64_t hour,
                                                           std::size_t count) const {
    auto it = std::lower_bound(hours.begin(), hours.end(), hour);
    if (it == hours.end() || *it != hour) return std::nullopt;
    std::size_t i = static_cast<std::size_t>(it - hours.begin());
    if (i + count > hours.size()) return std::nullopt;
    if (count > 0 && hours[i + count - 1] - hours[i] != static_cast<std::int64_t>(count) - 1)
        return std::nullopt;
    return i;
}

void NormStats::validate() const {
    if (!valid) throw invalid_error("normalization stats not computed");
    for (std::size_t v = 0; v < kNumVariables; ++v) {
        if (!std::isfinite(mean[v]) || !std::isfinite(stddev[v]) || stddev[v] <= 0.0)
            throw invalid_error(std::string("normalization stats for ") + kVariableNames[v] +
                                " must be finite with positive stddev");
    }
}

const StationSeries& Dataset::series(const std::string& id) const {
    auto it = records.find(id);
    if (it == records.end()) throw invalid_error("no records for station '" + id + "'");
    return it->second;
}

void SplitSpec::validate() const {
    std::set<std::string> seen;
    for (const auto* ids : {&train_ids, &val_ids, &test_ids}) {
        for (const std::string& id : *ids) {
            if (!seen.insert(id).second)
                throw config_error("station '" + id + "' appears in more than one split");
        }
    }
    if (train_ids.empty()) throw config_error("train split must not be empty");
    const double sum = train_frac + val_frac + test_frac;
    if (std::abs(sum - 1.0) > 1e-9)
        throw config_error("temporal fractions must sum to 1, got " + std::to_string(sum));
    if (train_frac <= 0.0 || val_frac < 0.0 || test_frac < 0.0)
        throw config_error("temporal fractions must be nonnegative with train_frac > 0");
}

SplitSpec make_station_split(const StationRegistry& registry, std::size_t n_val,
                             std::size_t n_test, std::uint64_t seed) {
    if (n_val + n_test >= registry.size())
        throw config_error("split leaves no training stations");
    std::vector<std::string> ids;
    ids.reserve(registry.size());
    for (const Station& st : registry.all()) ids.push_back(st.id);
    std::sort(ids.begin(), ids.end());
    Rng rng(derive_seed(seed, "station_split"));
    rng.shuffle(ids);
    SplitSpec split;
    split.val_ids.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_val));
    split.test_ids.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_val),
                          ids.begin() + static_cast<std::ptrdiff_t>(n_val + n_test));
    split.train_ids.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_val + n_test), ids.end());
    std::sort(split.val_ids.begin(), split.val_ids.end());
    std::sort(split.test_ids.begin(), split.test_ids.end());
    std::sort(split.train_ids.begin(), split.train_ids.end());
    split.validate();
    return split;
}

HourRange temporal_range(const StationSeries& s, double frac_lo, double frac_hi) {
    if (s.hours.empty()) return {0, 0};
    const std::int64_t first = s.hours.front();
    const std::int64_t span = s.hours.back() - first + 1;
    const auto lo = first + static_cast<std::int64_t>(std::floor(frac_lo * static_cast<double>(span)));
    const auto hi = first + static_cast<std::int64_t>(std::floor(frac_hi * static_cast<double>(span)));
    return {lo, hi};
}

HourRange train_range(const StationSeries& s, const SplitSpec& split) {
    return temporal_range(s, 0.0, split.train_frac);
}
HourRange val_range(const StationSeries& s, const SplitSpec& split) {
    return temporal_range(s, split.train_frac, split.train_frac + split.val_frac);
}
HourRange test_range(const StationSeries& s, const SplitSpec& split) {
    return temporal_range(s, split.train_frac + split.val_frac, 1.0);
}

NormStats compute_norm_stats(const Dataset& ds, const SplitSpec& split) {
    split.validate();
    std::array<double, kNumVariables> sum{}, sumsq{};
    std::size_t n = 0;
    for (const std::string& id : split.train_ids) {
        const StationSeries& s = ds.series(id);
        const HourRange r = train_range(s, split);
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (s.hours[i] < r.lo || s.hours[i] >= r.hi) continue;
            for (std::size_t v = 0; v < kNumVariables; ++v) {
                sum[v] += s.values[i][v];
                sumsq[v] += s.values[i][v] * s.values[i][v];
            }
            ++n;
        }
    }
    if (n < 2) throw invalid_error("not enough training rows to compute normalization stats");
    NormStats out;
    for (std::size_t v = 0; v < kNumVariables; ++v) {
        out.mean[v] = sum[v] / static_cast<double>(n);
        const double var = sumsq[v] / static_cast<double>(n) - out.mean[v] * out.mean[v];
        out.stddev[v] = std::sqrt(std::max(var, 0.0));
    }
    out.valid = true;
    out.validate();
    return out;
}

std::vector<SeriesWindow> make_windows(const Dataset& ds, const std::string& station_id,
                                       std::size_t context_len, std::size_t horizon_len,
                                       std::size_t stride, const HourRange& range) {
    if (horizon_len < 1) throw invalid_error("make_windows: horizon length must be >= 1");
    if (stride < 1) throw invalid_error("make_windows: stride must be >= 1");
    if (context_len > 0) ds.norm_stats.validate();

    const StationSeries& s = ds.series(station_id);
    const std::size_t total = context_len + horizon_len;
    std::vector<SeriesWindow> out;
    if (s.size() < total) return out;

    for (std::size_t i = 0; i + total <= s.size(); i += stride) {
        // window must be gap-free and fully inside the hour range
        if (s.hours[i + total - 1] - s.hours[i] != static_cast<std::int64_t>(total) - 1) continue;
        if (s.hours[i] < range.lo || s.hours[i + total - 1] >= range.hi) continue;
        SeriesWindow w;
        w.station_id = station_id;
        w.t0 = s.hours[i];
        w.context_len = context_len;
        w.context.resize(context_len * kNumVariables);
        for (std::size_t t = 0; t < context_len; ++t) {
            for (std::size_t v = 0; v < kNumVariables; ++v) {
                w.context[t * kNumVariables + v] =
                    (s.values[i + t][v] - ds.norm_stats.mean[v]) / ds.norm_stats.stddev[v];
            }
        }
        w.horizon.resize(horizon_len);
        for (std::size_t t = 0; t < horizon_len; ++t) {
            w.horizon[t] = s.values[i + context_len + t][kTargetVariable];
        }
        out.push_back(std::move(w));
    }
    return out;
}

std::vector<SeriesWindow> make_windows(const Dataset& ds, const std::vector<std::string>& ids,
                                       std::size_t context_len, std::size_t horizon_len,
                                       std::size_t stride, const HourRange& range) {
    std::vector<SeriesWindow> out;
    for (const std::string& id : ids) {
        auto w = make_windows(ds, id, context_len, horizon_len, stride, range);
        out.insert(out.end(), std::make_move_iterator(w.begin()), std::make_move_iterator(w.end()));
    }
    return out;
}

std::optional<std::vector<double>> context_before(const Dataset& ds, const std::string& id,
                                                  std::int64_t horizon_start_hour,
                                                  std::size_t len) {
    if (len == 0) return std::vector<double>{};
    ds.norm_stats.validate();
    auto it = ds.records.find(id);
    if (it == ds.records.end()) return std::nullopt;
    const StationSeries& s = it->second;
    auto idx = s.contiguous_index(horizon_start_hour - static_cast<std::int64_t>(len), len);
    if (!idx) return std::nullopt;
    std::vector<double> out(len * kNumVariables);
    for (std::size_t t = 0; t < len; ++t) {
        for (std::size_t v = 0; v < kNumVariables; ++v) {
            out[t * kNumVariables + v] =
                (s.values[*idx + t][v] - ds.norm_stats.mean[v]) / ds.norm_stats.stddev[v];
        }
    }
    return out;
}

Dataset ingest_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open '" + path + "'");

    Dataset ds;
    std::map<std::string, Station> meta;
    std::map<std::string, std::map<std::int64_t, std::array<double, kNumVariables>>> rows;

    std::string line;
    std::size_t line_no = 0;
    bool saw_header = false;
    static const std::vector<std::string> header = {"station_id", "lat",  "lon", "elevation",
                                                    "timestamp_iso", "u10", "v10", "t2m",
                                                    "d2m", "sp"};
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> f = split_csv_line(line);
        if (!saw_header) {
            if (f != header)
                throw parse_error("line 1: expected header "
                                  "station_id,lat,lon,elevation,timestamp_iso,u10,v10,t2m,d2m,sp");
            saw_header = true;
            continue;
        }
        if (f.size() != header.size())
            throw parse_error("line " + std::to_string(line_no) + ": expected " +
                              std::to_string(header.size()) + " fields, got " +
                              std::to_string(f.size()));
        if (std::any_of(f.begin(), f.end(), [](const std::string& s) { return s.empty(); })) {
            ++ds.dropped_rows; // missing value
            continue;
        }
        Station st;
        st.id = f[0];
        st.lat = parse_double(f[1], line_no, "lat");
        st.lon = parse_double(f[2], line_no, "lon");
        st.elevation = parse_double(f[3], line_no, "elevation");
        std::int64_t hour;
        try {
            hour = iso_to_epoch_hour(f[4]);
        } catch (const Error& e) {
            throw parse_error("line " + std::to_string(line_no) + ": " + e.what());
        }
        std::array<double, kNumVariables> vals{};
        vals[0] = parse_double(f[5], line_no, "u10");
        vals[1] = parse_double(f[6], line_no, "v10");
        vals[2] = fahrenheit_from_kelvin(parse_double(f[7], line_no, "t2m"));
        vals[3] = fahrenheit_from_kelvin(parse_double(f[8], line_no, "d2m"));
        vals[4] = parse_double(f[9], line_no, "sp");
        for (double v : vals) {
            if (!std::isfinite(v))
                throw parse_error("line " + std::to_string(line_no) + ": non-finite value");
        }

        auto mit = meta.find(st.id);
        if (mit == meta.end()) {
            meta.emplace(st.id, st);
        } else if (mit->second.lat != st.lat || mit->second.lon != st.lon ||
                   mit->second.elevation != st.elevation) {
            throw parse_error("line " + std::to_string(line_no) + ": station '" + st.id +
                              "' re-declared with different coordinates");
        }
        auto [rit, inserted] = rows[st.id].emplace(hour, vals);
        (void)rit;
        if (!inserted)
            throw parse_error("duplicate timestamp " + epoch_hour_to_iso(hour) +
                              " for station '" + st.id + "'");
    }
    if (!saw_header && line_no > 0)
        throw parse_error("line 1: expected header row");

    for (auto& [id, st] : meta) ds.stations.add(st);
    for (auto& [id, table] : rows) {
        StationSeries s;
        for (auto& [hour, vals] : table) {
            s.hours.push_back(hour);
            s.values.push_back(vals);
        }
        ds.records.emplace(id, std::move(s));
    }
    return ds;
}

void save_manifest(const Dataset& ds, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(fs::path(dir) / "csv");

    nlohmann::json j;
    j["version"] = 1;
    j["units"] = {{"t2m", "F"}, {"d2m", "F"}, {"u10", "m/s"}, {"v10", "m/s"}, {"sp", "hPa"}};
    nlohmann::json stations = nlohmann::json::array();
    for (const Station& st : ds.stations.all()) {
        const std::string rel = "csv/" + st.id + ".csv";
        stations.push_back({{"id", st.id},
                            {"lat", st.lat},
                            {"lon", st.lon},
                            {"elevation", st.elevation},
                            {"csv", rel}});
        std::ofstream out(fs::path(dir) / rel);
        if (!out) throw io_error("cannot write station csv for '" + st.id + "'");
        out << "timestamp_iso,u10,v10,t2m,d2m,sp\n";
        const StationSeries& s = ds.series(st.id);
        for (std::size_t i = 0; i < s.size(); ++i) {
            out << epoch_hour_to_iso(s.hours[i]);
            for (std::size_t v = 0; v < kNumVariables; ++v)
                out << ',' << format_double(s.values[i][v]);
            out << '\n';
        }
    }
    j["stations"] = std::move(stations);
    std::ofstream out(fs::path(dir) / "manifest.json");
    if (!out) throw io_error("cannot write manifest.json under '" + dir + "'");
    out << j.dump(2) << '\n';
}

Dataset load_manifest(const std::string& manifest_path) {
    namespace fs = std::filesystem;
    std::ifstream in(manifest_path);
    if (!in) throw io_error("cannot open '" + manifest_path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw parse_error("bad manifest json: " + std::string(e.what()));
    }
    const fs::path base = fs::path(manifest_path).parent_path();

    Dataset ds;
    for (const auto& stj : j.at("stations")) {
        Station st;
        st.id = stj.at("id").get<std::string>();
        st.lat = stj.at("lat").get<double>();
        st.lon = stj.at("lon").get<double>();
        st.elevation = stj.at("elevation").get<double>();
        ds.stations.add(st);

        const fs::path csv = base / stj.at("csv").get<std::string>();
        std::ifstream cin(csv);
        if (!cin) throw io_error("cannot open station csv '" + csv.string() + "'");
        std::string line;
        std::size_t line_no = 0;
        StationSeries s;
        while (std::getline(cin, line)) {
            ++line_no;
            if (line.empty()) continue;
            if (line_no == 1) {
                if (line != "timestamp_iso,u10,v10,t2m,d2m,sp")
                    throw parse_error(csv.string() + ": bad header");
                continue;
            }
            std::vector<std::string> f = split_csv_line(line);
            if (f.size() != 6)
                throw parse_error(csv.string() + " line " + std::to_string(line_no) +
                                  ": expected 6 fields");
            const std::int64_t hour = iso_to_epoch_hour(f[0]);
            if (!s.hours.empty() && hour <= s.hours.back())
                throw parse_error(csv.string() + " line " + std::to_string(line_no) +
                                  ": timestamps not strictly increasing");
            std::array<double, kNumVariables> vals{};
            for (std::size_t v = 0; v < kNumVariables; ++v)
                vals[v] = parse_double(f[v + 1], line_no, kVariableNames[v]);
            s.hours.push_back(hour);
            s.values.push_back(vals);
        }
        ds.records.emplace(st.id, std::move(s));
    }
    return ds;
}

} // namespace rarf
