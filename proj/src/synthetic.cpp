#include "rarf/synthetic.hpp"

#include <cmath>
#include <cstdio>

#include "rarf/error.hpp"
#include "rarf/geodesy.hpp"
#include "rarf/rng.hpp"

namespace rarf {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Lower Cholesky factor of the squared-exponential kernel over the stations,
// with a small diagonal jitter for numerical rank safety.
std::vector<double> kernel_cholesky(const std::vector<double>& dist, std::size_t n,
                                    double rho_km) {
    std::vector<double> a(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            const double d = dist[i * n + j] / rho_km;
            a[i * n + j] = std::exp(-0.5 * d * d);
        }
        a[i * n + i] += 1e-9;
    }
    for (std::size_t j = 0; j < n; ++j) {
        double diag = a[j * n + j];
        for (std::size_t k = 0; k < j; ++k) diag -= a[j * n + k] * a[j * n + k];
        if (diag <= 0.0) throw internal_error("kernel matrix not positive definite");
        diag = std::sqrt(diag);
        a[j * n + j] = diag;
        for (std::size_t i = j + 1; i < n; ++i) {
            double v = a[i * n + j];
            for (std::size_t k = 0; k < j; ++k) v -= a[i * n + k] * a[j * n + k];
            a[i * n + j] = v / diag;
        }
    }
    // zero the strict upper triangle
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) a[i * n + j] = 0.0;
    return a;
}

std::vector<double> sample_field(const std::vector<double>& chol, std::size_t n, Rng& rng) {
    std::vector<double> z(n);
    for (double& v : z) v = rng.normal();
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j <= i; ++j) acc += chol[i * n + j] * z[j];
        out[i] = acc;
    }
    return out;
}

// One band component: spatially correlated fields modulating unit-variance
// harmonics around the band period. Returns [station][t].
std::vector<std::vector<double>> make_component(const std::vector<double>& dist, std::size_t n,
                                                std::size_t n_hours, double rho_km,
                                                const std::vector<double>& periods, double amp,
                                                Rng& rng) {
    const std::vector<double> chol = kernel_cholesky(dist, n, rho_km);
    const std::size_t m = periods.size();
    std::vector<std::vector<double>> fields;
    std::vector<double> phases;
    for (std::size_t j = 0; j < m; ++j) {
        fields.push_back(sample_field(chol, n, rng));
        phases.push_back(rng.uniform(0.0, kTwoPi));
    }
    const double scale = amp / std::sqrt(static_cast<double>(m));
    std::vector<std::vector<double>> out(n, std::vector<double>(n_hours, 0.0));
    for (std::size_t j = 0; j < m; ++j) {
        const double omega = kTwoPi / periods[j];
        for (std::size_t t = 0; t < n_hours; ++t) {
            const double wave = std::sqrt(2.0) * std::sin(omega * static_cast<double>(t) + phases[j]);
            for (std::size_t s = 0; s < n; ++s) {
                out[s][t] += scale * fields[j][s] * wave;
            }
        }
    }
    return out;
}

std::vector<double> scaled(const std::vector<double>& period, double p) {
    std::vector<double> out;
    for (double m : period) out.push_back(m * p);
    return out;
}

} // namespace

void SynthConfig::validate() const {
    if (grid_nx < 1 || grid_ny < 1) throw config_error("synthetic grid dims must be >= 1");
    const std::size_t n = static_cast<std::size_t>(grid_nx) * static_cast<std::size_t>(grid_ny);
    if (n > 1024) throw config_error("synthetic grid capped at 1024 stations (exact Cholesky)");
    if (!(lat_min < lat_max) || !(lon_min < lon_max))
        throw config_error("synthetic bounding box is empty");
    if (!(rho_slow_km > rho_mod_km && rho_mod_km > rho_fast_km && rho_fast_km > 0.0))
        throw config_error("length scales must satisfy rho_slow > rho_mod > rho_fast > 0, got (" +
                           std::to_string(rho_slow_km) + ", " + std::to_string(rho_mod_km) +
                           ", " + std::to_string(rho_fast_km) + ")");
    if (period_slow_h <= 0.0 || period_mod_h <= 0.0 || period_fast_h <= 0.0)
        throw config_error("band periods must be positive");
    if (noise_std < 0.0) throw config_error("noise std must be >= 0");
    if (n_hours < 2) throw config_error("n_hours must be >= 2");
}

Dataset generate_synthetic(const SynthConfig& cfg) { return generate_synthetic(cfg, nullptr); }

Dataset generate_synthetic(const SynthConfig& cfg, SynthComponents* components) {
    cfg.validate();
    const std::size_t n = static_cast<std::size_t>(cfg.grid_nx) * static_cast<std::size_t>(cfg.grid_ny);
    const std::size_t T = cfg.n_hours;

    Dataset ds;
    {
        Rng elev_rng(derive_seed(cfg.seed, "elevation"));
        std::vector<Station> sts;
        std::size_t idx = 0;
        for (int iy = 0; iy < cfg.grid_ny; ++iy) {
            for (int ix = 0; ix < cfg.grid_nx; ++ix, ++idx) {
                Station st;
                char buf[16];
                std::snprintf(buf, sizeof(buf), "ST%04zu", idx);
                st.id = buf;
                st.lat = cfg.grid_ny == 1 ? cfg.lat_min
                                          : cfg.lat_min + (cfg.lat_max - cfg.lat_min) *
                                                              static_cast<double>(iy) /
                                                              static_cast<double>(cfg.grid_ny - 1);
                st.lon = cfg.grid_nx == 1 ? cfg.lon_min
                                          : cfg.lon_min + (cfg.lon_max - cfg.lon_min) *
                                                              static_cast<double>(ix) /
                                                              static_cast<double>(cfg.grid_nx - 1);
                sts.push_back(st);
            }
        }
        // distances for the kernel fields
        std::vector<double> dist(n * n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < i; ++j)
                dist[i * n + j] = dist[j * n + i] = haversine(sts[i], sts[j]);

        // smooth elevation field
        const std::vector<double> chol = kernel_cholesky(dist, n, 150.0);
        const std::vector<double> elev = sample_field(chol, n, elev_rng);
        for (std::size_t i = 0; i < n; ++i) {
            sts[i].elevation = 400.0 + 250.0 * elev[i];
            ds.stations.add(sts[i]);
        }

        // temperature bands
        Rng slow_rng(derive_seed(cfg.seed, "t2m/slow"));
        Rng mod_rng(derive_seed(cfg.seed, "t2m/moderate"));
        Rng fast_rng(derive_seed(cfg.seed, "t2m/fast"));
        auto slow = make_component(dist, n, T, cfg.rho_slow_km,
                                   scaled({0.40, 0.55, 0.75, 1.00, 1.50, 2.50, 4.00},
                                          cfg.period_slow_h),
                                   cfg.amp_slow, slow_rng);
        auto mod = make_component(dist, n, T, cfg.rho_mod_km,
                                  scaled({0.72, 0.88, 1.07, 1.30}, cfg.period_mod_h),
                                  cfg.amp_mod, mod_rng);
        auto fast = make_component(dist, n, T, cfg.rho_fast_km,
                                   scaled({0.72, 0.88, 1.07, 1.30}, cfg.period_fast_h),
                                   cfg.amp_fast, fast_rng);

        Rng base_rng(derive_seed(cfg.seed, "t2m/base"));
        const std::vector<double> base =
            sample_field(kernel_cholesky(dist, n, 300.0), n, base_rng);

        // remaining input variables: coarse fields, uncritical structure
        Rng u_rng(derive_seed(cfg.seed, "u10"));
        Rng v_rng(derive_seed(cfg.seed, "v10"));
        Rng dep_rng(derive_seed(cfg.seed, "d2m"));
        Rng sp_rng(derive_seed(cfg.seed, "sp"));
        auto u10 = make_component(dist, n, T, 200.0, {12.0, 30.0}, 3.0, u_rng);
        auto v10 = make_component(dist, n, T, 200.0, {10.0, 36.0}, 3.0, v_rng);
        auto dep = make_component(dist, n, T, 250.0, {24.0, 60.0}, 2.0, dep_rng);
        auto spf = make_component(dist, n, T, 400.0, {48.0, 96.0}, 8.0, sp_rng);

        Rng noise_rng(derive_seed(cfg.seed, "noise"));
        for (std::size_t s = 0; s < n; ++s) {
            StationSeries ser;
            ser.hours.resize(T);
            ser.values.resize(T);
            for (std::size_t t = 0; t < T; ++t) {
                const double t2m = 45.0 + 6.0 * base[s] + slow[s][t] + mod[s][t] + fast[s][t] +
                                   cfg.noise_std * noise_rng.normal();
                ser.hours[t] = cfg.start_hour + static_cast<std::int64_t>(t);
                ser.values[t][0] = u10[s][t] + 0.5 * noise_rng.normal();
                ser.values[t][1] = v10[s][t] + 0.5 * noise_rng.normal();
                ser.values[t][2] = t2m;
                ser.values[t][3] = t2m - (4.0 + dep[s][t]);
                ser.values[t][4] = 1013.0 + spf[s][t] + 0.5 * noise_rng.normal();
            }
            ds.records.emplace(sts[s].id, std::move(ser));
        }

        if (components) {
            components->band_names = {"slow", "moderate", "fast"};
            components->band_fields = {std::move(slow), std::move(mod), std::move(fast)};
        }
    }
    return ds;
}

} // namespace rarf
