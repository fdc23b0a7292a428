#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "rarf/analysis.hpp"
#include "rarf/baselines.hpp"
#include "rarf/dataset.hpp"
#include "rarf/error.hpp"
#include "rarf/geodesy.hpp"
#include "rarf/metrics.hpp"
#include "rarf/station.hpp"
#include "rarf/synthetic.hpp"
#include "rarf/wavelet.hpp"

namespace py = pybind11;
using namespace rarf;

namespace {

std::vector<double> to_vec(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 1) throw invalid_error("expected a 1-d array");
    return std::vector<double>(a.data(), a.data() + a.shape(0));
}

py::array_t<double> to_array(const std::vector<double>& v) {
    py::array_t<double> out(static_cast<py::ssize_t>(v.size()));
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "resolution-aware retrieval-augmented zero-shot forecasting core";

    py::register_exception<Error>(m, "RarfError");

    py::class_<Station>(m, "Station")
        .def(py::init([](std::string id, double lat, double lon, double elevation) {
                 Station st{std::move(id), lat, lon, elevation};
                 st.validate();
                 return st;
             }),
             py::arg("id"), py::arg("lat"), py::arg("lon"), py::arg("elevation") = 0.0)
        .def_readonly("id", &Station::id)
        .def_readonly("lat", &Station::lat)
        .def_readonly("lon", &Station::lon)
        .def_readonly("elevation", &Station::elevation);

    m.def("haversine", [](const Station& a, const Station& b) { return haversine(a, b); });
    m.def(
        "haversine",
        [](double lat1, double lon1, double lat2, double lon2) {
            return haversine(Station{"a", lat1, lon1, 0.0}, Station{"b", lat2, lon2, 0.0});
        },
        py::arg("lat1"), py::arg("lon1"), py::arg("lat2"), py::arg("lon2"));

    m.def(
        "retrieve",
        [](const Station& target, const std::vector<Station>& stations, int k) {
            StationRegistry reg;
            for (const Station& st : stations) reg.add(st);
            std::vector<std::pair<std::string, double>> out;
            for (const Neighbor& n : retrieve(target, reg, k, DistanceFn::haversine_fn()))
                out.emplace_back(n.id, n.distance);
            return out;
        },
        py::arg("target"), py::arg("stations"), py::arg("k"));

    m.def(
        "plan_retrieval",
        [](const Station& target, const std::vector<Station>& stations, int k_fast, int k_mod,
           int k_slow, int levels) {
            StationRegistry reg;
            for (const Station& st : stations) reg.add(st);
            RetrievalConfig cfg;
            cfg.k_fast = k_fast;
            cfg.k_mod = k_mod;
            cfg.k_slow = k_slow;
            RetrievalPlan plan = plan_retrieval(target, reg, cfg, BandSpec{levels});
            py::dict out;
            for (std::size_t b = 0; b < plan.bands.size(); ++b) {
                py::list lst;
                for (const Neighbor& n : plan.bands[b])
                    lst.append(py::make_tuple(n.id, n.distance));
                out[py::str(plan.band_labels[b])] = lst;
            }
            return out;
        },
        py::arg("target"), py::arg("stations"), py::arg("k_fast") = 10, py::arg("k_mod") = 25,
        py::arg("k_slow") = 50, py::arg("levels") = 3);

    m.def(
        "decompose",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& x, int levels,
           const std::string& family) {
            BandSet bands = decompose(to_vec(x), BandSpec{levels, wavelet_family_from_string(family)});
            py::dict out;
            for (int d = 0; d < levels; ++d)
                out[py::str("d" + std::to_string(d + 1))] =
                    to_array(bands.details[static_cast<std::size_t>(d)]);
            out[py::str("a" + std::to_string(levels))] = to_array(bands.approx);
            return out;
        },
        py::arg("x"), py::arg("levels") = 3, py::arg("family") = "haar");

    m.def(
        "reconstruct",
        [](const py::dict& coeffs, int levels, const std::string& family) {
            BandSet bands;
            bands.spec = BandSpec{levels, wavelet_family_from_string(family)};
            for (int d = 0; d < levels; ++d) {
                const std::string key = "d" + std::to_string(d + 1);
                bands.details.push_back(
                    to_vec(coeffs[py::str(key)].cast<py::array_t<double>>()));
            }
            bands.approx =
                to_vec(coeffs[py::str("a" + std::to_string(levels))].cast<py::array_t<double>>());
            bands.original_length = levels == 0 ? bands.approx.size()
                                                : bands.details[0].size() * 2;
            return to_array(reconstruct(bands));
        },
        py::arg("coeffs"), py::arg("levels") = 3, py::arg("family") = "haar");

    m.def(
        "band_forecast_lengths",
        [](std::size_t horizon, int levels) {
            return band_forecast_lengths(horizon, BandSpec{levels});
        },
        py::arg("horizon"), py::arg("levels") = 3);

    m.def("crps_gaussian", &crps_gaussian, py::arg("mu"), py::arg("sigma"), py::arg("y"));
    m.def("wind_speed_mph", &wind_speed_mph, py::arg("u"), py::arg("v"));
    m.def(
        "coverage",
        [](const py::array_t<double>& mu, const py::array_t<double>& sigma,
           const py::array_t<double>& y, double level) {
            return coverage(to_vec(mu), to_vec(sigma), to_vec(y), level);
        },
        py::arg("mu"), py::arg("sigma"), py::arg("y"), py::arg("level") = 0.95);
    m.def(
        "freeze_f1",
        [](const py::array_t<double>& pred, const py::array_t<double>& truth, double thr) {
            return freeze_f1(to_vec(pred), to_vec(truth), thr);
        },
        py::arg("pred_f"), py::arg("truth_f"), py::arg("threshold") = 32.0);
    m.def(
        "metrics_point",
        [](const py::array_t<double>& pred, const py::array_t<double>& truth) {
            PointMetrics pm = metrics_point(to_vec(pred), to_vec(truth));
            py::dict d;
            d["mse"] = pm.mse;
            d["mae"] = pm.mae;
            d["mape"] = pm.mape;
            d["smape"] = pm.smape;
            d["mape_excluded"] = pm.mape_excluded;
            return d;
        },
        py::arg("preds"), py::arg("truths"));
    m.def(
        "mase",
        [](const py::array_t<double>& pred, const py::array_t<double>& truth,
           const py::array_t<double>& train, std::size_t period) {
            return mase(to_vec(pred), to_vec(truth), to_vec(train), period);
        },
        py::arg("preds"), py::arg("truths"), py::arg("train_series"), py::arg("period") = 24);
    m.def(
        "loss_nll",
        [](const py::array_t<double>& mu, const py::array_t<double>& sigma2,
           const py::array_t<double>& truth) {
            return loss_nll(to_vec(mu), to_vec(sigma2), to_vec(truth));
        },
        py::arg("mu"), py::arg("sigma2"), py::arg("truths"));

    m.def(
        "baselines",
        [](const py::array_t<double>& ctx, std::size_t horizon) {
            py::dict out;
            for (auto& [name, pred] : all_baselines(to_vec(ctx), horizon))
                out[py::str(name)] = to_array(pred);
            return out;
        },
        py::arg("context"), py::arg("horizon"));

    py::class_<Dataset>(m, "Dataset")
        .def("station_ids",
             [](const Dataset& ds) {
                 std::vector<std::string> ids;
                 for (const Station& st : ds.stations.all()) ids.push_back(st.id);
                 return ids;
             })
        .def("t2m",
             [](const Dataset& ds, const std::string& id) {
                 const StationSeries& s = ds.series(id);
                 std::vector<double> out(s.size());
                 for (std::size_t i = 0; i < s.size(); ++i)
                     out[i] = s.values[i][kTargetVariable];
                 return to_array(out);
             })
        .def("save", [](const Dataset& ds, const std::string& dir) { save_manifest(ds, dir); });

    m.def(
        "generate_synthetic",
        [](int grid_nx, int grid_ny, std::size_t n_hours, std::uint64_t seed, double noise_std) {
            SynthConfig cfg;
            cfg.grid_nx = grid_nx;
            cfg.grid_ny = grid_ny;
            cfg.n_hours = n_hours;
            cfg.seed = seed;
            cfg.noise_std = noise_std;
            return generate_synthetic(cfg);
        },
        py::arg("grid_nx") = 12, py::arg("grid_ny") = 12, py::arg("n_hours") = 1024,
        py::arg("seed") = 1, py::arg("noise_std") = 1.0);
    m.def("load_manifest", &load_manifest, py::arg("path"));
    m.def("ingest_csv", &ingest_csv, py::arg("path"));

    m.attr("__version__") = "0.1.0";
}
