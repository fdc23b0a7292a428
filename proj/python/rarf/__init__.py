"""Resolution-aware retrieval-augmented zero-shot forecasting (core bindings)."""

from rarf._core import (
    Dataset,
    RarfError,
    Station,
    __version__,
    band_forecast_lengths,
    baselines,
    coverage,
    crps_gaussian,
    decompose,
    freeze_f1,
    generate_synthetic,
    haversine,
    ingest_csv,
    load_manifest,
    loss_nll,
    mase,
    metrics_point,
    plan_retrieval,
    reconstruct,
    retrieve,
    wind_speed_mph,
)

__all__ = [
    "Dataset",
    "RarfError",
    "Station",
    "__version__",
    "band_forecast_lengths",
    "baselines",
    "coverage",
    "crps_gaussian",
    "decompose",
    "freeze_f1",
    "generate_synthetic",
    "haversine",
    "ingest_csv",
    "load_manifest",
    "loss_nll",
    "mase",
    "metrics_point",
    "plan_retrieval",
    "reconstruct",
    "retrieve",
    "wind_speed_mph",
]
