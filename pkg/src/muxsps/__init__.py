"""Photon-number statistics and design optimization of multiplexed heralded single-photon sources."""

__version__ = "0.1.0"

from .engine import (
    DEFAULT_I_MAX,
    OutputDistribution,
    SourceConfig,
    output_distribution,
    p1_spd_closed_form,
    p1_threshold_closed_form,
)
from .losses import (
    MultiplexerModel,
    MuxKind,
    hamming_weight,
    transmit_conditional,
    unit_transmission,
    unit_transmissions,
)
from .optimize import (
    ComparisonMap,
    CurvePoint,
    OptimizationResult,
    StrategyScanResult,
    comparison_map,
    maximize_over_lambda,
    optimize_strategy,
    optimize_units,
)
from .simulate import SimulationEstimate, simulate
from .statistics import (
    DEFAULT_RESOLUTION_CAP,
    DEFAULT_TAIL_TOL,
    DetectorModel,
    HeraldingStrategy,
    PairDistribution,
    PairKind,
    detect_conditional,
    detect_total,
    herald_probability,
    pair_pmf,
)

__all__ = [
    "ComparisonMap",
    "CurvePoint",
    "DEFAULT_I_MAX",
    "DEFAULT_RESOLUTION_CAP",
    "DEFAULT_TAIL_TOL",
    "DetectorModel",
    "HeraldingStrategy",
    "MultiplexerModel",
    "MuxKind",
    "OptimizationResult",
    "OutputDistribution",
    "PairDistribution",
    "PairKind",
    "SimulationEstimate",
    "SourceConfig",
    "StrategyScanResult",
    "comparison_map",
    "detect_conditional",
    "detect_total",
    "hamming_weight",
    "herald_probability",
    "maximize_over_lambda",
    "optimize_strategy",
    "optimize_units",
    "output_distribution",
    "p1_spd_closed_form",
    "p1_threshold_closed_form",
    "pair_pmf",
    "simulate",
    "transmit_conditional",
    "unit_transmission",
    "unit_transmissions",
]
