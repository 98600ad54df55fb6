"""Capacity of memoryless channels with sampled cyclostationary Gaussian noise."""

from cyclocap.errors import (
    ConfigurationError,
    CyclocapError,
    DomainError,
    ResourceError,
    UnsupportedError,
)
from cyclocap.profile import (
    DtVarianceSeq,
    PulseShape,
    SamplingSpec,
    TabulatedProfile,
    VarianceProfile,
    epsilon_n,
    pulse_value,
    sample_variances,
    variance_at,
)
from cyclocap.waterfill import (
    WaterFillSolution,
    bruteforce_capacity,
    sync_capacity,
    water_level,
    water_level_sorted,
)
from cyclocap.asynccap import (
    CapacitySequence,
    LiminfEstimate,
    SweepResult,
    async_capacity,
    capacity_sequence,
    liminf_estimate,
    rationalize_ratio,
    sweep_offset,
    sweep_power,
    sweep_ratio,
)
from cyclocap.infospec import (
    DensityBatch,
    DensityModelPerIndex,
    PlimEstimate,
    build_density_model,
    charfn_v,
    p_lim_estimate,
    sample_density,
    interchange_check,
)

__version__ = "0.1.0"

__all__ = [
    "CapacitySequence",
    "ConfigurationError",
    "CyclocapError",
    "DensityBatch",
    "DensityModelPerIndex",
    "DomainError",
    "DtVarianceSeq",
    "LiminfEstimate",
    "PlimEstimate",
    "PulseShape",
    "ResourceError",
    "SamplingSpec",
    "SweepResult",
    "TabulatedProfile",
    "UnsupportedError",
    "VarianceProfile",
    "WaterFillSolution",
    "async_capacity",
    "bruteforce_capacity",
    "build_density_model",
    "capacity_sequence",
    "charfn_v",
    "epsilon_n",
    "liminf_estimate",
    "p_lim_estimate",
    "pulse_value",
    "rationalize_ratio",
    "sample_density",
    "sample_variances",
    "sweep_offset",
    "sweep_power",
    "sweep_ratio",
    "sync_capacity",
    "interchange_check",
    "variance_at",
    "water_level",
    "water_level_sorted",
]
