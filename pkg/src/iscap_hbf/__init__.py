"""Joint hybrid beamforming and dynamic on-off control for an integrated
sensing / communication / powering base station, minimizing a comprehensive
power model under SINR, estimation-accuracy, energy-harvesting, per-antenna
power, and constant-modulus constraints."""

from . import (analog_stage, ao_driver, array_sensing, conic_ir,
               design_eval, digital_stage, onoff_control, power_models,
               scenario)
from .ao_driver import DesignResult, SolveOptions, compare_schemes, solve_instance
from .scenario import COMPACT_DIMS, DESK_DIMS, Dimensions, desk_scenario

__all__ = [
    "analog_stage", "ao_driver", "array_sensing", "conic_ir",
    "design_eval", "digital_stage", "onoff_control", "power_models",
    "scenario", "DesignResult", "SolveOptions", "compare_schemes",
    "solve_instance", "COMPACT_DIMS", "DESK_DIMS", "Dimensions",
    "desk_scenario",
]

__version__ = "0.1.0"
