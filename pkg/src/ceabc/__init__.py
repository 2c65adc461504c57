"""Calibration of a SEIR(+AHD) epidemic model by cross-entropy optimization and rejection ABC."""

from .abc import ABCConfig, ABCResult, abc_infer, credible_envelope
from .ce import CEConfig, CEResult, ce_optimize
from .data import SurveillanceDataset, generate_synthetic, load_surveillance_csv
from .forward import ForwardModel
from .ic import ICReference, VirginConfig, blend_states, infer_initial_condition, virgin_run
from .integrate import TimeGrid, Trajectory, integrate, integrate_batch
from .misfit import QoITarget, misfit
from .model import LOWER, NOMINAL, PARAM_NAMES, STATE_NAMES, UPPER, ParamBounds, rhs, transmission_rate
from .sampling import DistributionState, ToleranceConfig, sample_truncated_gaussian, weighted_rms_norm

__version__ = "0.1.0"

__all__ = [
    "ABCConfig", "ABCResult", "abc_infer", "credible_envelope",
    "CEConfig", "CEResult", "ce_optimize",
    "SurveillanceDataset", "generate_synthetic", "load_surveillance_csv",
    "ForwardModel",
    "ICReference", "VirginConfig", "blend_states", "infer_initial_condition", "virgin_run",
    "TimeGrid", "Trajectory", "integrate", "integrate_batch",
    "QoITarget", "misfit",
    "LOWER", "NOMINAL", "PARAM_NAMES", "STATE_NAMES", "UPPER", "ParamBounds", "rhs", "transmission_rate",
    "DistributionState", "ToleranceConfig", "sample_truncated_gaussian", "weighted_rms_norm",
]
