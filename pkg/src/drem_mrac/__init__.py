"""Direct model-reference adaptive control of unknown MIMO LTI plants with
DREM-based controller-parameter regression and a finite-excitation law."""
from .plant import PlantModel, ReferenceModel, ControllerState, IdealGains, ideal_gains
from .parametrization import FilterConfig
from .adaptation import GainSchedule
from .sim import (SimConfig, SimTrace, MonitorConfig, BaselineConfig, ReferenceChannel,
                  DivergenceError, run, compare_laws)

__all__ = ["PlantModel", "ReferenceModel", "ControllerState", "IdealGains", "ideal_gains",
           "FilterConfig", "GainSchedule", "SimConfig", "SimTrace", "MonitorConfig",
           "BaselineConfig", "ReferenceChannel", "DivergenceError", "run", "compare_laws"]
