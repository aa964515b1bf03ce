"""Mutual-impedance channel simulator for RIS-aided links with DDA scatterer clusters."""

from .channel import ChannelVector, Variant, channel, multiport_oracle, received_power_db
from .config import load_fitted_scene, load_scene
from .errors import NumericalError, ValidationError
from .impedance import ImpedanceSet, RISConfig, assemble
from .kernels import BACKEND
from .optimize import OptimizeResult, maximize_power, random_search
from .scene import ClusterSpec, Dipole, DipoleArray, Role, Scene, build_cluster, build_default_scene

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "ChannelVector", "ClusterSpec", "Dipole", "DipoleArray", "ImpedanceSet",
    "NumericalError", "OptimizeResult", "RISConfig", "Role", "Scene", "ValidationError",
    "Variant", "assemble", "build_cluster", "build_default_scene", "channel", "load_fitted_scene",
    "load_scene", "maximize_power", "multiport_oracle", "random_search", "received_power_db",
]
