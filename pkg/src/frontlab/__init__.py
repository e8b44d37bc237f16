"""Front propagation in heterogeneous reaction-diffusion media.

Reaction profiles and fields, front speeds by shooting, an explicit
finite-difference solver on line, plane and axisymmetric grids, width
diagnostics, sub/supersolution barriers and a config-driven scenario suite.
"""
from .reaction import ReactionField, ReactionProfile, homogeneous, parse_profile_spec
from .frontspeed import shoot_front_speed, speed_bounds
from .solver import GridSpec, GridState, run

__version__ = "0.1.0"

__all__ = ["GridSpec", "GridState", "ReactionField", "ReactionProfile", "homogeneous",
           "parse_profile_spec", "run", "shoot_front_speed", "speed_bounds"]
