"""Curvature functionals, holomorphic maps and integral curvature inequalities on catalog manifolds."""

from .errors import HolocurvError
from .models import resolve
from .maps import resolve_map
from .runner import run_scenario, run_scenarios
from .suite import run_suite

__version__ = "0.1.0"

__all__ = ["HolocurvError", "resolve", "resolve_map", "run_scenario", "run_scenarios", "run_suite"]
