"""Finite volume solver for LWR traffic flow with a discontinuous flux."""
from .engine import BC, GridState, Limiter, SolverConfig, SolverError, run, step_first_order, step_high_resolution
from .exact import DoubleRiemannData, PiecewiseConstant, RiemannData, double_riemann_profile, riemann_profile
from .flux import DomainError, FluxKind, FluxModel, ParameterError, eval_flux
from .riemann import Wave, WaveFan, WaveKind, classify_case, solve_interface

__all__ = [
    "BC",
    "DomainError",
    "DoubleRiemannData",
    "FluxKind",
    "FluxModel",
    "GridState",
    "Limiter",
    "ParameterError",
    "PiecewiseConstant",
    "RiemannData",
    "SolverConfig",
    "SolverError",
    "Wave",
    "WaveFan",
    "WaveKind",
    "classify_case",
    "double_riemann_profile",
    "eval_flux",
    "riemann_profile",
    "run",
    "solve_interface",
    "step_first_order",
    "step_high_resolution",
]
