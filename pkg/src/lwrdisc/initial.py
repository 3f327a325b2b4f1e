"""Initial cell averages for the standard experiments."""
from __future__ import annotations

import math

import numpy as np
from scipy import special

from .exact import PiecewiseConstant


def riemann_cells(edges, rho_l: float, rho_r: float, x0: float = 0.0) -> np.ndarray:
    return PiecewiseConstant((x0,), (rho_l, rho_r)).cell_averages(edges)


def gaussian_cells(edges, sigma: float = 0.1, amplitude: float = 1.0, offset: float = 0.0):
    """Exact cell averages of ``amplitude * exp(-x^2 / (2 sigma^2)) + offset``."""
    edges = np.asarray(edges, dtype=float)
    if sigma <= 0.0:
        raise ValueError("sigma must be positive")
    prim = amplitude * sigma * math.sqrt(math.pi / 2.0) * special.erf(edges / (math.sqrt(2.0) * sigma))
    return np.diff(prim) / np.diff(edges) + offset
