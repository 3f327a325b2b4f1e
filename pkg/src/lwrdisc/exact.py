"""Closed-form solutions of the Riemann and double Riemann problems.

All solutions here are piecewise constant in x, so they are returned as a
:class:`PiecewiseConstant` profile which can be sampled pointwise or
integrated exactly over grid cells.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .flux import FluxKind, FluxModel, ParameterError, eval_flux
from .riemann import double_riemann_case, double_riemann_speeds


@dataclass(frozen=True)
class PiecewiseConstant:
    """Profile taking ``values[k]`` between ``breaks[k-1]`` and ``breaks[k]``.

    ``closed[k]`` says which side owns the point x = breaks[k]: ``"left"``
    assigns it to values[k], ``"right"`` to values[k+1].
    """

    breaks: tuple[float, ...]
    values: tuple[float, ...]
    closed: tuple[str, ...] = ()

    def __post_init__(self):
        if len(self.values) != len(self.breaks) + 1:
            raise ValueError("need one more value than breakpoints")
        if not self.closed:
            object.__setattr__(self, "closed", ("right",) * len(self.breaks))
        if any(b2 < b1 for b1, b2 in zip(self.breaks, self.breaks[1:])):
            raise ValueError("breakpoints must be sorted")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.zeros(x.shape, dtype=int)
        for b, side in zip(self.breaks, self.closed):
            idx += (x > b) if side == "left" else (x >= b)
        out = np.asarray(self.values)[idx]
        return float(out) if out.ndim == 0 else out

    def cell_averages(self, edges) -> np.ndarray:
        """Exact averages over cells [edges[i], edges[i+1]]."""
        edges = np.asarray(edges, dtype=float)
        pts = np.concatenate(([-np.inf], self.breaks, [np.inf]))
        lo, hi = edges[:-1], edges[1:]
        width = hi - lo
        out = np.zeros_like(width)
        for k, v in enumerate(self.values):
            overlap = np.maximum(np.minimum(hi, pts[k + 1]) - np.maximum(lo, pts[k]), 0.0)
            # weight is exactly 1 for a cell inside one piece, so its average is exact
            out += v * (overlap / width)
        return out


@dataclass(frozen=True)
class RiemannData:
    rho_l: float
    rho_r: float
    x0: float = 0.0

    def __post_init__(self):
        for r in (self.rho_l, self.rho_r):
            if not 0.0 <= r <= 1.0:
                raise ValueError(f"density {r} outside [0, 1]")


@dataclass(frozen=True)
class DoubleRiemannData:
    c_l: float
    c_r: float
    x1: float
    x2: float

    def __post_init__(self):
        if not self.x1 < self.x2:
            raise ValueError("need x1 < x2")
        for r in (self.c_l, self.c_r):
            if not 0.0 <= r <= 1.0:
                raise ValueError(f"density {r} outside [0, 1]")


def riemann_case(model: FluxModel, rho_l: float, rho_r: float) -> str:
    rho_m = model.rho_m
    if rho_l == rho_r:
        return "constant"
    if rho_l == rho_m:
        return "left_plateau"
    if rho_r == rho_m:
        return "right_plateau"
    if rho_l < rho_m and rho_r < rho_m:
        return "free"
    if rho_l > rho_m and rho_r > rho_m:
        return "congested"
    if rho_r < rho_m < rho_l:
        return "A"
    if rho_l > model.critical:
        return "B"
    return "C"


def riemann_profile(model: FluxModel, data: RiemannData, t: float) -> PiecewiseConstant:
    """Exact solution of the Riemann problem at time ``t`` (limit eps -> 0)."""
    if model.kind is not FluxKind.DISCONTINUOUS:
        raise ParameterError("exact solutions are implemented for the discontinuous flux")
    if t < 0.0:
        raise ValueError("t must be non-negative")
    rl, rr, x0 = data.rho_l, data.rho_r, data.x0
    rho_m, gamma = model.rho_m, model.gamma
    case = riemann_case(model, rl, rr)
    f_l = float(eval_flux(model, rl))
    f_r = float(eval_flux(model, rr))
    if case == "constant":
        return PiecewiseConstant((), (rl,))
    if case == "A":
        s = (f_l - rho_m) / (rl - rho_m)
        return PiecewiseConstant((x0 + s * t, x0 + t), (rl, rho_m, rr), ("right", "left"))
    if case == "B":
        s = (gamma * (1.0 - rho_m) - f_l) / (rho_m - rl)
        return PiecewiseConstant(
            (x0 + s * t, x0 - gamma * t), (rl, rho_m, rr), ("right", "left")
        )
    if case == "C":
        s = (f_r - f_l) / (rr - rl)
        return PiecewiseConstant((x0 + s * t,), (rl, rr), ("right",))
    if case == "free":
        return PiecewiseConstant((x0 + t,), (rl, rr))
    if case == "congested":
        return PiecewiseConstant((x0 - gamma * t,), (rl, rr))
    if case == "left_plateau":
        speed = 1.0 if rr < rho_m else -gamma
        return PiecewiseConstant((x0 + speed * t,), (rl, rr))
    # right state on rho_m with nothing beyond it: free-flow branch
    s = (rho_m - f_l) / (rho_m - rl)
    return PiecewiseConstant((x0 + s * t,), (rl, rr))


def eval_riemann_exact(model: FluxModel, data: RiemannData, x, t: float):
    return riemann_profile(model, data, t)(x)


def double_riemann_profile(
    model: FluxModel, data: DoubleRiemannData, t: float
) -> PiecewiseConstant:
    """Exact double Riemann solution (outer states around a rho_m plateau)."""
    if t < 0.0:
        raise ValueError("t must be non-negative")
    c_l, c_r, x1, x2 = data.c_l, data.c_r, data.x1, data.x2
    case = double_riemann_case(model, c_l, c_r)
    lam1, lam2 = double_riemann_speeds(case, c_l, c_r, model)
    if t == 0.0:
        return PiecewiseConstant((x1, x2), (c_l, model.rho_m, c_r), ("right", "left"))
    if case == "2b":
        t_merge = (x2 - x1) / (lam1 - lam2)
        if t > t_merge:
            x_merge = x1 + lam1 * t_merge
            f_l = float(eval_flux(model, c_l))
            f_r = float(eval_flux(model, c_r))
            s = (f_r - f_l) / (c_r - c_l)
            return PiecewiseConstant((x_merge + s * (t - t_merge),), (c_l, c_r), ("right",))
    return PiecewiseConstant(
        (x1 + lam1 * t, x2 + lam2 * t), (c_l, model.rho_m, c_r), ("right", "left")
    )


def eval_double_riemann_exact(model: FluxModel, data: DoubleRiemannData, x, t: float):
    return double_riemann_profile(model, data, t)(x)
