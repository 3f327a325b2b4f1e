"""Error norms, convergence rates and conservation tracking."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .engine import GridState, SolverConfig, run
from .exact import PiecewiseConstant, RiemannData, riemann_profile
from .initial import riemann_cells

# grid ladder for the Riemann convergence studies
RIEMANN_DXS = (0.05, 0.025, 0.0125, 0.00625, 0.003125, 0.0025)

# published rates: (rho_l, rho_r) -> (godunov L1, L2, high-res L1, L2)
PUBLISHED_RATES = {
    (0.9, 0.2): (0.643, 0.367, 1.022, 0.569),
    (0.4, 0.9): (0.488, 0.232, 0.832, 0.375),
    (0.3, 0.98): (0.754, 0.373, 1.053, 0.627),
    (0.1, 0.4): (0.487, 0.145, 0.700, 0.238),
}
RATE_TOL = 0.15

Oracle = PiecewiseConstant | Callable[[float], PiecewiseConstant]


@dataclass(frozen=True)
class RunReport:
    levels: tuple[tuple[float, float, float], ...]
    rate_l1: float | None
    rate_l2: float | None
    er_series: tuple[tuple[float, float], ...] = field(default_factory=tuple)

    def __post_init__(self):
        dxs = [lv[0] for lv in self.levels]
        if any(b >= a for a, b in zip(dxs, dxs[1:])):
            raise ValueError("levels must be sorted by decreasing dx")
        for r in (self.rate_l1, self.rate_l2):
            if r is not None and not math.isfinite(r):
                raise ValueError("stored rates must be finite (use None when degenerate)")

    @property
    def degenerate(self) -> bool:
        return self.rate_l1 is None


def reference_values(state: GridState, oracle: Oracle, sampling: str = "average") -> np.ndarray:
    """Oracle values on the grid of ``state``.

    ``sampling="average"`` integrates the profile exactly over each cell;
    ``"center"`` samples it at the cell centers.
    """
    profile = oracle if isinstance(oracle, PiecewiseConstant) else oracle(state.time)
    if sampling == "average":
        return profile.cell_averages(state.edges)
    if sampling == "center":
        return np.asarray(profile(state.centers), dtype=float)
    raise ValueError(f"unknown sampling {sampling!r}")


def discrete_l1(diff, dx: float) -> float:
    return dx * float(np.sum(np.abs(diff)))


def discrete_l2(diff, dx: float) -> float:
    diff = np.asarray(diff, dtype=float)
    return math.sqrt(dx * float(np.sum(diff * diff)))


def l1_error(state: GridState, oracle: Oracle, sampling: str = "average") -> float:
    return discrete_l1(state.q - reference_values(state, oracle, sampling), state.dx)


def l2_error(state: GridState, oracle: Oracle, sampling: str = "average") -> float:
    return discrete_l2(state.q - reference_values(state, oracle, sampling), state.dx)


def fit_rate(levels: Sequence[tuple[float, float]]) -> float:
    """Least-squares slope of log(error) against log(dx).

    Returns ``math.inf`` when some error is exactly zero.
    """
    if len(levels) < 3:
        raise ValueError("need at least three levels to fit a rate")
    dx = np.array([lv[0] for lv in levels], dtype=float)
    err = np.array([lv[1] for lv in levels], dtype=float)
    if np.any(err < 0.0) or np.any(dx <= 0.0):
        raise ValueError("dx must be positive and errors non-negative")
    if np.any(err == 0.0):
        return math.inf
    return float(np.polyfit(np.log(dx), np.log(err), 1)[0])


def _finite_or_none(rate: float) -> float | None:
    return rate if math.isfinite(rate) else None


def conservation_error(states: Sequence[GridState]) -> list[tuple[float, float]]:
    """(time, E_r) for each snapshot, E_r = (V^n - V^0) / V^0.

    E_r is NaN throughout when the initial total V^0 vanishes.
    """
    if not states:
        return []
    n0, lo0, hi0 = states[0].n_cells, states[0].x_lo, states[0].x_hi
    for s in states:
        if (s.n_cells, s.x_lo, s.x_hi) != (n0, lo0, hi0):
            raise ValueError("snapshots must share the grid")
    v0 = states[0].mass
    if v0 == 0.0:
        return [(s.time, math.nan) for s in states]
    return [(s.time, (s.mass - v0) / v0) for s in states]


def restrict(q: np.ndarray, factor: int, mode: str = "block") -> np.ndarray:
    """Map ``q`` onto a grid ``factor`` times coarser.

    ``"block"`` averages each block of ``factor`` cells. ``"inject"`` takes
    the middle cell of each block, whose center coincides with the coarse
    cell center when ``factor`` is odd.
    """
    q = np.asarray(q, dtype=float)
    if factor < 1 or q.size % factor:
        raise ValueError(f"cannot restrict {q.size} cells by a factor {factor}")
    if mode == "block":
        return q.reshape(-1, factor).mean(axis=1)
    if mode == "inject":
        if factor % 2 == 0:
            raise ValueError("injection needs an odd refinement factor")
        return q[factor // 2 :: factor].copy()
    raise ValueError(f"unknown restriction {mode!r}")


def _report(rows, er_series=()) -> RunReport:
    rows = sorted(rows, key=lambda r: -r[0])
    r1 = fit_rate([(dx, e1) for dx, e1, _ in rows])
    r2 = fit_rate([(dx, e2) for dx, _, e2 in rows])
    return RunReport(tuple(rows), _finite_or_none(r1), _finite_or_none(r2), tuple(er_series))


def self_convergence_runs(
    config: SolverConfig,
    initial: Callable[[np.ndarray], np.ndarray],
    dx0: float,
    levels: int,
    t: float,
    x_lo: float = -1.0,
    x_hi: float = 1.0,
    bc: str = "periodic",
    high_resolution: bool = True,
) -> list[GridState]:
    """Solutions at t on grids dx0 / 3^p, p = 0..levels.

    ``initial`` maps cell edges to initial cell averages.
    """
    if levels < 3:
        raise ValueError("self-convergence needs at least three refinement levels")
    n0 = int(round((x_hi - x_lo) / dx0))
    if n0 < 1 or not math.isclose(n0 * dx0, x_hi - x_lo, rel_tol=1e-9):
        raise ValueError("dx0 must divide the domain length")
    solutions = []
    for p in range(levels + 1):
        edges = np.linspace(x_lo, x_hi, n0 * 3**p + 1)
        state = GridState(x_lo, x_hi, initial(edges), bc)
        solutions.append(run(state, config, [t], high_resolution=high_resolution)[-1])
    return solutions


def self_convergence_report(solutions: Sequence[GridState], restriction: str = "block") -> RunReport:
    """Errors of each level against the finest one, restricted to its grid."""
    fine = solutions[-1]
    rows = []
    for sol in solutions[:-1]:
        factor = fine.n_cells // sol.n_cells
        diff = sol.q - restrict(fine.q, factor, restriction)
        rows.append((sol.dx, discrete_l1(diff, sol.dx), discrete_l2(diff, sol.dx)))
    return _report(rows)


def self_convergence(
    config: SolverConfig,
    initial: Callable[[np.ndarray], np.ndarray],
    dx0: float,
    levels: int,
    t: float,
    restriction: str = "block",
    **kwargs,
) -> RunReport:
    solutions = self_convergence_runs(config, initial, dx0, levels, t, **kwargs)
    return self_convergence_report(solutions, restriction)


def riemann_convergence_runs(
    config: SolverConfig,
    rho_l: float,
    rho_r: float,
    t: float = 0.2,
    dxs: Sequence[float] = RIEMANN_DXS,
    high_resolution: bool = True,
    x_lo: float = -1.0,
    x_hi: float = 1.0,
    x0: float = 0.0,
) -> list[GridState]:
    """Riemann solutions at t on each grid of the ladder (outflow boundaries)."""
    out = []
    for dx in sorted(dxs, reverse=True):
        edges = np.linspace(x_lo, x_hi, int(round((x_hi - x_lo) / dx)) + 1)
        state = GridState(x_lo, x_hi, riemann_cells(edges, rho_l, rho_r, x0), "outflow")
        out.append(run(state, config, [t], high_resolution=high_resolution)[-1])
    return out


def convergence_report(states: Sequence[GridState], oracle: Oracle, sampling: str = "average") -> RunReport:
    rows = [(s.dx, l1_error(s, oracle, sampling), l2_error(s, oracle, sampling)) for s in states]
    return _report(rows)


def riemann_convergence(
    config: SolverConfig,
    rho_l: float,
    rho_r: float,
    t: float = 0.2,
    sampling: str = "average",
    x0: float = 0.0,
    **kwargs,
) -> RunReport:
    """Errors against the exact Riemann solution on a ladder of grids."""
    states = riemann_convergence_runs(config, rho_l, rho_r, t, x0=x0, **kwargs)
    oracle = riemann_profile(config.model, RiemannData(rho_l, rho_r, x0), t)
    return convergence_report(states, oracle, sampling)


def longest_run(mask) -> int:
    """Length of the longest run of True values."""
    best = cur = 0
    for flag in np.asarray(mask, dtype=bool):
        cur = cur + 1 if flag else 0
        best = max(best, cur)
    return best


def left_plateau_length(q, rho_m: float, tol: float = 0.01) -> int:
    """Longest run of cells within ``tol`` of rho_m left of the congested peak.

    Returns 0 when there is no congested peak (max q <= rho_m + tol), since
    a plateau in front of congestion needs congestion to exist.
    """
    q = np.asarray(q, dtype=float)
    peak = int(np.argmax(q))
    if q[peak] <= rho_m + tol:
        return 0
    return longest_run(np.abs(q[:peak] - rho_m) <= tol)


def has_left_plateau(q, rho_m: float, tol: float = 0.01, min_cells: int = 5) -> bool:
    return left_plateau_length(q, rho_m, tol) >= min_cells
