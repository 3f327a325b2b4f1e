"""Godunov-type finite volume scheme in wave-propagation form.

For the discontinuous flux each interface is solved with the table-driven
solver in :mod:`lwrdisc.riemann`, after a look-ahead scan supplies the first
downstream state off the ``rho_m`` plateau. Continuous piecewise-linear
fluxes (used for comparison runs) go through the exact Godunov flux instead.
The high-resolution variant adds LeVeque's wave-limited correction fluxes.
"""
from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .flux import FluxKind, FluxModel, ParameterError, eval_flux
from .riemann import WaveFan, solve_interface, solve_interfaces

log = logging.getLogger(__name__)

BOUND_TOL = 1e-12
MAX_REJECTIONS = 5
GHOST = 2


class SolverError(RuntimeError):
    pass


class BC(str, enum.Enum):
    PERIODIC = "periodic"
    OUTFLOW = "outflow"


class Limiter(str, enum.Enum):
    NONE = "none"
    MINMOD = "minmod"
    SUPERBEE = "superbee"
    MC = "mc"


def limiter_function(limiter: Limiter, theta: np.ndarray) -> np.ndarray:
    limiter = Limiter(limiter)
    if limiter is Limiter.NONE:
        return np.zeros_like(theta)
    if limiter is Limiter.MINMOD:
        return np.maximum(0.0, np.minimum(1.0, theta))
    if limiter is Limiter.SUPERBEE:
        return np.maximum.reduce(
            [np.zeros_like(theta), np.minimum(1.0, 2.0 * theta), np.minimum(2.0, theta)]
        )
    return np.maximum(0.0, np.minimum.reduce([(1.0 + theta) / 2.0, np.full_like(theta, 2.0), 2.0 * theta]))


@dataclass(frozen=True)
class GridState:
    x_lo: float
    x_hi: float
    q: np.ndarray
    bc: BC = BC.PERIODIC
    time: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "bc", BC(self.bc))
        q = np.array(self.q, dtype=float)
        q.setflags(write=False)
        object.__setattr__(self, "q", q)
        if q.ndim != 1 or q.size == 0:
            raise ValueError("q must be a non-empty 1D sequence")
        if not self.x_hi > self.x_lo:
            raise ValueError("need x_hi > x_lo")

    @property
    def n_cells(self) -> int:
        return self.q.size

    @property
    def dx(self) -> float:
        return (self.x_hi - self.x_lo) / self.n_cells

    @property
    def edges(self) -> np.ndarray:
        return np.linspace(self.x_lo, self.x_hi, self.n_cells + 1)

    @property
    def centers(self) -> np.ndarray:
        e = self.edges
        return 0.5 * (e[:-1] + e[1:])

    @property
    def mass(self) -> float:
        return self.dx * float(np.sum(self.q))

    def evolved(self, q, time) -> "GridState":
        return replace(self, q=q, time=time)


@dataclass(frozen=True)
class SolverConfig:
    model: FluxModel = field(default_factory=FluxModel)
    cfl: float = 0.9
    delta: float = 1e-5
    limiter: Limiter = Limiter.SUPERBEE
    t_end: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "limiter", Limiter(self.limiter))
        if not 0.0 < self.cfl < 1.0:
            raise ValueError(f"cfl must lie in (0, 1), got {self.cfl}")
        if self.delta < 0.0:
            raise ValueError(f"delta must be non-negative, got {self.delta}")
        if self.model.kind is FluxKind.MOLLIFIED:
            raise ParameterError("the mollified flux is for analysis only")


# --- look-ahead -------------------------------------------------------------


def lookahead_index(q, j: int, rho_m: float, delta: float, bc: BC) -> float:
    """First state Q_k, k > j+1, off the rho_m plateau; rho_m if none exists.

    Periodic grids wrap around and scan at most N-1 cells.
    """
    q = np.asarray(q, dtype=float)
    n = q.size
    if BC(bc) is BC.PERIODIC:
        ks = [(j + 2 + m) % n for m in range(n - 1)]
    else:
        ks = range(j + 2, n)
    for k in ks:
        if abs(q[k] - rho_m) > delta:
            return float(q[k])
    return rho_m


def lookahead_states(q: np.ndarray, rho_m: float, delta: float, bc: BC) -> np.ndarray:
    """Vectorized look-ahead state for every left-cell index j."""
    n = q.size
    reps = 3 if BC(bc) is BC.PERIODIC else 1
    qq = np.tile(q, reps)
    size = qq.size
    idx = np.where(np.abs(qq - rho_m) > delta, np.arange(size), size)
    nxt = np.minimum.accumulate(idx[::-1])[::-1]
    nxt = np.append(nxt, size)
    j = np.arange(n)
    start = np.minimum(j + 2, size)
    found = nxt[start]
    limit = j + n if reps == 3 else n - 1
    ok = found <= limit
    out = np.full(n, rho_m)
    out[ok] = qq[found[ok]]
    return out


# --- interface waves ----------------------------------------------------------


@dataclass(frozen=True)
class InterfaceWaves:
    """Waves on the padded interface set (N + 2*GHOST - 1 interfaces)."""

    speeds: np.ndarray
    strengths: np.ndarray
    amdq: np.ndarray
    apdq: np.ndarray
    max_speed: np.ndarray
    rows: np.ndarray | None = None


def _pad(q: np.ndarray, bc: BC) -> np.ndarray:
    if bc is BC.PERIODIC:
        return np.concatenate((np.resize(q[::-1], GHOST)[::-1], q, np.resize(q, GHOST)))
    return np.concatenate((np.full(GHOST, q[0]), q, np.full(GHOST, q[-1])))


def _table_waves(q: np.ndarray, config: SolverConfig, bc: BC) -> InterfaceWaves:
    model = config.model
    qp = _pad(q, bc)
    n = q.size
    left_cell = np.arange(qp.size - 1) - GHOST
    left_cell = left_cell % n if bc is BC.PERIODIC else np.clip(left_cell, 0, n - 1)
    look = lookahead_states(q, model.rho_m, config.delta, bc)[left_cell]
    speeds, strengths, rows = solve_interfaces(model, qp[:-1], qp[1:], look, config.delta)
    speeds[strengths == 0.0] = 0.0
    amdq = np.sum(np.minimum(speeds, 0.0) * strengths, axis=1)
    apdq = np.sum(np.maximum(speeds, 0.0) * strengths, axis=1)
    return InterfaceWaves(speeds, strengths, amdq, apdq, np.max(np.abs(speeds), axis=1), rows)


def _pieces(model: FluxModel):
    """(lo, hi, slope) of each linear piece of a continuous flux."""
    if model.kind is FluxKind.CONTINUOUS:
        k = model.congested_slope
        return [(0.0, model.rho_m, 1.0), (model.rho_m, 1.0, -k)]
    lo, hi = model.rho_m - model.epsilon, model.rho_m + model.epsilon
    chord = (model.gamma * (1.0 - hi) - lo) / (hi - lo)
    return [(0.0, lo, 1.0), (lo, hi, chord), (hi, 1.0, -model.gamma)]


def godunov_flux(model: FluxModel, ql: np.ndarray, qr: np.ndarray) -> np.ndarray:
    """Exact Godunov flux for a continuous piecewise-linear flux."""
    lo = np.minimum(ql, qr)
    hi = np.maximum(ql, qr)
    cands = [eval_flux(model, ql), eval_flux(model, qr)]
    increasing = ql <= qr
    for b in model.breakpoints():
        inside = (lo < b) & (b < hi)
        fb = float(eval_flux(model, b))
        # a breakpoint outside the interval must not win the min/max
        cands.append(np.where(inside, fb, np.where(increasing, np.inf, -np.inf)))
    stack = np.vstack(cands)
    return np.where(increasing, stack.min(axis=0), stack.max(axis=0))


def _godunov_waves(q: np.ndarray, config: SolverConfig, bc: BC) -> InterfaceWaves:
    model = config.model
    qp = np.clip(_pad(q, bc), 0.0, 1.0)
    ql, qr = qp[:-1], qp[1:]
    f_l = np.asarray(eval_flux(model, ql))
    f_r = np.asarray(eval_flux(model, qr))
    flux = godunov_flux(model, ql, qr)
    jump = qr - ql
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(jump != 0.0, (f_r - f_l) / jump, 0.0)
    speeds = np.zeros((ql.size, 2))
    strengths = np.zeros((ql.size, 2))
    slot = (s >= 0.0).astype(int)
    rows = np.arange(ql.size)
    speeds[rows, slot] = s
    strengths[rows, slot] = jump
    lo, hi = np.minimum(ql, qr), np.maximum(ql, qr)
    max_speed = np.zeros(ql.size)
    for a, b, k in _pieces(model):
        touches = (jump != 0.0) & (hi >= a) & (lo <= b)
        max_speed = np.where(touches, np.maximum(max_speed, abs(k)), max_speed)
    return InterfaceWaves(speeds, strengths, flux - f_l, f_r - flux, max_speed)


def interface_waves(q: np.ndarray, config: SolverConfig, bc: BC) -> InterfaceWaves:
    if config.model.kind is FluxKind.DISCONTINUOUS:
        return _table_waves(q, config, bc)
    return _godunov_waves(q, config, bc)


def compute_interface_waves(state: GridState, config: SolverConfig) -> list[WaveFan]:
    """Wave fan at every physical interface, built with the scalar solver.

    Periodic grids have N interfaces (j+1/2 for j = 0..N-1, the last one
    wrapping); outflow grids have N+1, the outer two facing ghost cells.
    """
    q = state.q
    n = q.size
    model = config.model
    fans = []
    if state.bc is BC.PERIODIC:
        pairs = [(j, (j + 1) % n) for j in range(n)]
    else:
        pairs = [(0, 0)] + [(j, j + 1) for j in range(n - 1)] + [(n - 1, n - 1)]
    for j, k in pairs:
        ql, qr = float(q[j]), float(q[k])
        look = None
        if abs(qr - model.rho_m) <= config.delta and abs(ql - model.rho_m) > config.delta:
            look = lookahead_index(q, j, model.rho_m, config.delta, state.bc)
        fan = solve_interface(model, ql, qr, look, config.delta)
        fans.append(fan)
    return fans


def select_dt(speeds, dx: float, cfl: float, dt_max: float) -> float:
    """CFL-limited step from the fastest nonzero wave speed."""
    s = np.abs(np.asarray(speeds, dtype=float))
    fastest = float(np.max(s)) if s.size else 0.0
    if fastest == 0.0:
        return dt_max
    return cfl * dx / fastest


# --- time stepping -----------------------------------------------------------


def _update(q: np.ndarray, waves: InterfaceWaves, dt: float, dx: float, limiter: Limiter):
    n = q.size
    nu = dt / dx
    apdq = waves.apdq[GHOST - 1 : GHOST - 1 + n]
    amdq = waves.amdq[GHOST : GHOST + n]
    q_new = q - nu * (apdq + amdq)
    if limiter is Limiter.NONE:
        return q_new
    s = waves.speeds
    w = waves.strengths
    m = s.shape[0]
    k = np.arange(1, m - 1)
    upwind = np.where(s[k] > 0.0, k[:, None] - 1, k[:, None] + 1)
    w_up = np.take_along_axis(w, upwind, axis=0)
    w_loc = w[k]
    with np.errstate(divide="ignore", invalid="ignore"):
        theta = np.where((w_loc != 0.0) & (w_up != 0.0), w_up / w_loc, 0.0)
    phi = limiter_function(limiter, theta)
    abs_s = np.abs(s[k])
    corr = 0.5 * np.sum(abs_s * (1.0 - nu * abs_s) * phi * w_loc, axis=1)
    # corr[i] belongs to padded interface i+1
    f_left = corr[0:n]
    f_right = corr[1 : n + 1]
    return q_new - nu * (f_right - f_left)


def _step(state, config, limiter, dt, waves=None):
    if waves is None:
        waves = interface_waves(state.q, config, state.bc)
    if dt is None:
        dt = select_dt(waves.max_speed, state.dx, config.cfl, max(config.t_end - state.time, 0.0))
    for _ in range(MAX_REJECTIONS + 1):
        q_new = _update(state.q, waves, dt, state.dx, limiter)
        if np.all(q_new >= -BOUND_TOL) and np.all(q_new <= 1.0 + BOUND_TOL):
            return state.evolved(q_new, state.time + dt), dt
        log.warning("step rejected at t=%g (dt=%g): density left [0, 1]", state.time, dt)
        dt *= 0.5
    raise SolverError(f"step at t={state.time} rejected {MAX_REJECTIONS} times")


def step_first_order(state: GridState, config: SolverConfig, dt: float | None = None) -> GridState:
    return _step(state, config, Limiter.NONE, dt)[0]


def step_high_resolution(
    state: GridState, config: SolverConfig, dt: float | None = None
) -> GridState:
    return _step(state, config, config.limiter, dt)[0]


@dataclass
class RunStats:
    steps: int = 0
    min_dt: float = math.inf
    max_dt: float = 0.0


def run(
    initial: GridState,
    config: SolverConfig,
    output_times,
    high_resolution: bool = True,
    stats: RunStats | None = None,
    max_steps: int = 10_000_000,
) -> list[GridState]:
    """Advance ``initial`` and return a snapshot at each output time.

    The last step before each output time is shortened to land on it exactly.
    """
    times = [float(t) for t in output_times]
    if any(b < a for a, b in zip(times, times[1:])):
        raise ValueError("output times must be ascending")
    if times and times[-1] > config.t_end + 1e-12:
        raise ValueError("output times must not exceed t_end")
    limiter = config.limiter if high_resolution else Limiter.NONE
    stats = stats if stats is not None else RunStats()
    state = initial
    snapshots = []
    for target in times:
        if target < state.time:
            raise ValueError("output time precedes the initial time")
        while state.time < target:
            waves = interface_waves(state.q, config, state.bc)
            dt = select_dt(waves.max_speed, state.dx, config.cfl, target - state.time)
            remaining = target - state.time
            if dt >= remaining * (1.0 - 1e-13):
                dt = remaining
            state, dt_taken = _step(state, config, limiter, dt, waves)
            if dt_taken == remaining:
                state = state.evolved(state.q, target)
            dt = dt_taken
            stats.steps += 1
            stats.min_dt = min(stats.min_dt, dt)
            stats.max_dt = max(stats.max_dt, dt)
            if stats.steps > max_steps:
                raise SolverError(f"exceeded {max_steps} steps before t={target}")
        snapshots.append(state)
    return snapshots
