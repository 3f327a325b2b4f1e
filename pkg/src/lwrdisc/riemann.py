"""Interface Riemann solver for the discontinuous piecewise-linear flux.

Each interface between cells ``Q_j`` and ``Q_{j+1}`` falls into one of eight
cases (rows). Rows 2 and 3 involve a state sitting on ``rho_m``; these are
the pieces of a double Riemann problem, and the infinite-speed zero waves
they would emit are accounted for through the branch choice of the wave speed
rather than being represented explicitly. Row 3 needs the first downstream
state that is not on ``rho_m`` (the look-ahead state).

Waves in a fan are stored in ascending speed order; a single-wave row pairs
its wave with a null wave (speed 0), so a left-going wave always sits in the
first slot and a right-going wave in the second.
"""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass

import numpy as np

from .flux import DomainError, FluxKind, FluxModel, ParameterError, eval_flux

log = logging.getLogger(__name__)


class WaveKind(str, enum.Enum):
    SHOCK = "shock"
    CONTACT = "contact"
    PLATEAU_BOUNDARY = "plateau_boundary"
    NULL = "null"


@dataclass(frozen=True)
class Wave:
    speed: float
    strength: float
    family: int
    kind: WaveKind

    def __post_init__(self):
        if self.kind is WaveKind.NULL and (self.speed != 0.0 or self.strength != 0.0):
            raise ValueError("null waves carry neither speed nor strength")
        if abs(self.strength) > 1.0:
            raise ValueError(f"wave strength {self.strength} exceeds 1")


NULL_WAVE_1 = Wave(0.0, 0.0, 1, WaveKind.NULL)
NULL_WAVE_2 = Wave(0.0, 0.0, 2, WaveKind.NULL)


@dataclass(frozen=True)
class WaveFan:
    waves: tuple[Wave, Wave]
    case_label: int
    used_lookahead: bool = False

    @property
    def speeds(self) -> tuple[float, float]:
        return (self.waves[0].speed, self.waves[1].speed)

    @property
    def strengths(self) -> tuple[float, float]:
        return (self.waves[0].strength, self.waves[1].strength)

    def fluctuations(self) -> tuple[float, float]:
        """Left- and right-going fluctuations (sum s^- W, sum s^+ W)."""
        left = sum(min(w.speed, 0.0) * w.strength for w in self.waves)
        right = sum(max(w.speed, 0.0) * w.strength for w in self.waves)
        return left, right


def _require_discontinuous(model: FluxModel):
    if model.kind is not FluxKind.DISCONTINUOUS:
        raise ParameterError(
            f"interface solver needs the discontinuous flux, got {model.kind.value}"
        )


def _check(q):
    if not 0.0 <= q <= 1.0:
        raise DomainError(f"density {q} outside [0, 1]")


def classify_case(model: FluxModel, q_left: float, q_right: float, delta: float = 0.0) -> int:
    """Row (1-8) of the wave table for the pair (q_left, q_right)."""
    _check(q_left)
    _check(q_right)
    rho_m = model.rho_m
    on_left = abs(q_left - rho_m) <= delta
    on_right = abs(q_right - rho_m) <= delta
    if on_left and on_right:
        return 1
    if on_left:
        return 2
    if on_right:
        return 3
    if q_left > rho_m and q_right > rho_m:
        return 4
    if q_left < rho_m and q_right < rho_m:
        return 5
    if q_left < rho_m < q_right:
        return 6 if model.critical >= q_left else 7
    return 8


def _single(speed, strength, kind) -> tuple[Wave, Wave]:
    if speed < 0.0:
        return (Wave(speed, strength, 1, kind), NULL_WAVE_2)
    return (NULL_WAVE_1, Wave(speed, strength, 2, kind))


def solve_interface(
    model: FluxModel,
    q_left: float,
    q_right: float,
    q_lookahead: float | None = None,
    delta: float = 0.0,
) -> WaveFan:
    """Wave fan at one interface.

    ``q_lookahead`` is the first downstream state off the ``rho_m`` plateau;
    it is only consulted when ``q_right`` sits on the plateau. ``None`` (or
    ``rho_m`` itself) means nothing was found and selects the free-flow
    branch.
    """
    _require_discontinuous(model)
    row = classify_case(model, q_left, q_right, delta)
    rho_m, gamma = model.rho_m, model.gamma
    jump = q_right - q_left
    g_f_m = rho_m
    g_c_m = gamma * (1.0 - rho_m)

    if row == 1:
        if jump == 0.0:
            return WaveFan((NULL_WAVE_1, NULL_WAVE_2), 1)
        # sub-delta jump kept as a stationary wave so strengths telescope
        return WaveFan((NULL_WAVE_1, Wave(0.0, jump, 2, WaveKind.CONTACT)), 1)
    if row == 2:
        speed = 1.0 if q_right < rho_m else -gamma
        return WaveFan(_single(speed, jump, WaveKind.PLATEAU_BOUNDARY), 2)
    if row == 3:
        if q_lookahead is None:
            q_lookahead = rho_m
        congested = q_lookahead > rho_m + delta
        if not congested and abs(q_lookahead - rho_m) <= delta:
            log.debug("look-ahead found no state off the plateau; using free-flow branch")
        f_m = g_c_m if congested else g_f_m
        speed = (f_m - float(eval_flux(model, q_left))) / (rho_m - q_left)
        # the plateau state is taken as exactly rho_m: with the raw value the
        # flux error is |speed| * delta, which is O(1) since |speed| ~ 1/delta
        return WaveFan(_single(speed, rho_m - q_left, WaveKind.SHOCK), 3, used_lookahead=True)
    if jump == 0.0:
        return WaveFan((NULL_WAVE_1, NULL_WAVE_2), row)
    if row == 4:
        return WaveFan(_single(-gamma, jump, WaveKind.CONTACT), 4)
    if row == 5:
        return WaveFan(_single(1.0, jump, WaveKind.CONTACT), 5)
    if row == 6:
        speed = (float(eval_flux(model, q_right)) - q_left) / jump
        return WaveFan(_single(speed, jump, WaveKind.SHOCK), 6)
    if row == 7:
        shock = Wave((g_c_m - q_left) / (rho_m - q_left), rho_m - q_left, 1, WaveKind.SHOCK)
        contact = Wave(-gamma, q_right - rho_m, 2, WaveKind.PLATEAU_BOUNDARY)
        return WaveFan(tuple(sorted((shock, contact), key=lambda w: w.speed)), 7)
    f_l = float(eval_flux(model, q_left))
    shock = Wave((f_l - g_f_m) / (q_left - rho_m), rho_m - q_left, 1, WaveKind.SHOCK)
    contact = Wave(1.0, q_right - rho_m, 2, WaveKind.PLATEAU_BOUNDARY)
    return WaveFan((shock, contact), 8)


def solve_interfaces(
    model: FluxModel,
    q_left: np.ndarray,
    q_right: np.ndarray,
    q_lookahead: np.ndarray,
    delta: float,
):
    """Vectorized counterpart of :func:`solve_interface`.

    Returns ``(speeds, strengths, rows)`` with ``speeds`` and ``strengths`` of
    shape ``(n, 2)`` in the same slot layout as :class:`WaveFan`.
    """
    _require_discontinuous(model)
    ql = np.asarray(q_left, dtype=float)
    qr = np.asarray(q_right, dtype=float)
    qi = np.asarray(q_lookahead, dtype=float)
    rho_m, gamma = model.rho_m, model.gamma
    g_c_m = gamma * (1.0 - rho_m)
    n = ql.shape[0]

    on_l = np.abs(ql - rho_m) <= delta
    on_r = np.abs(qr - rho_m) <= delta
    off = ~on_l & ~on_r
    rows = np.select(
        [
            on_l & on_r,
            on_l,
            on_r,
            off & (ql > rho_m) & (qr > rho_m),
            off & (ql < rho_m) & (qr < rho_m),
            off & (ql < rho_m) & (qr > rho_m) & (model.critical >= ql),
            off & (ql < rho_m) & (qr > rho_m),
        ],
        [1, 2, 3, 4, 5, 6, 7],
        default=8,
    )

    f_l = np.where(ql < rho_m, ql, gamma * (1.0 - ql))
    f_r = np.where(qr < rho_m, qr, gamma * (1.0 - qr))
    jump = qr - ql
    with np.errstate(divide="ignore", invalid="ignore"):
        f_m_look = np.where(qi > rho_m + delta, g_c_m, rho_m)
        s3 = (f_m_look - f_l) / (rho_m - ql)
        s6 = (f_r - f_l) / jump
        s7 = (g_c_m - ql) / (rho_m - ql)
        s8 = (f_l - rho_m) / (ql - rho_m)

    single = np.select(
        [rows == 2, rows == 3, rows == 4, rows == 5, rows == 6],
        [np.where(qr < rho_m, 1.0, -gamma), s3, -gamma, 1.0, s6],
        default=0.0,
    )
    # row 3 treats the plateau state as exactly rho_m (see solve_interface)
    jump = np.where(rows == 3, rho_m - ql, jump)
    speeds = np.zeros((n, 2))
    strengths = np.zeros((n, 2))

    is_single = (rows >= 2) & (rows <= 6)
    neg = is_single & (single < 0.0)
    pos = is_single & ~neg
    speeds[neg, 0] = single[neg]
    strengths[neg, 0] = jump[neg]
    speeds[pos, 1] = single[pos]
    strengths[pos, 1] = jump[pos]

    r1 = rows == 1
    strengths[r1, 1] = (qr - ql)[r1]

    r7 = rows == 7
    # both waves move left; sort by speed
    a_s, a_w = s7[r7], rho_m - ql[r7]
    b_s, b_w = np.full(a_s.shape, -gamma), qr[r7] - rho_m
    first = a_s <= b_s
    speeds[r7, 0] = np.where(first, a_s, b_s)
    strengths[r7, 0] = np.where(first, a_w, b_w)
    speeds[r7, 1] = np.where(first, b_s, a_s)
    strengths[r7, 1] = np.where(first, b_w, a_w)

    r8 = rows == 8
    speeds[r8, 0] = s8[r8]
    strengths[r8, 0] = rho_m - ql[r8]
    speeds[r8, 1] = 1.0
    strengths[r8, 1] = qr[r8] - rho_m
    return speeds, strengths, rows


# --- double Riemann problem -------------------------------------------------

DOUBLE_RIEMANN_CASES = ("1", "2", "2a", "2b", "3", "4")


def double_riemann_case(model: FluxModel, c_left: float, c_right: float) -> str:
    """Case tag of the double Riemann problem (c_left, rho_m, c_right)."""
    rho_m = model.rho_m
    if c_left == rho_m or c_right == rho_m:
        raise ValueError("outer states of a double Riemann problem must differ from rho_m")
    if c_left < rho_m and c_right < rho_m:
        return "1"
    if c_left < rho_m < c_right:
        return "2a" if c_left >= model.critical else "2b"
    if c_right < rho_m < c_left:
        return "3"
    return "4"


def double_riemann_speeds(case: str, c_left: float, c_right: float, model: FluxModel):
    """Speeds (lambda_1, lambda_2) of the two outer waves, for t = O(1)."""
    case = str(case)
    if case not in DOUBLE_RIEMANN_CASES:
        raise ValueError(f"unknown double Riemann case {case!r}")
    actual = double_riemann_case(model, c_left, c_right)
    if case != actual and not (case == "2" and actual.startswith("2")):
        raise ValueError(
            f"states ({c_left}, {c_right}) belong to case {actual}, not case {case}"
        )
    rho_m, gamma = model.rho_m, model.gamma
    f_l = float(eval_flux(model, c_left))
    if actual == "1":
        return 1.0, 1.0
    if actual == "3":
        return (rho_m - f_l) / (rho_m - c_left), 1.0
    # cases 2 and 4: f(rho_m) taken on the congested branch
    return (gamma * (1.0 - rho_m) - f_l) / (rho_m - c_left), -gamma
