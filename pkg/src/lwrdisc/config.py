"""Flat ``key = value`` experiment configuration.

Keys are dotted (``solver.cfl = 0.9``). Blank lines and ``#`` comments are
ignored. Lists are comma separated. Every key has a default except the
experiment tag and, for Riemann initial data, the two states.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

from .engine import BC, Limiter, SolverConfig
from .flux import FluxKind, FluxModel, ParameterError

EXPERIMENTS = (
    "riemann",
    "gaussian",
    "ring_congestion",
    "convergence",
    "conservation",
    "mollifier_report",
    "flux_compare",
)


RESULT_PREFIX = "result."


class ConfigError(ValueError):
    """Malformed document (syntax, unknown key, unparseable value)."""


class ValidationError(ValueError):
    """Well-formed document whose values violate a model or solver constraint."""


@dataclass(frozen=True)
class RiemannIC:
    rho_l: float
    rho_r: float
    x0: float = 0.0


@dataclass(frozen=True)
class GaussianIC:
    sigma: float = 0.1
    amplitude: float = 1.0
    offset: float = 0.0


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    flux: FluxModel
    ic: RiemannIC | GaussianIC | None
    x_lo: float
    x_hi: float
    n_cells: int
    bc: BC
    solver: SolverConfig
    high_resolution: bool = True
    output_times: tuple[float, ...] = ()
    out_dir: str = "out"
    # convergence studies
    dxs: tuple[float, ...] = ()
    dx0: float = 0.2
    levels: int = 6
    # mollifier report
    epsilons: tuple[float, ...] = (1e-1, 1e-2, 1e-3)
    samples: int = 201
    # flux comparison
    plateau_tol: float = 0.01
    plateau_cells: int = 5
    regularized_epsilon: float = 1e-3
    raw: dict = field(default_factory=dict, compare=False)

    @property
    def model(self) -> FluxModel:
        return self.flux


# key -> (type, default); None default means required-or-derived
_FLOAT, _INT, _STR, _BOOL, _FLOATS = "float", "int", "str", "bool", "floats"
SCHEMA = {
    "experiment": (_STR, None),
    "ic.type": (_STR, None),
    "ic.rho_l": (_FLOAT, None),
    "ic.rho_r": (_FLOAT, None),
    "ic.x0": (_FLOAT, 0.0),
    "ic.sigma": (_FLOAT, 0.1),
    "ic.amplitude": (_FLOAT, None),
    "ic.offset": (_FLOAT, None),
    "flux.kind": (_STR, "discontinuous"),
    "flux.rho_m": (_FLOAT, 0.5),
    "flux.gamma": (_FLOAT, 0.5),
    "flux.epsilon": (_FLOAT, 0.0),
    "domain.x_lo": (_FLOAT, -1.0),
    "domain.x_hi": (_FLOAT, 1.0),
    "domain.n_cells": (_INT, 400),
    "domain.bc": (_STR, None),
    "solver.cfl": (_FLOAT, 0.9),
    "solver.delta": (_FLOAT, 1e-5),
    "solver.limiter": (_STR, "superbee"),
    "solver.t_end": (_FLOAT, None),
    "solver.high_resolution": (_BOOL, True),
    "output.times": (_FLOATS, None),
    "output.dir": (_STR, "out"),
    "convergence.dxs": (_FLOATS, None),
    "convergence.dx0": (_FLOAT, 0.2),
    "convergence.levels": (_INT, 6),
    "mollifier.epsilons": (_FLOATS, (1e-1, 1e-2, 1e-3)),
    "mollifier.samples": (_INT, 201),
    "compare.tol": (_FLOAT, 0.01),
    "compare.min_cells": (_INT, 5),
    "compare.regularized_epsilon": (_FLOAT, 1e-3),
}


def _convert(kind: str, text: str):
    if kind == _FLOAT:
        value = float(text)
        if not math.isfinite(value):
            raise ValueError(f"non-finite number {text!r}")
        return value
    if kind == _INT:
        return int(text)
    if kind == _BOOL:
        low = text.lower()
        if low in ("true", "yes", "1"):
            return True
        if low in ("false", "no", "0"):
            return False
        raise ValueError(f"not a boolean: {text!r}")
    if kind == _FLOATS:
        items = [s.strip() for s in text.split(",") if s.strip()]
        return tuple(_convert(_FLOAT, s) for s in items)
    return text


def parse_pairs(text: str) -> dict:
    """Raw ``key -> string`` mapping with syntax checks."""
    pairs = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line.strip()!r}")
        key, value = (s.strip() for s in stripped.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in pairs:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        pairs[key] = (lineno, value)
    return pairs


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate a config document.

    Keys under ``result.`` are skipped, so a run manifest parses back into
    the configuration that produced it.
    """
    values = {}
    for key, (lineno, raw) in parse_pairs(text).items():
        if key.startswith(RESULT_PREFIX):
            continue
        if key not in SCHEMA:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            values[key] = _convert(SCHEMA[key][0], raw)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {exc}") from None
    return build_config(values)


def load_config(path) -> ExperimentConfig:
    return parse_config(Path(path).read_text())


def _get(values, key):
    return values.get(key, SCHEMA[key][1])


def _ic(values, experiment):
    default_type = {
        "riemann": "riemann",
        "gaussian": "gaussian",
        "ring_congestion": "gaussian",
        "conservation": "gaussian",
        "flux_compare": "gaussian",
        "convergence": "riemann" if "ic.rho_l" in values else "gaussian",
    }.get(experiment)
    ic_type = values.get("ic.type", default_type)
    if ic_type is None:
        return None
    if ic_type == "riemann":
        missing = [k for k in ("ic.rho_l", "ic.rho_r") if k not in values]
        if missing:
            raise ValidationError(f"Riemann initial data needs {', '.join(missing)}")
        rho_l, rho_r = values["ic.rho_l"], values["ic.rho_r"]
        for key, r in (("ic.rho_l", rho_l), ("ic.rho_r", rho_r)):
            if not 0.0 <= r <= 1.0:
                raise ValidationError(f"{key} = {r} outside the density range [0, 1]")
        return RiemannIC(rho_l, rho_r, _get(values, "ic.x0"))
    if ic_type == "gaussian":
        ring = experiment in ("ring_congestion", "flux_compare")
        amp = values.get("ic.amplitude", 0.5 if ring else 1.0)
        off = values.get("ic.offset", 0.4 if ring else 0.0)
        sigma = _get(values, "ic.sigma")
        if sigma <= 0.0:
            raise ValidationError(f"ic.sigma must be positive, got {sigma}")
        if off < 0.0 or amp < 0.0 or amp + off > 1.0:
            raise ValidationError(
                f"Gaussian densities must stay in [0, 1] (amplitude {amp}, offset {off})"
            )
        return GaussianIC(sigma, amp, off)
    raise ValidationError(f"ic.type must be 'riemann' or 'gaussian', got {ic_type!r}")


def build_config(values: dict) -> ExperimentConfig:
    """Apply defaults and validate a typed ``key -> value`` mapping."""
    experiment = values.get("experiment")
    if experiment is None:
        raise ConfigError("missing required key 'experiment'")
    if experiment not in EXPERIMENTS:
        raise ValidationError(f"experiment must be one of {', '.join(EXPERIMENTS)}; got {experiment!r}")
    ic = _ic(values, experiment)

    try:
        kind = FluxKind(_get(values, "flux.kind"))
    except ValueError:
        raise ValidationError(f"unknown flux.kind {values.get('flux.kind')!r}") from None
    try:
        model = FluxModel(
            kind, _get(values, "flux.rho_m"), _get(values, "flux.gamma"), _get(values, "flux.epsilon")
        )
    except ParameterError as exc:
        raise ValidationError(str(exc)) from None

    x_lo, x_hi = _get(values, "domain.x_lo"), _get(values, "domain.x_hi")
    if not x_hi > x_lo:
        raise ValidationError(f"domain.x_hi ({x_hi}) must exceed domain.x_lo ({x_lo})")
    n_cells = _get(values, "domain.n_cells")
    if n_cells < 1:
        raise ValidationError(f"domain.n_cells must be positive, got {n_cells}")
    bc_default = "outflow" if isinstance(ic, RiemannIC) else "periodic"
    try:
        bc = BC(values.get("domain.bc", bc_default))
        limiter = Limiter(_get(values, "solver.limiter"))
    except ValueError as exc:
        raise ValidationError(str(exc)) from None

    times = values.get("output.times")
    t_end = values.get("solver.t_end")
    if t_end is None:
        t_end = max(times) if times else {"riemann": 0.2, "convergence": 0.2}.get(experiment, 0.5)
        if experiment == "convergence" and not isinstance(ic, RiemannIC):
            t_end = 0.05
        if experiment == "flux_compare" and not times:
            t_end = 0.3
    if times is None:
        times = () if experiment in ("convergence", "mollifier_report") else (t_end,)
    if any(t < 0.0 for t in times) or list(times) != sorted(times):
        raise ValidationError("output.times must be non-negative and ascending")
    if times and times[-1] > t_end:
        raise ValidationError(f"output time {times[-1]} exceeds solver.t_end = {t_end}")

    engine_model = model
    if kind is FluxKind.MOLLIFIED and experiment != "mollifier_report":
        raise ValidationError("the mollified flux can only be used by mollifier_report")
    if experiment == "mollifier_report":
        engine_model = FluxModel(FluxKind.DISCONTINUOUS, model.rho_m, model.gamma)
    try:
        solver = SolverConfig(
            engine_model,
            cfl=_get(values, "solver.cfl"),
            delta=_get(values, "solver.delta"),
            limiter=limiter,
            t_end=t_end,
        )
    except ValueError as exc:
        raise ValidationError(str(exc)) from None

    dxs = values.get("convergence.dxs")
    if dxs is None:
        from .analysis import RIEMANN_DXS

        dxs = RIEMANN_DXS
    if any(dx <= 0.0 for dx in dxs):
        raise ValidationError("convergence.dxs entries must be positive")
    if experiment == "convergence" and isinstance(ic, RiemannIC) and len(set(dxs)) < 3:
        raise ValidationError("convergence.dxs needs at least three distinct grid sizes")
    levels = _get(values, "convergence.levels")
    if experiment == "convergence" and not isinstance(ic, RiemannIC) and levels < 3:
        raise ValidationError(f"convergence.levels must be at least 3, got {levels}")
    epsilons = _get(values, "mollifier.epsilons")
    eps_max = min(model.rho_m, 1.0 - model.rho_m)
    if any(not 0.0 < e < eps_max for e in epsilons):
        raise ValidationError(f"mollifier.epsilons must lie in (0, {eps_max:g})")
    reg_eps = _get(values, "compare.regularized_epsilon")
    if not 0.0 < reg_eps < eps_max:
        raise ValidationError(f"compare.regularized_epsilon must lie in (0, {eps_max:g})")

    return ExperimentConfig(
        experiment=experiment,
        flux=model,
        ic=ic,
        x_lo=x_lo,
        x_hi=x_hi,
        n_cells=n_cells,
        bc=bc,
        solver=solver,
        high_resolution=_get(values, "solver.high_resolution"),
        output_times=tuple(times),
        out_dir=_get(values, "output.dir"),
        dxs=tuple(dxs),
        dx0=_get(values, "convergence.dx0"),
        levels=levels,
        epsilons=tuple(epsilons),
        samples=_get(values, "mollifier.samples"),
        plateau_tol=_get(values, "compare.tol"),
        plateau_cells=_get(values, "compare.min_cells"),
        regularized_epsilon=reg_eps,
        raw=dict(values),
    )


def format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (tuple, list)):
        return ", ".join(format_value(v) for v in value)
    return str(value.value if hasattr(value, "value") else value)


def config_items(cfg: ExperimentConfig) -> list[tuple[str, str]]:
    """Every effective parameter as (key, text), in schema order."""
    items = [("experiment", cfg.experiment)]
    if isinstance(cfg.ic, RiemannIC):
        items += [("ic.type", "riemann"), ("ic.rho_l", cfg.ic.rho_l), ("ic.rho_r", cfg.ic.rho_r),
                  ("ic.x0", cfg.ic.x0)]
    elif isinstance(cfg.ic, GaussianIC):
        items += [("ic.type", "gaussian"), ("ic.sigma", cfg.ic.sigma),
                  ("ic.amplitude", cfg.ic.amplitude), ("ic.offset", cfg.ic.offset)]
    items += [
        ("flux.kind", cfg.model.kind),
        ("flux.rho_m", cfg.model.rho_m),
        ("flux.gamma", cfg.model.gamma),
        ("flux.epsilon", cfg.model.epsilon),
        ("domain.x_lo", cfg.x_lo),
        ("domain.x_hi", cfg.x_hi),
        ("domain.n_cells", cfg.n_cells),
        ("domain.bc", cfg.bc),
        ("solver.cfl", cfg.solver.cfl),
        ("solver.delta", cfg.solver.delta),
        ("solver.limiter", cfg.solver.limiter),
        ("solver.t_end", cfg.solver.t_end),
        ("solver.high_resolution", cfg.high_resolution),
        ("output.times", cfg.output_times),
        ("output.dir", cfg.out_dir),
        ("convergence.dxs", cfg.dxs),
        ("convergence.dx0", cfg.dx0),
        ("convergence.levels", cfg.levels),
        ("mollifier.epsilons", cfg.epsilons),
        ("mollifier.samples", cfg.samples),
        ("compare.tol", cfg.plateau_tol),
        ("compare.min_cells", cfg.plateau_cells),
        ("compare.regularized_epsilon", cfg.regularized_epsilon),
    ]
    return [(k, format_value(v)) for k, v in items]
