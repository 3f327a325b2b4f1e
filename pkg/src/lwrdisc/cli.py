"""Command-line experiment runner.

Usage::

    lwrdisc run config.txt --out results/
    lwrdisc convergence config.txt
    lwrdisc flux-compare config.txt
    lwrdisc mollifier-report config.txt

Snapshot CSVs have the header ``x,q,exact`` (``exact`` only when a closed-form
solution is available) and values written with 17 significant digits.
Manifests use the config format, with results under ``result.`` keys.

Exit codes: 0 success, 2 invalid configuration, 3 solver failure.
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import analysis
from .config import (
    ConfigError,
    ExperimentConfig,
    GaussianIC,
    RiemannIC,
    ValidationError,
    config_items,
    format_value,
    load_config,
)
from .engine import GridState, SolverConfig, SolverError, run
from .exact import RiemannData, riemann_profile
from .flux import (
    FluxKind,
    FluxModel,
    ParameterError,
    RootError,
    anisotropy_check,
    convexity_polynomial,
    convexity_root,
    count_sign_changes,
    eval_flux,
    mollified_flux_derivative,
    mollified_flux_second_derivative,
    mollifier_constant,
)
from .initial import gaussian_cells, riemann_cells

log = logging.getLogger("lwrdisc")

EXIT_OK, EXIT_INVALID, EXIT_SOLVER = 0, 2, 3
DIGITS = "%.17g"


# --- output helpers ------------------------------------------------------------


def write_csv(path: Path, header, columns):
    cols = [np.asarray(c, dtype=float) for c in columns]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in zip(*cols):
            writer.writerow([DIGITS % v for v in row])


def read_csv(path: Path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    return {name: np.array([float(r[i]) for r in body]) for i, name in enumerate(header)}


def write_manifest(path: Path, cfg: ExperimentConfig, results: list[tuple[str, object]]):
    lines = [f"{k} = {v}" for k, v in config_items(cfg)]
    lines += [f"result.{k} = {format_value(v)}" for k, v in results]
    path.write_text("\n".join(lines) + "\n")


def _out_dir(cfg: ExperimentConfig, override: str | None) -> Path:
    out = Path(override if override is not None else cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


# --- shared setup -------------------------------------------------------------


def initial_state(cfg: ExperimentConfig, n_cells: int | None = None) -> GridState:
    n = n_cells or cfg.n_cells
    edges = np.linspace(cfg.x_lo, cfg.x_hi, n + 1)
    ic = cfg.ic
    if isinstance(ic, RiemannIC):
        q = riemann_cells(edges, ic.rho_l, ic.rho_r, ic.x0)
    elif isinstance(ic, GaussianIC):
        q = gaussian_cells(edges, ic.sigma, ic.amplitude, ic.offset)
    else:
        raise ValidationError(f"experiment {cfg.experiment} needs initial data")
    return GridState(cfg.x_lo, cfg.x_hi, q, cfg.bc)


def _oracle(cfg: ExperimentConfig):
    if isinstance(cfg.ic, RiemannIC) and cfg.model.kind is FluxKind.DISCONTINUOUS:
        data = RiemannData(cfg.ic.rho_l, cfg.ic.rho_r, cfg.ic.x0)
        return lambda t: riemann_profile(cfg.model, data, t)
    return None


def _snapshot_columns(state: GridState, oracle):
    if oracle is None:
        return ["x", "q"], [state.centers, state.q]
    exact = oracle(state.time).cell_averages(state.edges)
    return ["x", "q", "exact"], [state.centers, state.q, exact]


# --- commands -----------------------------------------------------------------


def cmd_run(cfg: ExperimentConfig, out: Path) -> list[Path]:
    """Run the configured experiment and write one CSV per output time."""
    state = initial_state(cfg)
    t0 = time.perf_counter()
    snaps = run(state, cfg.solver, cfg.output_times, high_resolution=cfg.high_resolution)
    wall = time.perf_counter() - t0
    oracle = _oracle(cfg)
    written = []
    results = [("wall_time", wall)]
    er = analysis.conservation_error([state] + snaps)[1:]
    for k, snap in enumerate(snaps):
        path = out / f"snapshot_{k:03d}.csv"
        header, cols = _snapshot_columns(snap, oracle)
        write_csv(path, header, cols)
        written.append(path)
        results.append((f"snapshot_{k:03d}.time", snap.time))
        results.append((f"snapshot_{k:03d}.E_r", er[k][1]))
        if oracle is not None:
            results.append((f"snapshot_{k:03d}.l1_error", analysis.l1_error(snap, oracle)))
    write_manifest(out / "manifest.txt", cfg, results)
    return written


def _rate_text(rate):
    return "none" if rate is None else format_value(rate)


def _write_levels(path: Path, report: analysis.RunReport):
    levels = report.levels
    write_csv(path, ["dx", "l1", "l2"], list(zip(*levels)) if levels else [[], [], []])


def cmd_convergence(cfg: ExperimentConfig, out: Path) -> list[str]:
    """Convergence study; returns the pass/fail lines that were printed."""
    results = []
    lines = []
    if isinstance(cfg.ic, RiemannIC):
        ic = cfg.ic
        oracle = riemann_profile(cfg.model, RiemannData(ic.rho_l, ic.rho_r, ic.x0), cfg.solver.t_end)
        target = analysis.PUBLISHED_RATES.get((ic.rho_l, ic.rho_r))
        for scheme, hr in (("godunov", False), ("high_resolution", True)):
            states = analysis.riemann_convergence_runs(
                cfg.solver, ic.rho_l, ic.rho_r, cfg.solver.t_end, cfg.dxs, hr,
                cfg.x_lo, cfg.x_hi, ic.x0,
            )
            for sampling in ("average", "center"):
                rep = analysis.convergence_report(states, oracle, sampling)
                _write_levels(out / f"convergence_{scheme}_{sampling}.csv", rep)
                results.append((f"{scheme}.{sampling}.rate_l1", _rate_text(rep.rate_l1)))
                results.append((f"{scheme}.{sampling}.rate_l2", _rate_text(rep.rate_l2)))
                if target is not None and sampling == "center" and rep.rate_l1 is not None:
                    want = target[0:2] if not hr else target[2:4]
                    for norm, got, ref in (("L1", rep.rate_l1, want[0]), ("L2", rep.rate_l2, want[1])):
                        ok = abs(got - ref) <= analysis.RATE_TOL
                        lines.append(
                            f"{'PASS' if ok else 'FAIL'} {scheme} {norm} rate {got:.3f} "
                            f"(published {ref:.3f} +/- {analysis.RATE_TOL})"
                        )
    else:
        ic = cfg.ic
        init = lambda edges: gaussian_cells(edges, ic.sigma, ic.amplitude, ic.offset)  # noqa: E731
        sols = analysis.self_convergence_runs(
            cfg.solver, init, cfg.dx0, cfg.levels, cfg.solver.t_end,
            cfg.x_lo, cfg.x_hi, cfg.bc.value, cfg.high_resolution,
        )
        for restriction in ("block", "inject"):
            rep = analysis.self_convergence_report(sols, restriction)
            _write_levels(out / f"self_convergence_{restriction}.csv", rep)
            results.append((f"self.{restriction}.rate_l1", _rate_text(rep.rate_l1)))
            results.append((f"self.{restriction}.rate_l2", _rate_text(rep.rate_l2)))
    for line in lines:
        print(line)
    results += [(f"check.{i}", line) for i, line in enumerate(lines)]
    write_manifest(out / "manifest.txt", cfg, results)
    return lines


def flux_compare_models(cfg: ExperimentConfig) -> dict[str, FluxModel]:
    m = cfg.model
    return {
        "discontinuous": FluxModel(FluxKind.DISCONTINUOUS, m.rho_m, m.gamma),
        "continuous": FluxModel(FluxKind.CONTINUOUS, m.rho_m, m.gamma),
        # stands in for the WENO comparison run on the same smoothed flux
        "regularized": FluxModel(FluxKind.REGULARIZED, m.rho_m, m.gamma, cfg.regularized_epsilon),
    }


def cmd_flux_compare(cfg: ExperimentConfig, out: Path) -> dict[str, list[int]]:
    """Same initial data under several fluxes; reports left-plateau lengths."""
    state = initial_state(cfg)
    times = cfg.output_times
    lengths = {}
    results = [
        ("note", "regularized run replaces the third-party WENO comparison on the same smoothed flux")
    ]
    for name, model in flux_compare_models(cfg).items():
        solver = SolverConfig(model, cfg.solver.cfl, cfg.solver.delta, cfg.solver.limiter, cfg.solver.t_end)
        snaps = run(state, solver, times, high_resolution=cfg.high_resolution)
        lengths[name] = []
        for k, snap in enumerate(snaps):
            write_csv(out / f"compare_{name}_{k:03d}.csv", ["x", "q"], [snap.centers, snap.q])
            n = analysis.left_plateau_length(snap.q, model.rho_m, cfg.plateau_tol)
            lengths[name].append(n)
            results.append((f"{name}.{k:03d}.time", snap.time))
            results.append((f"{name}.{k:03d}.left_plateau_cells", n))
            results.append((f"{name}.{k:03d}.left_plateau", n >= cfg.plateau_cells))
    write_manifest(out / "manifest.txt", cfg, results)
    return lengths


def cmd_mollifier_report(cfg: ExperimentConfig, out: Path) -> dict:
    """Tabulate the mollified flux, the convexity root and anisotropy margins."""
    base = cfg.model
    c = mollifier_constant()
    results = [("C", c)]
    rows_f, rows_root, rows_p = [], [], []
    z = np.linspace(-1.0, 1.0, cfg.samples)
    for eps in cfg.epsilons:
        model = FluxModel(FluxKind.MOLLIFIED, base.rho_m, base.gamma, eps)
        rho = np.clip(base.rho_m + eps * z, 0.0, 1.0)
        f = eval_flux(model, rho)
        df = mollified_flux_derivative(model, rho)
        d2f = mollified_flux_second_derivative(model, rho)
        rows_f += list(zip([eps] * rho.size, rho, f, df, d2f))
        m = base.rho_m - base.critical
        rows_p += list(zip([eps] * z.size, z, convexity_polynomial(eps * z, m, eps)))
        changes = count_sign_changes(m, eps)
        try:
            root = convexity_root(m, eps)
        except RootError as exc:
            log.warning("epsilon=%g: %s", eps, exc)
            root = float("nan")
        rows_root.append((eps, m, root, root * m / eps**2, changes))
        results.append((f"root.{eps!r}", root))
    write_csv(out / "mollified_flux.csv", ["epsilon", "rho", "f", "df", "d2f"], list(zip(*rows_f)))
    write_csv(out / "convexity_polynomial.csv", ["epsilon", "z", "P"], list(zip(*rows_p)))
    write_csv(
        out / "convexity_roots.csv",
        ["epsilon", "M", "root", "root_M_over_eps2", "sign_changes"],
        list(zip(*rows_root)),
    )
    margins = {}
    for kind in (FluxKind.DISCONTINUOUS, FluxKind.CONTINUOUS, FluxKind.REGULARIZED):
        eps = cfg.regularized_epsilon if kind is FluxKind.REGULARIZED else 0.0
        rep = anisotropy_check(FluxModel(kind, base.rho_m, base.gamma, eps), cfg.samples)
        margins[kind.value] = rep
        results.append((f"anisotropy.{kind.value}.speed_margin", rep.speed_margin))
        results.append((f"anisotropy.{kind.value}.wave_margin", rep.wave_margin))
        results.append((f"anisotropy.{kind.value}.passed", rep.passed))
    write_manifest(out / "manifest.txt", cfg, results)
    return {"C": c, "roots": rows_root, "anisotropy": margins}


COMMANDS = {
    "run": cmd_run,
    "convergence": cmd_convergence,
    "flux-compare": cmd_flux_compare,
    "mollifier-report": cmd_mollifier_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lwrdisc",
        description="Traffic flow experiments with a discontinuous flux.",
    )
    parser.add_argument("--log-level", default="WARNING", help="logging level (default WARNING)")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, help=COMMANDS[name].__doc__.splitlines()[0])
        p.add_argument("config", help="path to a key = value config file")
        p.add_argument("--out", default=None, help="output directory (overrides output.dir)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level.upper(), format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
    except (ConfigError, ValidationError, ParameterError) as exc:
        print(f"error: {args.config}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    try:
        out = _out_dir(cfg, args.out)
        COMMANDS[args.command](cfg, out)
    except (ValidationError, ParameterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
