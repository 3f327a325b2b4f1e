import numpy as np
import pytest

from lwrdisc import cli
from lwrdisc.config import ConfigError, ValidationError, config_items, parse_config
from lwrdisc.engine import BC, Limiter, SolverError
from lwrdisc.flux import FluxKind, mollifier_constant


def write(tmp_path, text, name="exp.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return path


RIEMANN = """\
experiment = riemann
ic.rho_l = 0.9   # congested upstream
ic.rho_r = 0.2
domain.n_cells = 80
output.times = 0.05, 0.1
"""


# --- config parsing -----------------------------------------------------------


def test_defaults():
    cfg = parse_config("experiment = gaussian\n")
    assert cfg.model.kind is FluxKind.DISCONTINUOUS
    assert (cfg.model.rho_m, cfg.model.gamma) == (0.5, 0.5)
    assert (cfg.x_lo, cfg.x_hi, cfg.n_cells) == (-1.0, 1.0, 400)
    assert cfg.bc is BC.PERIODIC
    assert cfg.solver.cfl == 0.9 and cfg.solver.delta == 1e-5
    assert cfg.solver.limiter is Limiter.SUPERBEE
    assert cfg.output_times == (cfg.solver.t_end,)


def test_riemann_defaults_to_outflow():
    cfg = parse_config(RIEMANN)
    assert cfg.bc is BC.OUTFLOW
    assert cfg.solver.t_end == 0.1


def test_flux_constraint_is_validation_error():
    with pytest.raises(ValidationError):
        parse_config("experiment = gaussian\nflux.gamma = 2\n")


def test_unknown_key_reports_line():
    with pytest.raises(ConfigError, match="line 2"):
        parse_config("experiment = gaussian\nsolver.cfll = 0.5\n")


def test_syntax_errors():
    with pytest.raises(ConfigError, match="line 1"):
        parse_config("experiment gaussian\n")
    with pytest.raises(ConfigError, match="duplicate"):
        parse_config("experiment = gaussian\nexperiment = riemann\n")
    with pytest.raises(ConfigError, match="bad value"):
        parse_config("experiment = gaussian\nsolver.cfl = fast\n")
    with pytest.raises(ConfigError):
        parse_config("ic.sigma = 0.1\n")


@pytest.mark.parametrize(
    "extra",
    [
        "solver.cfl = 1.2",
        "ic.sigma = -0.1",
        "domain.x_hi = -2",
        "output.times = 0.3, 0.1",
        "domain.bc = reflect",
        "flux.kind = mollified\nflux.epsilon = 0.1",
    ],
)
def test_invalid_values(extra):
    with pytest.raises(ValidationError):
        parse_config(f"experiment = gaussian\n{extra}\n")


def test_riemann_states_required():
    with pytest.raises(ValidationError):
        parse_config("experiment = riemann\nic.rho_l = 0.3\n")
    with pytest.raises(ValidationError):
        parse_config("experiment = riemann\nic.rho_l = 0.3\nic.rho_r = 1.3\n")


def test_manifest_reparses_to_same_config(tmp_path):
    cfg = parse_config(RIEMANN)
    cli.write_manifest(tmp_path / "m.txt", cfg, [("wall_time", 1.5), ("note", "x")])
    again = parse_config((tmp_path / "m.txt").read_text())
    assert config_items(again) == config_items(cfg)
    assert again.solver == cfg.solver and again.ic == cfg.ic


# --- CSV ----------------------------------------------------------------------


def test_csv_round_trip_is_exact(tmp_path):
    x = np.array([0.1, 1.0 / 3.0, np.nextafter(0.5, 1.0)])
    q = np.array([1e-17, 0.123456789012345678, 1.0])
    cli.write_csv(tmp_path / "a.csv", ["x", "q"], [x, q])
    assert (tmp_path / "a.csv").read_text().splitlines()[0] == "x,q"
    back = cli.read_csv(tmp_path / "a.csv")
    np.testing.assert_array_equal(back["x"], x)
    np.testing.assert_array_equal(back["q"], q)


# --- commands -----------------------------------------------------------------


def test_run_writes_snapshots(tmp_path):
    path = write(tmp_path, RIEMANN)
    out = tmp_path / "out"
    assert cli.main(["run", str(path), "--out", str(out)]) == 0
    s0 = cli.read_csv(out / "snapshot_000.csv")
    assert list(s0) == ["x", "q", "exact"]
    assert s0["x"].size == 80
    assert np.all((s0["q"] >= 0.0) & (s0["q"] <= 1.0))
    manifest = parse_config((out / "manifest.txt").read_text())
    assert manifest.output_times == (0.05, 0.1)
    text = (out / "manifest.txt").read_text()
    assert "result.snapshot_001.time = 0.1" in text
    assert "result.snapshot_001.l1_error" in text


def test_run_is_deterministic(tmp_path):
    path = write(tmp_path, RIEMANN)
    for d in ("a", "b"):
        assert cli.main(["run", str(path), "--out", str(tmp_path / d)]) == 0
    for name in ("snapshot_000.csv", "snapshot_001.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_gaussian_run_has_no_exact_column(tmp_path):
    path = write(tmp_path, "experiment = gaussian\ndomain.n_cells = 50\noutput.times = 0.05\n")
    assert cli.main(["run", str(path), "--out", str(tmp_path / "o")]) == 0
    assert list(cli.read_csv(tmp_path / "o" / "snapshot_000.csv")) == ["x", "q"]


def test_empty_output_times_writes_manifest_only(tmp_path):
    path = write(tmp_path, "experiment = gaussian\nsolver.t_end = 0.1\noutput.times =\n")
    out = tmp_path / "o"
    assert cli.main(["run", str(path), "--out", str(out)]) == 0
    assert sorted(p.name for p in out.iterdir()) == ["manifest.txt"]


def test_exit_code_invalid(tmp_path, capsys):
    path = write(tmp_path, "experiment = gaussian\nflux.gamma = 2\n")
    assert cli.main(["run", str(path), "--out", str(tmp_path)]) == 2
    assert "gamma" in capsys.readouterr().err
    assert cli.main(["run", str(tmp_path / "missing.cfg")]) == 2


def test_exit_code_solver_failure(tmp_path, monkeypatch):
    def boom(*args, **kwargs):
        raise SolverError("forced")

    monkeypatch.setattr(cli, "run", boom)
    path = write(tmp_path, RIEMANN)
    assert cli.main(["run", str(path), "--out", str(tmp_path / "o")]) == 3


def test_flux_compare_at_t0_identical(tmp_path):
    path = write(tmp_path, "experiment = flux_compare\ndomain.n_cells = 60\noutput.times = 0\nsolver.t_end = 0.1\n")
    out = tmp_path / "o"
    assert cli.main(["flux-compare", str(path), "--out", str(out)]) == 0
    texts = {n: (out / f"compare_{n}_000.csv").read_bytes() for n in ("discontinuous", "continuous", "regularized")}
    assert len(set(texts.values())) == 1


def test_flux_compare_reports_plateau(tmp_path):
    path = write(tmp_path, "experiment = flux_compare\ndomain.n_cells = 400\noutput.times = 0.3\n")
    out = tmp_path / "o"
    assert cli.main(["flux-compare", str(path), "--out", str(out)]) == 0
    text = (out / "manifest.txt").read_text()
    assert "result.discontinuous.000.left_plateau = true" in text
    assert "result.continuous.000.left_plateau = false" in text


def test_constant_riemann_convergence_rates_none(tmp_path):
    path = write(
        tmp_path,
        "experiment = convergence\nic.rho_l = 0.3\nic.rho_r = 0.3\nconvergence.dxs = 0.2, 0.1, 0.05\n",
    )
    out = tmp_path / "o"
    assert cli.main(["convergence", str(path), "--out", str(out)]) == 0
    text = (out / "manifest.txt").read_text()
    assert "result.godunov.average.rate_l1 = none" in text
    assert "result.high_resolution.center.rate_l2 = none" in text
    rows = cli.read_csv(out / "convergence_godunov_average.csv")
    np.testing.assert_array_equal(rows["l1"], 0.0)


def test_gaussian_convergence_writes_both_restrictions(tmp_path):
    path = write(tmp_path, "experiment = convergence\nconvergence.dx0 = 0.5\nconvergence.levels = 3\n")
    out = tmp_path / "o"
    assert cli.main(["convergence", str(path), "--out", str(out)]) == 0
    for name in ("self_convergence_block.csv", "self_convergence_inject.csv"):
        assert cli.read_csv(out / name)["dx"].size == 3


def test_mollifier_report(tmp_path):
    path = write(tmp_path, "experiment = mollifier_report\nmollifier.samples = 21\n")
    out = tmp_path / "o"
    assert cli.main(["mollifier-report", str(path), "--out", str(out)]) == 0
    text = (out / "manifest.txt").read_text()
    line = next(ln for ln in text.splitlines() if ln.startswith("result.C ="))
    assert float(line.split("=")[1]) == mollifier_constant()
    roots = cli.read_csv(out / "convexity_roots.csv")
    np.testing.assert_array_equal(roots["sign_changes"], [1, 1, 1])
    assert "result.anisotropy.discontinuous.passed = true" in text
    assert cli.read_csv(out / "mollified_flux.csv")["rho"].size == 3 * 21
