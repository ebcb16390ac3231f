"""CLI tests: artifacts, exit codes, determinism, figure rendering, and the
pass-through contract between trace columns and plotted series."""

import json

import matplotlib.pyplot as plt
import numpy as np
import pytest

from oslsim.cli import EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK, EXIT_STRUCTURE, entry
from oslsim.plots import (
    control_series,
    error_series,
    manifold_series,
    render_figure,
    states_series,
)
from oslsim.scenario import config_digest, load_raw
from oslsim.sim import SimulationError
from oslsim.trace import Trace

FAST = ["--set", "t_end=0.2"]


def run_cli(*argv):
    return entry(list(argv))


@pytest.fixture(scope="module")
def run_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("run") / "paper"
    rc = run_cli("run", "--config", "paper_consensus", *FAST, "--out", str(out))
    assert rc == EXIT_OK
    return out


# --- run ----------------------------------------------------------------------


def test_run_writes_trace_metrics_manifest(run_dir):
    assert (run_dir / "trace.csv").exists()
    assert (run_dir / "metrics.json").exists()
    assert (run_dir / "manifest.json").exists()


def test_manifest_reproduces_the_run(run_dir):
    manifest = json.loads((run_dir / "manifest.json").read_text())
    assert manifest["schema_version"] == 1
    assert manifest["seed"] == 42
    assert manifest["config"]["t_end"] == 0.2
    assert manifest["config"]["smc"]["mu"] == 5.0
    # digest covers the resolved config, so it must match a fresh computation
    raw = json.loads(json.dumps(manifest["config"]))
    assert manifest["config_digest"] == config_digest(raw)


def test_metrics_file_carries_run_meta(run_dir):
    payload = json.loads((run_dir / "metrics.json").read_text())
    assert payload["run"]["name"] == "paper_consensus"
    assert payload["run"]["empirical_mu_margin"] > 0.0
    assert "control_energy" in payload["metrics"]


def test_same_seed_twice_is_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run_cli("run", "--config", "paper_consensus", *FAST, "--out", str(a)) == EXIT_OK
    assert run_cli("run", "--config", "paper_consensus", *FAST, "--out", str(b)) == EXIT_OK
    assert (a / "trace.csv").read_bytes() == (b / "trace.csv").read_bytes()
    assert (a / "metrics.json").read_bytes() == (b / "metrics.json").read_bytes()
    assert (a / "manifest.json").read_bytes() == (b / "manifest.json").read_bytes()


def test_seed_flag_changes_trace(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    base = ["run", "--config", "paper_consensus", "--set", "wind.noise_sigma=0.05", *FAST]
    assert run_cli(*base, "--seed", "1", "--out", str(a)) == EXIT_OK
    assert run_cli(*base, "--seed", "2", "--out", str(b)) == EXIT_OK
    assert (a / "trace.csv").read_bytes() != (b / "trace.csv").read_bytes()


def test_default_out_dir_from_env(tmp_path, monkeypatch):
    monkeypatch.setenv("OSLSIM_OUT", str(tmp_path / "envout"))
    assert run_cli("run", "--config", "no_disturbance", *FAST) == EXIT_OK
    assert (tmp_path / "envout" / "no_disturbance" / "trace.csv").exists()


def test_trace_format_both_adds_jsonl(tmp_path):
    out = tmp_path / "j"
    rc = run_cli("run", "--config", "no_disturbance", *FAST, "--out", str(out),
                 "--trace-format", "both")
    assert rc == EXIT_OK
    first = json.loads((out / "trace.jsonl").read_text().splitlines()[0])
    assert first["t"] == 0.0
    assert "x0_0" in first


def test_casting_literal_flag_lands_in_manifest(tmp_path):
    out = tmp_path / "c"
    rc = run_cli("run", "--config", "paper_consensus", *FAST, "--casting-literal",
                 "--out", str(out))
    assert rc == EXIT_OK
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["planner"]["casting_literal"] is True


def test_invalid_theta_exits_2_naming_key(tmp_path, capsys):
    rc = run_cli("run", "--config", "paper_consensus", "--set", "accuracy_theta=0",
                 "--out", str(tmp_path))
    assert rc == EXIT_CONFIG
    assert "accuracy_theta" in capsys.readouterr().err


def test_unknown_scenario_exits_2(tmp_path, capsys):
    rc = run_cli("run", "--config", "mystery", "--out", str(tmp_path))
    assert rc == EXIT_CONFIG
    assert "mystery" in capsys.readouterr().err


def test_numerical_abort_exits_3(tmp_path, capsys, monkeypatch):
    def explode(cfg):
        raise SimulationError("non-finite state at t=0.123000 (after-update, component 2)")

    monkeypatch.setattr("oslsim.cli.run_scenario", explode)
    rc = run_cli("run", "--config", "paper_consensus", "--out", str(tmp_path))
    assert rc == EXIT_NUMERIC
    assert "numerical abort" in capsys.readouterr().err


# --- check --------------------------------------------------------------------


def test_check_reports_structure_gains_and_empirical_margin(capsys):
    rc = run_cli("check", "--config", "paper_consensus", *FAST)
    out = capsys.readouterr().out
    assert rc == EXIT_OK
    assert "spanning tree from virtual leader: OK" in out
    assert "nonsingular: OK (det = 2)" in out
    assert "w-condition margin" in out and "pass" in out
    assert "disturbance-budget reading" in out
    assert "operator-norm reading" in out
    assert "conservative readings disagree" in out
    assert "empirical reaching margin" in out


def test_check_leaderless_exits_4(capsys):
    rc = run_cli("check", "--config", "paper_consensus",
                 "--set", 'topology={"n_agents":2,"edges":[],"leaders":[]}')
    assert rc == EXIT_STRUCTURE
    captured = capsys.readouterr()
    assert "spanning tree" in captured.err
    assert "FAIL" in captured.out


def test_check_reports_w_condition_failure_but_structural_pass(capsys):
    rc = run_cli("check", "--config", "paper_consensus", *FAST,
                 "--set", "disturbance.sigma_max=2.5")
    out = capsys.readouterr().out
    assert rc == EXIT_OK  # gains are reported, not structural
    assert "w-condition margin (w_gain - sigma_max): -0.5 -> FAIL" in out


# --- plot ---------------------------------------------------------------------


def test_plot_all_writes_four_svgs(run_dir, tmp_path):
    figs = tmp_path / "figs"
    rc = run_cli("plot", "--trace", str(run_dir / "trace.csv"), "--out", str(figs))
    assert rc == EXIT_OK
    names = sorted(p.name for p in figs.iterdir())
    assert names == ["controls.svg", "errors.svg", "manifolds.svg", "states.svg"]


def test_plot_single_figure(run_dir, tmp_path):
    rc = run_cli("plot", "--trace", str(run_dir / "trace.csv"), "--fig", "errors",
                 "--out", str(tmp_path))
    assert rc == EXIT_OK
    assert (tmp_path / "errors.svg").exists()
    assert not (tmp_path / "states.svg").exists()


def test_plot_is_byte_stable(run_dir, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert run_cli("plot", "--trace", str(run_dir / "trace.csv"),
                       "--out", str(out)) == EXIT_OK
    for name in ("states", "errors", "controls", "manifolds"):
        assert (a / f"{name}.svg").read_bytes() == (b / f"{name}.svg").read_bytes()


def test_plot_unknown_selector_exits_2(run_dir):
    with pytest.raises(SystemExit) as exc:
        run_cli("plot", "--trace", str(run_dir / "trace.csv"), "--fig", "spectrogram")
    assert exc.value.code == 2


def test_plot_missing_trace_exits_2(tmp_path, capsys):
    rc = run_cli("plot", "--trace", str(tmp_path / "absent.csv"))
    assert rc == EXIT_CONFIG
    assert "trace error" in capsys.readouterr().err


def test_plotted_series_equal_trace_columns(run_dir):
    trace = Trace.from_csv(run_dir / "trace.csv")
    for series_fn, prefix in (
        (states_series, "x"),
        (control_series, "u"),
        (manifold_series, "s"),
        (error_series, "enorm"),
    ):
        times, series = series_fn(trace)
        assert np.array_equal(times, trace.times)
        stacked = np.column_stack(list(series.values()))
        assert np.array_equal(stacked, trace.block(prefix))


def test_manifold_figure_draws_the_envelope(run_dir):
    trace = Trace.from_csv(run_dir / "trace.csv")
    fig, ax = render_figure(trace, "manifolds", lambda1=1.774)
    try:
        levels = [line.get_ydata() for line in ax.lines]
        flat = [y[0] for y in levels if len(y) == 2 and y[0] == y[1]]
        assert 1.774 in flat and -1.774 in flat
    finally:
        plt.close(fig)


def test_plotting_never_mutates_the_trace(run_dir, tmp_path):
    trace = Trace.from_csv(run_dir / "trace.csv")
    before = [row[:] for row in trace.rows]
    for which in ("states", "errors", "controls", "manifolds"):
        fig, _ = render_figure(trace, which)
        plt.close(fig)
    assert trace.rows == before


# --- batch --------------------------------------------------------------------


def test_batch_fans_out_runs(tmp_path):
    rc = run_cli("batch", "no_disturbance", "pso_comparison", "--set", "t_end=0.05",
                 "--out", str(tmp_path))
    assert rc == EXIT_OK
    assert (tmp_path / "no_disturbance" / "trace.csv").exists()
    assert (tmp_path / "pso_comparison" / "trace.csv").exists()


def test_entry_requires_a_subcommand():
    with pytest.raises(SystemExit) as exc:
        run_cli()
    assert exc.value.code == 2
