"""Batch front-end: strict config parsing, subcommand pipelines, exit codes
with machine-parsable status lines, and reproducible artifacts."""
from __future__ import annotations

import json

import numpy as np
import pytest

from conftest import make_wobbly_contour
from qgpatch import __version__
from qgpatch.cli import ExperimentConfig, main, parse_config, run
from qgpatch.contour import write_contour_csv
from qgpatch.errors import ConfigError

EVOLVE_TEMPLATE = (
    "subcommand=evolve\n"
    "mode=qgsw\n"
    "epsilon=1.0\n"
    "geometry=circle:1.0\n"
    "node_count=32\n"
    "dt=0.1\n"
    "t_end=0.2\n"
    "output_dir={out}\n"
)


def status_line(capsys):
    lines = [ln for ln in capsys.readouterr().err.splitlines()
             if ln.startswith("qgpatch-status:")]
    assert len(lines) == 1
    return lines[0]


def test_parse_key_value_document():
    config = parse_config(
        "subcommand=evolve\nmode=qgsw\nepsilon=1.0\ngeometry=circle:1.0\n"
        "node_count=256\ndt=0.01\nt_end=5.0\noutput_dir=out")
    assert isinstance(config, ExperimentConfig)
    assert config.subcommand == "evolve"
    assert config.mode.family == "qgsw" and config.mode.epsilon == 1.0
    assert config.geometry == ("circle", (1.0,))
    assert config.node_count == 256
    assert config.dt == 0.01 and config.t_end == 5.0


def test_parse_json_document():
    config = parse_config(json.dumps({
        "subcommand": "evolve", "mode": "qgsw", "epsilon": 1.0,
        "geometry": "ellipse:1.2,1.0", "node_count": 64, "dt": 0.05,
        "t_end": 0.1, "output_dir": "out"}))
    assert config.geometry == ("ellipse", (1.2, 1.0))


def test_parse_rejects_missing_required_key():
    text = ("subcommand=evolve\nmode=qgsw\nepsilon=1.0\ngeometry=circle:1.0\n"
            "node_count=256\nt_end=5.0\noutput_dir=out")
    with pytest.raises(ConfigError, match="dt"):
        parse_config(text)


def test_parse_rejects_invalid_screening():
    text = ("subcommand=evolve\nmode=qgsw\nepsilon=-1\ngeometry=circle:1.0\n"
            "node_count=256\ndt=0.01\nt_end=5.0\noutput_dir=out")
    with pytest.raises(ConfigError):
        parse_config(text)


def test_parse_rejects_unknown_and_repeated_keys():
    with pytest.raises(ConfigError, match="nodes"):
        parse_config("subcommand=evolve\nnodes=12\n")
    with pytest.raises(ConfigError, match="line"):
        parse_config("subcommand=evolve\ndt=0.1\ndt=0.2\n")
    with pytest.raises(ConfigError, match="line"):
        parse_config("subcommand=evolve\nthis is not a pair\n")


def test_parse_mode_screening_coupling():
    with pytest.raises(ConfigError):
        parse_config("subcommand=bessel-verify\nmode=euler\nepsilon=1.0\n"
                     "output_dir=out")
    with pytest.raises(ConfigError):
        parse_config("subcommand=evolve\nmode=qgsw\ngeometry=circle:1.0\n"
                     "node_count=32\ndt=0.1\nt_end=0.2\noutput_dir=out")
    with pytest.raises(ConfigError):
        parse_config("subcommand=evolve\nmode=qgsw\nepsilon=1.0\n"
                     "geometry=circle:oops\nnode_count=32\ndt=0.1\n"
                     "t_end=0.2\noutput_dir=out")
    with pytest.raises(ConfigError):
        parse_config("subcommand=sing\noutput_dir=out")


def test_evolve_run_writes_consistent_artifacts(tmp_path, capsys):
    config = parse_config(EVOLVE_TEMPLATE.format(out=tmp_path / "run"))
    assert run(config, quiet=True) == 0
    assert "code=0 kind=ok" in status_line(capsys)
    out = tmp_path / "run"
    names = sorted(p.name for p in out.iterdir())
    assert "diagnostics.csv" in names and "manifest.json" in names
    manifest = json.loads((out / "manifest.json").read_text())
    assert sorted(manifest["files"]) == names
    assert manifest["version"] == __version__
    first = (out / "diagnostics.csv").read_bytes()
    # Re-running the same config reproduces the diagnostics byte for byte.
    config2 = parse_config(EVOLVE_TEMPLATE.format(out=tmp_path / "rerun"))
    assert run(config2, quiet=True) == 0
    assert (tmp_path / "rerun" / "diagnostics.csv").read_bytes() == first


def test_evolve_run_from_contour_file(tmp_path, capsys):
    path = tmp_path / "initial.csv"
    write_contour_csv(make_wobbly_contour(1, node_count=32), path)
    config = parse_config(
        f"subcommand=evolve\nmode=euler\ngeometry=file:{path}\n"
        f"node_count=32\ndt=0.1\nt_end=0.2\noutput_dir={tmp_path / 'out'}\n")
    assert run(config, quiet=True) == 0
    capsys.readouterr()


def test_evolve_abort_exits_two(tmp_path, capsys):
    config = parse_config(
        "subcommand=evolve\nmode=euler\ngeometry=ellipse:1.2,1.0\n"
        "node_count=32\ndt=0.1\nt_end=0.5\nchord_arc_ceiling=1.01\n"
        f"output_dir={tmp_path / 'out'}\n")
    assert run(config, quiet=True) == 2
    line = status_line(capsys)
    assert "code=2" in line and "kind=evolution-aborted" in line
    # The partial trajectory is still persisted for post-mortems.
    assert (tmp_path / "out" / "manifest.json").exists()


def test_missing_contour_file_exits_one(tmp_path, capsys):
    config = parse_config(
        f"subcommand=evolve\nmode=euler\ngeometry=file:{tmp_path}/nope.csv\n"
        f"node_count=32\ndt=0.1\nt_end=0.2\noutput_dir={tmp_path / 'out'}\n")
    assert run(config, quiet=True) == 1
    assert "code=1 kind=validation" in status_line(capsys)


def test_trace_run_writes_tracer_table(tmp_path, capsys):
    config = parse_config(
        "subcommand=trace\nmode=qgsw\nepsilon=1.0\ngeometry=circle:1.0\n"
        "node_count=32\ndt=0.1\nt_end=0.2\nseeds=2,0;0,2.5\n"
        f"direction=forward\noutput_dir={tmp_path / 'out'}\n")
    assert run(config, quiet=True) == 0
    capsys.readouterr()
    table = (tmp_path / "out" / "tracers.csv").read_text().splitlines()
    assert table[0] == "t,seed,x1,x2"
    data = np.array([row.split(",") for row in table[1:]], dtype=float)
    assert set(data[:, 1].astype(int)) == {0, 1}


def test_converge_run_writes_report(tmp_path, capsys):
    config = parse_config(
        "subcommand=converge\ngeometry=circle:1.0\nnode_count=32\n"
        "dt=0.05\nt_end=0.1\nepsilons=0.5,0.4\nsample_stride=1\n"
        f"output_dir={tmp_path / 'out'}\n")
    assert run(config, quiet=True) == 0
    capsys.readouterr()
    lines = (tmp_path / "out" / "convergence.csv").read_text().splitlines()
    assert lines[0] == "epsilon,sup_distance"
    assert len(lines) == 3
    summary = json.loads((tmp_path / "out" / "summary.json").read_text())
    assert "fitted_slope" in summary


def test_kernel_verify_run(tmp_path, capsys):
    config = parse_config(
        f"subcommand=kernel-verify\nmode=qgsw\nepsilon=1.0\n"
        f"output_dir={tmp_path / 'out'}\n")
    assert run(config, quiet=True) == 0
    capsys.readouterr()
    names = sorted(p.name for p in (tmp_path / "out").iterdir())
    assert "sphere_means.csv" in names and "bounds.csv" in names


def test_main_entrypoint(tmp_path, capsys):
    cfg_path = tmp_path / "run.cfg"
    cfg_path.write_text(EVOLVE_TEMPLATE.format(out=tmp_path / "a"))
    assert main(["evolve", "--config", str(cfg_path), "--quiet"]) == 0
    capsys.readouterr()
    # --out overrides the configured output directory.
    assert main(["evolve", "--config", str(cfg_path), "--quiet",
                 "--out", str(tmp_path / "b")]) == 0
    capsys.readouterr()
    assert (tmp_path / "b" / "diagnostics.csv").exists()
    # Mismatched subcommands are a validation failure.
    assert main(["trace", "--config", str(cfg_path), "--quiet"]) == 1
    assert "kind=validation" in status_line(capsys)
    # Without a config the required keys are reported as missing.
    assert main(["evolve", "--quiet"]) == 1
    capsys.readouterr()


def test_quiet_flag_suppresses_progress(tmp_path, capsys):
    cfg_path = tmp_path / "run.cfg"
    cfg_path.write_text(EVOLVE_TEMPLATE.format(out=tmp_path / "a"))
    assert main(["evolve", "--config", str(cfg_path), "--quiet"]) == 0
    captured = capsys.readouterr()
    assert captured.out == ""
    assert main(["evolve", "--config", str(cfg_path), "--out",
                 str(tmp_path / "c")]) == 0
    assert capsys.readouterr().out != ""
