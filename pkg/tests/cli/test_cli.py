import json
from pathlib import Path

import pytest

from pmarray.cli import (
    RunConfig,
    build_parser,
    error_record,
    exit_status,
    resolve_config,
    staged_output,
)
from pmarray.errors import (
    ConfigurationError,
    ConvergenceError,
    DomainError,
    GeometryError,
    MonteCarloError,
    NumericalError,
    ParseError,
)
from pmarray.geometry import save_array
from pmarray.sampling import GridShape
from pmarray.utils import read_table, write_json_document

from . import design, geometry, run, scan
from ..models import halbach_ring


def test_grid_command(tmp_path: Path, capsys: pytest.CaptureFixture[str]):
    """Asserts the default grid has 4224 points and a manifest is written."""
    out = tmp_path / "out"
    status, summary = run(capsys, "grid", "-o", out)
    assert status == 0
    assert summary["points"] == 4224

    assert read_table(out / "grid.txt").rows.shape == (4224, 3)
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["schema"] == "pmarray.manifest"
    assert manifest["config"]["command"] == "grid"
    assert "threads" not in manifest["config"]

    status, summary = run(capsys, "grid", "--convention", "centered", "-o", out, "--force")
    assert status == 0 and summary["points"] == 4169


def test_existing_output(tmp_path: Path, capsys: pytest.CaptureFixture[str]):
    """Checks that a non-empty output directory is only replaced with --force."""
    out = tmp_path / "out"
    out.mkdir()
    (out / "old.txt").write_text("keep")

    status, record = run(capsys, "grid", "-o", out)
    assert status == 2
    assert record["error"] == "ConfigurationError"
    assert (out / "old.txt").exists()

    status, _ = run(capsys, "grid", "-o", out, "--force")
    assert status == 0
    assert not (out / "old.txt").exists()


def test_missing_input(tmp_path: Path, capsys: pytest.CaptureFixture[str]):
    """Asserts an unreadable geometry fails with status 2 and leaves no output behind."""
    out = tmp_path / "out"
    missing = tmp_path / "missing.json"
    status, record = run(capsys, "solve", "--geometry", missing, "-o", out)
    assert status == 2
    assert record["error"] == "ParseError"
    assert record["path"] == str(missing)
    assert not out.exists()
    assert list(tmp_path.iterdir()) == []


def test_staged_output(tmp_path: Path):
    """Checks the staging directory only replaces the target on success."""
    target = tmp_path / "out"
    with pytest.raises(RuntimeError):
        with staged_output(target) as staging:
            (staging / "partial.txt").write_text("")
            raise RuntimeError
    assert not target.exists()
    assert list(tmp_path.iterdir()) == []

    with staged_output(target) as staging:
        (staging / "done.txt").write_text("")
    assert (target / "done.txt").exists()

    with pytest.raises(ConfigurationError):
        with staged_output(target):
            pass
    with staged_output(target, force=True) as staging:
        pass
    assert list(target.iterdir()) == []


def test_halbach_and_solve(
    tmp_path: Path, capsys: pytest.CaptureFixture[str], design: Path
):
    """Asserts a generated array can be solved and sampled from its file."""
    status, summary = run(capsys, "halbach", "--design", design, "-o", tmp_path / "array")
    assert status == 0
    assert summary == {"magnets": 12, "rings": 1}

    geometry = tmp_path / "array" / "geometry.json"
    out = tmp_path / "solve"
    status, summary = run(
        capsys,
        "solve",
        "--geometry", geometry,
        "--mode", "linear",
        "--diameter", 0.04,
        "-o", out,
    )
    assert status == 0
    assert summary["magnets"] == 12
    assert summary["points"] == 32
    assert set(summary["modes"]) == {"linear"}

    for name in ("fieldmap_linear.txt", "working_points_linear.txt", "metrics.json", "timings.json"):
        assert (out / name).exists()
    manifest = json.loads((out / "manifest.json").read_text())
    assert list(manifest["inputs"]) == [str(geometry)]


def test_compare_and_metrics(tmp_path: Path, capsys: pytest.CaptureFixture[str], scan: Path):
    """Checks map comparison and metrics with the default budget attached."""
    status, summary = run(capsys, "compare", scan, scan, "-o", tmp_path / "compare")
    assert status == 0
    assert summary["l2_discrepancy"] == 0.0

    status, summary = run(
        capsys, "metrics", scan, "--budget", "--gradient", 0.01, "-o", tmp_path / "metrics"
    )
    assert status == 0
    assert summary["points"] == 11
    assert summary["metrics"]["DIS1"] == pytest.approx(4000.0)
    assert summary["budget"]["method"] == "analytic"

    status, record = run(capsys, "compare", scan, tmp_path / "nothing.txt", "-o", tmp_path / "x")
    assert status == 2 and record["error"] == "ParseError"


def test_budget_command(tmp_path: Path, capsys: pytest.CaptureFixture[str], scan: Path):
    """Asserts the budget command writes both propagations when sampling is requested."""
    out = tmp_path / "budget"
    status, summary = run(
        capsys,
        "budget", scan,
        "--gradient", 0.01,
        "--oracle-draws", 500,
        "--seed", 4,
        "-o", out,
    )
    assert status == 0
    assert set(summary) == {"analytic", "mc_oracle"}
    assert summary["mc_oracle"]["seed"] == 4
    assert (out / "budget.json").exists() and (out / "budget_oracle.json").exists()


def test_run_config_from_dict():
    """Checks document overlays, round trips and unknown keys."""
    config = RunConfig.from_dict(
        {"mode": "linear", "grid": {"shape": "zlines"}, "rotations": [0.5, 1.0], "seed": 3}
    )
    assert config.mode == "linear"
    assert config.grid.shape == GridShape.ZLINES
    assert config.rotations == (0.5, 1.0)

    data = config.to_dict()
    del data["command"]
    assert RunConfig.from_dict(data) == config

    with pytest.raises(ConfigurationError):
        RunConfig.from_dict({"colour": "red"})
    with pytest.raises(ConfigurationError):
        RunConfig.from_dict({"mode": "quadratic"})
    with pytest.raises(ConfigurationError):
        RunConfig(threads=0)


def test_resolve_mc_config(tmp_path: Path):
    """Asserts flags override a Monte Carlo document and stability raises the draws."""
    path = tmp_path / "mc.json"
    write_json_document(path, "pmarray.mc", {"sources": ["position"], "draws": 10, "seed": 1})
    parser = build_parser()

    config = resolve_config(parser.parse_args(["mc", "--config", str(path), "--seed", "2"]))
    assert config.mc is not None
    assert (config.mc.draws, config.mc.seed) == (10, 2)

    args = parser.parse_args(["mc", "--config", str(path), "--stability", "5", "40"])
    config = resolve_config(args)
    assert config.mc is not None and config.mc.draws == 40

    config = resolve_config(parser.parse_args(["mc", "--mc-preset", "variability_position"]))
    assert config.mc is not None and config.mc.draws == 1000

    with pytest.raises(ConfigurationError):
        resolve_config(parser.parse_args(["mc"]))

    write_json_document(path, "pmarray.budget", {})
    with pytest.raises(ParseError):
        resolve_config(parser.parse_args(["mc", "--config", str(path)]))


def test_resolve_precedence(tmp_path: Path):
    """Checks that explicit flags win over the configuration document."""
    path = tmp_path / "run.json"
    write_json_document(path, "pmarray.run", {"mode": "ideal", "temperature": 25})
    args = build_parser().parse_args(["solve", "--config", str(path), "--temp", "20"])
    config = resolve_config(args)
    assert config.mode == "ideal"
    assert config.temperature == 20.0

    args = build_parser().parse_args(["solve", "--preset", "zlines", "--step", "0.01"])
    config = resolve_config(args)
    assert config.grid.shape == GridShape.ZLINES
    assert config.grid.step == 0.01


def test_exit_status():
    """Asserts each error kind maps to its documented exit status."""
    assert exit_status(ConvergenceError("stuck", history=[0.1, 0.05])) == 5
    assert exit_status(NumericalError("singular", achieved=1e13)) == 4
    assert exit_status(MonteCarloError("too many", failures=[(3, "x")])) == 4
    assert exit_status(GeometryError("overlap", pair=(1, 2))) == 3
    assert exit_status(DomainError("bad")) == 2
    assert exit_status(ParseError("bad", path="a.json", line=3)) == 2

    record = error_record(ConvergenceError("stuck", history=[0.1, 0.05]))
    assert record["iterations"] == 2
    assert record["achieved"] == 0.05

    record = error_record(GeometryError("overlap", pair=(1, 2)))
    assert record["pair"] == [1, 2]
    assert record["exit_status"] == 3

    record = error_record(MonteCarloError("too many", failures=[(3, "x")]))
    assert record["failures"] == [{"draw": 3, "message": "x"}]


def test_torque_perturb_and_mc(
    tmp_path: Path, capsys: pytest.CaptureFixture[str], geometry: Path
):
    """Asserts the analysis commands run end to end on a small ring."""
    common = ["--geometry", geometry, "--mode", "linear"]

    status, summary = run(capsys, "torque", *common, "-o", tmp_path / "torque")
    assert status == 0
    assert summary["magnets"] == 12
    assert summary["positive"] + summary["negative"] + summary["zero"] == 12

    status, summary = run(
        capsys, "perturb", *common, "--diameter", 0.04, "--rotate", 1.0, "-o", tmp_path / "perturb"
    )
    assert status == 0
    assert [s["step"] for s in summary["steps"]] == ["reference", "rotation"]

    mc = tmp_path / "mc.json"
    write_json_document(mc, "pmarray.mc", {"sources": ["position"], "draws": 3, "seed": 5})
    out = tmp_path / "mc"
    status, summary = run(
        capsys, "mc", *common, "--diameter", 0.04, "--config", mc, "-o", out
    )
    assert status == 0
    assert summary["seed"] == 5
    assert (out / "mc_result.json").exists() and (out / "mc_raw.txt").exists()
    manifest = json.loads((out / "manifest.json").read_text())
    assert set(manifest["inputs"]) == {str(geometry), str(mc)}


def test_geometry_file_keeps_its_temperature(
    tmp_path: Path, capsys: pytest.CaptureFixture[str], design: Path
):
    """Asserts a geometry file's temperature is kept unless --temp overrides it."""
    path = tmp_path / "warm.json"
    save_array(halbach_ring(count=12, radius=0.06).at_temperature(23.7), path)
    common = ["solve", "--geometry", path, "--mode", "ideal", "--diameter", 0.04]

    status, summary = run(capsys, *common, "-o", tmp_path / "kept")
    assert status == 0
    assert summary["temperature"] == 23.7

    status, summary = run(capsys, *common, "--temp", 20, "-o", tmp_path / "override")
    assert status == 0
    assert summary["temperature"] == 20.0

    assert RunConfig().temperature is None
    status, summary = run(capsys, "halbach", "--design", design, "-o", tmp_path / "generated")
    assert status == 0
    generated = json.loads((tmp_path / "generated" / "geometry.json").read_text())
    assert generated["temperature"] == 18.0
