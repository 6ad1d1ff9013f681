import json
from pathlib import Path
from typing import Any

import pytest

from pmarray.cli import main
from pmarray.geometry import save_array
from pmarray.sampling import save_fieldmap

from ..models import halbach_ring, measured_map

SMALL_DESIGN = {
    "schema": "pmarray.halbach",
    "version": 1,
    "ring_z": [0.0],
    "layers": [{"radius": 0.06, "count": 12}],
    "end_ring_z": [],
    "end_layers": [],
}


def run(capsys: pytest.CaptureFixture[str], *argv: Any) -> tuple[int, Any]:
    """Runs the command line and decodes its JSON summary or error record."""
    status = main([str(arg) for arg in argv])
    captured = capsys.readouterr()
    stream = captured.out if status == 0 else captured.err.splitlines()[-1]
    return status, json.loads(stream)


@pytest.fixture
def design(tmp_path: Path) -> Path:
    path = tmp_path / "design.json"
    path.write_text(json.dumps(SMALL_DESIGN))
    return path


@pytest.fixture
def scan(tmp_path: Path) -> Path:
    """A measured map file with 11 points around 50 mT."""
    path = tmp_path / "scan.txt"
    save_fieldmap(measured_map([50e-3 + 2e-5 * (i - 5) for i in range(11)]), path)
    return path


@pytest.fixture
def geometry(tmp_path: Path) -> Path:
    """An array file of one ring of twelve cubes."""
    path = tmp_path / "ring.json"
    save_array(halbach_ring(count=12, radius=0.06), path)
    return path
