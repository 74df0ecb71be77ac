import json
import os
import pathlib
import shutil

import pytest

SOURCE = pathlib.Path(os.environ.get("SQEM_SOURCE_DIR", pathlib.Path(__file__).resolve().parents[2]))
FIXTURES = SOURCE / "fixtures"


@pytest.fixture
def fixtures_dir():
    return FIXTURES


@pytest.fixture
def workdir(tmp_path):
    """Temp dir holding copies of the bundled fixtures."""
    for f in FIXTURES.iterdir():
        if f.is_file():
            shutil.copy(f, tmp_path / f.name)
    return tmp_path


def write_config(directory, config, name="cfg.json"):
    path = pathlib.Path(directory) / name
    path.write_text(json.dumps(config))
    return path


def collinear_case(directory):
    rows = ["Id,Output,A,B"] + [f"{i},{2.0 + 0.1 * i:.3f},{i},{2 * i}" for i in range(1, 21)]
    (pathlib.Path(directory) / "collinear.csv").write_text("\n".join(rows) + "\n")
    return write_config(
        directory,
        {
            "data": {"source": "collinear.csv"},
            "schema": [
                {"name": "Id", "role": "identifier", "kind": "numeric"},
                {"name": "Output", "role": "response", "kind": "numeric", "transform": "ln"},
                {"name": "A", "role": "predictor", "kind": "numeric"},
                {"name": "B", "role": "predictor", "kind": "numeric"},
            ],
            "regression": {"candidates": ["A", "B"], "method": "ols"},
            "seed": 1,
        },
        "collinear.json",
    )
