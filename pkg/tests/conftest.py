import copy
from pathlib import Path

import pytest
import yaml

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def shipped_raw(name: str) -> dict:
    return yaml.safe_load((CONFIGS / f"{name}.yaml").read_text())


def tiny_raw() -> dict:
    """A two-region, quick-to-build variant of the two-action beam."""
    raw = copy.deepcopy(shipped_raw("beam2"))
    raw["name"] = "tiny"
    raw["state_space"] = {"n_regions": 2, "interval_edges": [0.30, 0.55, 0.80]}
    raw["rewards"]["health_rules"] = [{"regions": [1], "rate": 1.2}, {"regions": [2], "rate": 1.0}]
    raw["actions"][0]["transition"]["p_inception"] = 0.2
    raw["structure"]["geometry"].update({"elements_per_arm": 6, "column_regions": 1, "arm_regions": 1})
    raw["structure"]["n_sensors"] = 4
    raw["offline"].update({"n_snapshots": 20, "n_training": 60, "n_test_per_cell": 3})
    raw["classifier"] = {"n_bands": 8, "metric": "euclidean"}
    raw["online"] = {"mode": "channel", "n_obs": 2, "steps": 12}
    raw["predict"] = {"horizon": 5}
    return raw


def write_config(raw: dict, path: Path) -> Path:
    path.write_text(yaml.safe_dump(raw, sort_keys=False))
    return path


@pytest.fixture
def tiny_config(tmp_path):
    raw = tiny_raw()
    raw["output_dir"] = str(tmp_path / "bundle")
    return write_config(raw, tmp_path / "tiny.yaml")


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import LINES

    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)
