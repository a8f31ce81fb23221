import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from minpart.nodal import PartitionLabeling  # noqa: E402


def rasterize(grid, f):
    """PartitionLabeling whose label at each node is f(x, y)."""
    xy = grid.node_xy
    labels = np.asarray(f(xy[:, 0], xy[:, 1]), dtype=int)
    e = grid.edges
    same = labels[e[:, 0]] == labels[e[:, 1]]
    return PartitionLabeling(grid, labels, int(labels.max()), same)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


# one line per acceptance criterion, printed at the end of the session
ACCEPTANCE: dict[int, str] = {}


def record(criterion: int, ok: bool, detail: str) -> bool:
    line = f"criterion {criterion}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE[criterion] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for c in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[c])
