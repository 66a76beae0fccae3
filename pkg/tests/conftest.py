import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from phdesc.geometry import PeriodicStructure  # noqa: E402

BIG = [20.0, 20.0, 20.0]


def regular_hexagon(edge=1.5, center=(10.0, 10.0, 10.0), phase=0.0):
    c = np.asarray(center, dtype=float)
    ang = phase + np.arange(6) * np.pi / 3
    return c + edge * np.stack([np.cos(ang), np.sin(ang), np.zeros(6)], axis=1)


def random_structure(rng, n, length, sid=""):
    return PeriodicStructure(rng.uniform(0, length, (n, 3)), [length] * 3, id=sid)


@pytest.fixture
def unit_square():
    return PeriodicStructure([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]], BIG, id="square")


@pytest.fixture
def hexagon():
    return PeriodicStructure(regular_hexagon(), BIG, id="hexagon")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE = {}


def record(criterion, part, ok, detail):
    """Store one acceptance check; the terminal summary prints a line per criterion."""
    ACCEPTANCE.setdefault(criterion, []).append((part, bool(ok), detail))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for crit in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[crit]
        status = "PASS" if all(ok for _, ok, _ in parts) else "FAIL"
        detail = "; ".join(f"{name}: {'ok' if ok else 'FAILED'} ({d})" for name, ok, d in parts)
        terminalreporter.write_line(f"criterion {crit:2d} {status}  {detail}")
