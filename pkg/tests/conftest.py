from __future__ import annotations

import numpy as np
import pytest

from lkpolar.gf2 import BitMatrix, arikan_kernel, random_invertible
from lkpolar.kernelalg import Kernel, is_polarizing

# the 4x4 worked-example kernel used throughout the permutation-search tests
K4_ROWS = ["1000", "1100", "0010", "1001"]

_ACCEPTANCE: dict[int, tuple[str, str]] = {}


def random_polarizing_kernel(l: int, rng: np.random.Generator) -> Kernel:
    while True:
        k = Kernel(random_invertible(l, rng))
        if is_polarizing(k):
            return k


def banded_kernel(l: int, rng: np.random.Generator, band: int = 3) -> Kernel:
    """Polarizing T K_A with T unit lower triangular inside a narrow band (small windows)."""
    ka = arikan_kernel(l).to_array().astype(int)
    while True:
        t = np.eye(l, dtype=int)
        for i in range(l):
            lo = max(0, i - band)
            t[i, lo:i] = rng.integers(0, 2, i - lo)
        k = Kernel(BitMatrix.from_array((t @ ka) % 2))
        if is_polarizing(k):
            return k


@pytest.fixture
def k4() -> Kernel:
    return Kernel.from_rows(K4_ROWS, "K4")


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture
def acceptance():
    """Record one acceptance line; returns ``ok`` so tests can assert on it."""
    def record(number: int, status, detail: str = ""):
        if isinstance(status, bool):
            status = "PASS" if status else "FAIL"
        _ACCEPTANCE[number] = (status, detail)
        print(f"criterion {number}: {status} {detail}")
        return status == "PASS"
    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        status, detail = _ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {status}  {detail}")
