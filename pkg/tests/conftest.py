import numpy as np
import pytest

from opinionfp import ModelParams, RadicalDensity

_VERDICTS: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def rd():
    return RadicalDensity.triangular(0.7, 0.1)


@pytest.fixture
def fixture_params():
    return ModelParams(R=0.1, sigma=0.01, M=0.1)


@pytest.fixture
def verdict():
    """Record one line per acceptance criterion; printed in the terminal summary."""

    def record(number: int, ok: bool, detail: str):
        _VERDICTS[number] = (bool(ok), detail)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_VERDICTS):
        ok, detail = _VERDICTS[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


def local_maxima(values, x, cells=False):
    """Local maxima of a profile on [0, 1], mirrored at both ends.

    With ``cells=True`` the samples are bin averages, whose end bins reflect
    onto themselves, so an end bin is a maximum when it is not below its neighbour.
    """
    v = np.asarray(values, dtype=float)
    if cells:
        padded = np.concatenate([[-np.inf], v, [-np.inf]])
    else:
        padded = np.concatenate([v[1:2], v, v[-2:-1]])
    inner = padded[1:-1]
    is_max = (inner > padded[:-2]) & (inner >= padded[2:])
    return np.asarray(x)[is_max], v[is_max]
