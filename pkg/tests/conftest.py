import math

import numpy as np
import pytest

from cptport.core import DEFAULT_PARAMS, CptParams
from cptport.data import toy_returns


def _w(p, d):
    if p <= 0:
        return 0.0
    if p >= 1:
        return 1.0
    return p**d / (p**d + (1 - p) ** d) ** (1 / d)


def _repair(xs):
    k = xs.index(min(xs))
    return [xs[k]] * k + xs[k:]


def reference_cpt(w, R, params: CptParams) -> float:
    """Scalar, loop-based CPT utility used as an independent check."""
    r = [sum(wi * ri for wi, ri in zip(w, row)) for row in np.asarray(R).tolist()]
    N = len(r)
    gains = sorted(x for x in r if x >= 0)
    losses = sorted((x for x in r if x < 0), reverse=True)  # least severe first
    Np, Nm = len(gains), len(losses)
    total = 0.0
    if Np:
        pi = [_w((Np - j + 1) / N, params.delta_pos) - _w((Np - j) / N, params.delta_pos) for j in range(1, Np + 1)]
        pi = _repair(pi)
        total += sum(p * (1 - math.exp(-params.gamma_pos * x)) for p, x in zip(pi, gains))
    if Nm:
        pi = [_w((Nm - j + 1) / N, params.delta_neg) - _w((Nm - j) / N, params.delta_neg) for j in range(1, Nm + 1)]
        pi = _repair(pi)
        total -= sum(p * (1 - math.exp(params.gamma_neg * x)) for p, x in zip(pi, losses))
    return total


@pytest.fixture(scope="session")
def params():
    return DEFAULT_PARAMS


@pytest.fixture(scope="session")
def toy():
    return toy_returns(0).values


@pytest.fixture(scope="session")
def toy_optimum():
    from cptport.oracle import grid_search

    return grid_search(toy_returns(0).values, DEFAULT_PARAMS, step=0.002)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
