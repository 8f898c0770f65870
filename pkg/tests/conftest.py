import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import strategies as st

import tiltgap as tg

sys.path.insert(0, str(Path(__file__).parent))

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def w2():
    """Two-point alphabet, one model with losses (0, 1), uniform reference."""
    A = tg.Alphabet(["z1", "z2"])
    lm = tg.LossModel(A, ["theta0"], [[0.0, 1.0]])
    return lm, tg.DiscreteMeasure(A, [0.5, 0.5])


@pytest.fixture
def w3():
    """Three points, two mirrored models, data measure (0.5, 0.3, 0.2), uniform prior."""
    A = tg.Alphabet(["z1", "z2", "z3"])
    lm = tg.LossModel(A, ["theta1", "theta2"], [[0, 1, 2], [2, 1, 0]])
    pz = tg.DiscreteMeasure(A, [0.5, 0.3, 0.2])
    q = tg.DiscreteMeasure.uniform(lm.models)
    return lm, pz, q


@pytest.fixture
def fixtures_dir():
    return FIXTURES


_ACCEPTANCE = []


@pytest.fixture
def criterion():
    """Record one acceptance line; all lines are repeated in the terminal summary."""

    def record(number, title, ok, detail):
        line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
        print(line)
        _ACCEPTANCE.append((number, line))
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_ACCEPTANCE):
            terminalreporter.write_line(line)


def random_instance(rng, k=None, m=1, loss_max=5.0, full_support=True):
    k = int(rng.integers(2, 11)) if k is None else k
    A = tg.Alphabet(f"z{i}" for i in range(k))
    lm = tg.LossModel(A, [f"m{j}" for j in range(m)], rng.uniform(0, loss_max, (m, k)))
    w = rng.uniform(1e-3, 1.0, k)
    if not full_support and k > 2:
        w[rng.permutation(k)[: int(rng.integers(0, k - 1))]] = 0.0
    return lm, tg.DiscreteMeasure(A, w)


def random_sub_measure(rng, base):
    sup = base.support
    keep = sup[rng.random(sup.size) < 0.7]
    if keep.size == 0:
        keep = sup[:1]
    w = np.zeros(len(base))
    w[keep] = rng.uniform(1e-3, 1.0, keep.size)
    return tg.DiscreteMeasure(base.alphabet, w)


@st.composite
def measure_pairs(draw, max_size=12, allow_zeros=True):
    k = draw(st.integers(1, max_size))
    pos = st.floats(1e-6, 1.0)
    elem = st.one_of(st.just(0.0), pos) if allow_zeros else pos
    def vec():
        v = draw(st.lists(elem, min_size=k, max_size=k))
        if sum(v) == 0:
            v[0] = 1.0
        return v
    A = tg.Alphabet(f"z{i}" for i in range(k))
    return tg.DiscreteMeasure(A, vec()), tg.DiscreteMeasure(A, vec())
