"""Shared fixtures: the bundled solution corpus and small random generators.

Expected values in the suite come from three places: closed-form hand
computation, an independent reimplementation of the defining relation in the
test body, or a cross-check against a library oracle (scipy, numpy).  No test
asserts a value produced by the same code path it exercises.
"""

import random
from fractions import Fraction
from pathlib import Path

import pytest

from wdvvkit.algebra import ConstSymMatrix, Poly
from wdvvkit.exprlang import parse
from wdvvkit.frobenius import Potential
from wdvvkit.submanifold import reduce_potential

ETA_ROWS = [[0, 0, 1], [0, 1, 0], [1, 0, 0]]

F0 = "1/2*u1^2*u3 + 1/2*u1*u2^2"
SOL1 = "1/60*u3^5 + 1/4*u2^2*u3^2 + 1/2*u1^2*u3 + 1/2*u1*u2^2"
SOL2 = "1/3960*u3^11 + 1/20*u2^2*u3^5 + 1/6*u2^3*u3^2 + 1/2*u1^2*u3 + 1/2*u1*u2^2"
SOL1_BROKEN = "1/30*u3^5 + 1/4*u2^2*u3^2 + 1/2*u1^2*u3 + 1/2*u1*u2^2"
F0_BROKEN = "u2^2*u3^2 + 1/2*u1^2*u3 + 1/2*u1*u2^2"
SOL2_BROKEN = "1/1000*u3^11 + 1/20*u2^2*u3^5 + 1/6*u2^3*u3^2 + 1/2*u1^2*u3 + 1/2*u1*u2^2"


def make_eta():
    return ConstSymMatrix(ETA_ROWS)


def make_potential(text: str) -> Potential:
    return Potential(3, make_eta(), parse(text, 3))


@pytest.fixture(scope="session")
def eta():
    return make_eta()


@pytest.fixture(scope="session")
def f0():
    return make_potential(F0)


@pytest.fixture(scope="session")
def sol1():
    return make_potential(SOL1)


@pytest.fixture(scope="session")
def sol2():
    return make_potential(SOL2)


@pytest.fixture(scope="session")
def solutions(f0, sol1, sol2):
    return [f0, sol1, sol2]


@pytest.fixture(scope="session")
def perturbed():
    return [make_potential(t) for t in (SOL1_BROKEN, F0_BROKEN, SOL2_BROKEN)]


@pytest.fixture(scope="session")
def sol1_reduction(sol1):
    return reduce_potential(sol1, 1)


@pytest.fixture(scope="session")
def sol1_reduction_cneg(sol1):
    return reduce_potential(sol1, -1)


@pytest.fixture(scope="session")
def sol2_reduction(sol2):
    return reduce_potential(sol2, 1)


@pytest.fixture(scope="session")
def problems_dir():
    d = Path(__file__).resolve().parent.parent / "src" / "wdvvkit" / "problems"
    assert d.is_dir()
    return d


def random_poly(rng: random.Random, n_vars=3, n_terms=6, min_deg=3, max_deg=5) -> Poly:
    """Sparse random polynomial with small rational coefficients.

    Degrees start at 3 so reductions of the result are well defined; such a
    potential is generically not an associativity solution.
    """
    p = Poly.zero(n_vars)
    for _ in range(n_terms):
        e = [0] * n_vars
        for _ in range(rng.randint(min_deg, max_deg)):
            e[rng.randrange(n_vars)] += 1
        p = p + Poly(n_vars, {tuple(e): Fraction(rng.randint(-4, 4), rng.randint(1, 3))})
    return p


def random_potentials(seed: int, count: int):
    rng = random.Random(seed)
    eta = make_eta()
    out = []
    while len(out) < count:
        p = random_poly(rng)
        if not p.is_zero():
            out.append(Potential(3, eta, p))
    return out
