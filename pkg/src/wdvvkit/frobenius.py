"""Frobenius algebra deformations built from a potential.

A potential is a polynomial Phi over flat coordinates with a constant
symmetric invertible metric eta.  Third derivatives of Phi define structure
constants of a commutative algebra on the tangent space; associativity of
that algebra is the WDVV system, and its failure is returned here as an
exact residual tensor, never as a bare boolean.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .algebra import ConstSymMatrix, Poly, solve_exact_linear, strip_quadratic_part

__all__ = [
    "Potential",
    "StructureConstants",
    "FrobeniusReport",
    "structure_constants",
    "wdvv_residual",
    "verify_frobenius_conditions",
    "find_unit",
    "dubrovin_residual",
]


@dataclass(frozen=True)
class Potential:
    """Polynomial potential with its flat covariant metric eta_{ij}."""

    n: int
    eta: ConstSymMatrix
    phi: Poly

    def __post_init__(self):
        if self.eta.dim != self.n:
            raise ValueError("metric dimension does not match n")
        if self.phi.n_vars != self.n:
            raise ValueError("potential variable count does not match n")

    def third_derivatives(self) -> list[list[list[Poly]]]:
        """Grid T[i][j][k] = d^3 Phi / du^i du^j du^k (0-based indices)."""
        n = self.n
        first = [self.phi.diff(i + 1) for i in range(n)]
        second = [[first[i].diff(j + 1) for j in range(n)] for i in range(n)]
        return [
            [[second[i][j].diff(k + 1) for k in range(n)] for j in range(n)]
            for i in range(n)
        ]

    def second_derivatives(self) -> list[list[Poly]]:
        n = self.n
        first = [self.phi.diff(i + 1) for i in range(n)]
        return [[first[i].diff(j + 1) for j in range(n)] for i in range(n)]


@dataclass(frozen=True)
class StructureConstants:
    """Three-index grid c[k][i][j] = c^k_{ij}(u), symmetric in (i, j)."""

    c: tuple


def structure_constants(P: Potential) -> StructureConstants:
    """c^k_{ij} = eta^{ks} Phi_{sij}, exact."""
    n = P.n
    third = P.third_derivatives()
    grid = []
    for k in range(n):
        rows = []
        for i in range(n):
            row = []
            for j in range(n):
                acc = Poly.zero(n)
                for s in range(n):
                    coeff = P.eta.inv_entry(k, s)
                    if coeff:
                        acc = acc + third[s][i][j] * coeff
                row.append(acc)
            rows.append(tuple(row))
        grid.append(tuple(rows))
    return StructureConstants(tuple(grid))


def wdvv_residual(P: Potential) -> list:
    """Associativity residual: entry (i,j,m,n) is

        sum_{k,l} Phi_{ijk} eta^{kl} Phi_{lmn} - Phi_{imk} eta^{kl} Phi_{ljn}

    All entries vanish exactly iff Phi solves the WDVV system for eta.
    """
    n = P.n
    third = P.third_derivatives()

    def pair(a: int, b: int, c: int, d: int) -> Poly:
        # sum_{k,l} Phi_{abk} eta^{kl} Phi_{lcd}
        acc = Poly.zero(n)
        for k in range(n):
            for l in range(n):
                coeff = P.eta.inv_entry(k, l)
                if coeff:
                    acc = acc + third[a][b][k] * third[l][c][d] * coeff
        return acc

    return [
        [
            [
                [pair(i, j, m, nn) - pair(i, m, j, nn) for nn in range(n)]
                for m in range(n)
            ]
            for j in range(n)
        ]
        for i in range(n)
    ]


@dataclass(frozen=True)
class FrobeniusReport:
    invariance_ok: bool
    commutativity_ok: bool
    derivative_symmetry_ok: bool
    associativity_ok: bool
    residual: list
    nonzero_entries: tuple


def verify_frobenius_conditions(P: Potential) -> FrobeniusReport:
    """Check the algebra conditions that a potential induces.

    Invariance (lowering the upper index of c gives the symmetric tensor
    Phi_{ijk}), commutativity of c in its lower pair, and symmetry of the
    derivative tensor d Phi_{ijk}/du^l hold by construction; they are still
    evaluated here as self-checks rather than assumed.  Associativity is the
    actual content and is decided by the exact WDVV residual.
    """
    n = P.n
    third = P.third_derivatives()
    c = structure_constants(P).c

    invariance_ok = True
    for i in range(n):
        for j in range(n):
            for k in range(n):
                lowered = Poly.zero(n)
                for s in range(n):
                    coeff = P.eta[s, k]
                    if coeff:
                        lowered = lowered + c[s][i][j] * coeff
                if lowered != third[i][j][k]:
                    invariance_ok = False

    commutativity_ok = all(
        c[k][i][j] == c[k][j][i] for k in range(n) for i in range(n) for j in range(n)
    )

    derivative_symmetry_ok = True
    for i in range(n):
        for j in range(n):
            for k in range(n):
                for l in range(n):
                    # compare d Phi_{ijk}/du^l against d Phi_{ljk}/du^i
                    if third[i][j][k].diff(l + 1) != third[l][j][k].diff(i + 1):
                        derivative_symmetry_ok = False

    residual = wdvv_residual(P)
    nonzero = tuple(
        (i + 1, j + 1, m + 1, nn + 1)
        for i in range(n)
        for j in range(n)
        for m in range(n)
        for nn in range(n)
        if not residual[i][j][m][nn].is_zero()
    )
    return FrobeniusReport(
        invariance_ok=invariance_ok,
        commutativity_ok=commutativity_ok,
        derivative_symmetry_ok=derivative_symmetry_ok,
        associativity_ok=not nonzero,
        residual=residual,
        nonzero_entries=nonzero,
    )


def find_unit(P: Potential):
    """Constant rational vector e with c^k_{ij} e^i = delta^k_j, or None.

    Solved exactly by matching polynomial coefficients.  In flat coordinates
    a covariantly constant field has constant components, so the constant
    ansatz is the full search space.
    """
    n = P.n
    c = structure_constants(P).c
    zero_exp = (0,) * n
    rows: list[list[Fraction]] = []
    rhs: list[Fraction] = []
    for k in range(n):
        for j in range(n):
            monomials = set()
            for i in range(n):
                monomials.update(c[k][i][j].terms.keys())
            monomials.add(zero_exp)
            for exp in sorted(monomials):
                rows.append([c[k][i][j].terms.get(exp, Fraction(0)) for i in range(n)])
                rhs.append(Fraction(1) if (exp == zero_exp and k == j) else Fraction(0))
    solution = solve_exact_linear(rows, rhs)
    if solution is None:
        return None
    return tuple(solution)


def dubrovin_residual(f: Poly) -> Poly:
    """Residual of the third-order equation governing the N = 3 family:

        f_{333} - (f_{223})^2 + f_{222} f_{233}

    with subscripts denoting partials in the second and third variables.
    Zero exactly when f generates an associative three-dimensional family.
    """
    if f.n_vars < 3:
        f = f.extend_vars(3)
    f22 = f.diff(2).diff(2)
    f23 = f.diff(2).diff(3)
    f33 = f.diff(3).diff(3)
    return f33.diff(3) - f23.diff(2) * f23.diff(2) + f22.diff(2) * f23.diff(3)


def normalized_potential(phi: Poly) -> Poly:
    """Potentials are compared modulo terms of total degree two and below;
    those terms never reach a third derivative."""
    return strip_quadratic_part(phi)
