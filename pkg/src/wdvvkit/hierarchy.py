"""Bi-Hamiltonian recursion over a flat torsionless submanifold.

Starting from the quadratic density h_1 = 1/2 eta_{ij} u^i u^j, each level
lifts the current density through the generating functions (producing the
F_n of that level), rebuilds the next density from the prescribed Hessian,
and emits the local hydrodynamic flow of that level.  Both integration
steps are exact, so every recursion identity can be re-checked as a
polynomial identity after the fact.  The module also hosts the locality
criterion with its localization (P_n and the local density f) and the
involution residuals for submanifold and potential data.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .algebra import (
    Poly,
    PolyMatrix,
    gradient,
    hessian,
    integrate_exact_one_form,
    integrate_exact_two_form,
)
from .frobenius import Potential
from .hamop import HydroFlow
from .submanifold import PsiSystem, gauss_residual, ricci_residual

__all__ = [
    "HierarchyLevel",
    "LocalityReport",
    "NotASolutionError",
    "legendre_F",
    "lift_density",
    "next_density",
    "build_hierarchy",
    "check_locality",
    "involution_residual_constant_bracket",
    "involution_wdvv_integrals",
    "check_eq10",
    "first_density",
]


class NotASolutionError(ValueError):
    """The submanifold equations fail, so the recursion is refused."""


@dataclass(frozen=True)
class HierarchyLevel:
    """One rung of the recursion: density h_s, its lifts F_n^{(s)}, and the
    induced local flow."""

    s: int
    h: Poly
    f_lift: tuple
    flow: HydroFlow


@dataclass(frozen=True)
class LocalityReport:
    """Outcome of the locality criterion for a candidate density h.

    residual is indexed (n, s, p).  When the criterion passes, p_densities
    holds the P_n and f_density the local Hamiltonian density of the flow;
    both are None otherwise.
    """

    passes: bool
    residual: list
    p_densities: tuple | None
    f_density: Poly | None


def first_density(S: PsiSystem) -> Poly:
    """h_1 = 1/2 eta_{ij} u^i u^j."""
    n = S.n
    acc = Poly.zero(n)
    for i in range(n):
        for j in range(n):
            coeff = S.eta[i, j]
            if coeff:
                acc = acc + Poly.variable(n, i + 1) * Poly.variable(n, j + 1) * (
                    Fraction(1, 2) * coeff
                )
    return acc


def legendre_F(S: PsiSystem) -> list[Poly]:
    """F_n = (d psi_n/du^j) u^j - psi_n."""
    out = []
    for p in S.psi:
        acc = -p
        for j in range(S.n):
            acc = acc + p.diff(j + 1) * Poly.variable(S.n, j + 1)
        out.append(acc)
    return out


def _psi_hessians(S: PsiSystem) -> list[PolyMatrix]:
    return [hessian(p) for p in S.psi]


def lift_density(S: PsiSystem, h: Poly) -> list[Poly]:
    """For each generating function, integrate the 1-form

        omega_p = psi_{n,jp} eta^{jr} dh/du^r

    to F_n with F_n(0) = 0.  A closedness failure means h violates the
    locality criterion; the NotClosedError carries the residual.
    """
    n = S.n
    hess = _psi_hessians(S)
    grad_h = gradient(h)
    out = []
    for hp in hess:
        omega = []
        for p in range(n):
            acc = Poly.zero(n)
            for j in range(n):
                for r in range(n):
                    coeff = S.eta.inv_entry(j, r)
                    if coeff:
                        acc = acc + hp[j, p] * grad_h[r] * coeff
            omega.append(acc)
        out.append(integrate_exact_one_form(omega))
    return out


def next_density(S: PsiSystem, f_lift) -> Poly:
    """Density whose Hessian is sum_{m,n} mu^{mn} psi_{m,jk} F_n^{(s)},
    vanishing with its gradient at the origin."""
    n, L = S.n, S.l
    if len(f_lift) != L:
        raise ValueError("need one lift per generating function")
    hess = _psi_hessians(S)
    rows = []
    for j in range(n):
        row = []
        for k in range(n):
            acc = Poly.zero(n)
            for m in range(L):
                for q in range(L):
                    coeff = S.mu.inv_entry(m, q)
                    if coeff:
                        acc = acc + hess[m][j, k] * f_lift[q] * coeff
            row.append(acc)
        rows.append(row)
    return integrate_exact_two_form(PolyMatrix(rows))


def _flow_matrix(S: PsiSystem, f_lift) -> PolyMatrix:
    """Affinor A^i_k = sum mu^{mn} eta^{ip} F_n psi_{m,pk}."""
    n, L = S.n, S.l
    hess = _psi_hessians(S)
    rows = []
    for i in range(n):
        row = []
        for k in range(n):
            acc = Poly.zero(n)
            for m in range(L):
                for q in range(L):
                    mu_coeff = S.mu.inv_entry(m, q)
                    if mu_coeff == 0:
                        continue
                    for p in range(n):
                        eta_coeff = S.eta.inv_entry(i, p)
                        if eta_coeff:
                            acc = acc + hess[m][p, k] * f_lift[q] * (mu_coeff * eta_coeff)
            row.append(acc)
        rows.append(row)
    return PolyMatrix(rows)


def build_hierarchy(S: PsiSystem, depth: int) -> list[HierarchyLevel]:
    """Run the recursion to the requested depth.

    The submanifold equations are verified up front; systems violating them
    are refused because the integrability of every later step depends on
    them.  A NotClosedError escaping afterwards would mean an internal
    inconsistency, so it is allowed to propagate loudly.
    """
    if depth < 1:
        raise ValueError("depth must be at least 1")
    for grid, name in ((gauss_residual(S), "tangential"), (ricci_residual(S), "normal")):
        for block in grid:
            for plane in block:
                for row in plane:
                    for entry in row:
                        if not entry.is_zero():
                            raise NotASolutionError(
                                f"submanifold equations fail ({name} residual nonzero); "
                                "the recursion is not defined"
                            )
    levels = []
    h = first_density(S)
    for s in range(1, depth + 1):
        f_lift = tuple(lift_density(S, h))
        flow = HydroFlow(a=_flow_matrix(S, f_lift))
        levels.append(HierarchyLevel(s=s, h=h, f_lift=f_lift, flow=flow))
        if s < depth:
            h = next_density(S, f_lift)
    return levels


def check_locality(S: PsiSystem, h: Poly) -> LocalityReport:
    """Locality criterion for the flow generated by a density h.

    Residual entry (n, s, p) is

        psi_{n,js} eta^{jr} h_{rp} - psi_{n,jp} eta^{jr} h_{rs}

    When every entry vanishes, the P_n are recovered by integrating
    psi_{n,js} eta^{jr} h_r over s, and the local density f by integrating
    the prescribed Hessian sum mu^{mn} psi_{m,jk} P_n.
    """
    n, L = S.n, S.l
    hess = _psi_hessians(S)
    h_hess = hessian(h)
    h_grad = gradient(h)

    def contracted(hp, s, p):
        acc = Poly.zero(n)
        for j in range(n):
            for r in range(n):
                coeff = S.eta.inv_entry(j, r)
                if coeff:
                    acc = acc + hp[j, s] * h_hess[r, p] * coeff
        return acc

    residual = [
        [
            [contracted(hess[q], s, p) - contracted(hess[q], p, s) for p in range(n)]
            for s in range(n)
        ]
        for q in range(L)
    ]
    passes = all(
        entry.is_zero() for block in residual for row in block for entry in row
    )
    if not passes:
        return LocalityReport(passes=False, residual=residual, p_densities=None, f_density=None)

    p_densities = []
    for hp in hess:
        omega = []
        for s in range(n):
            acc = Poly.zero(n)
            for j in range(n):
                for r in range(n):
                    coeff = S.eta.inv_entry(j, r)
                    if coeff:
                        acc = acc + hp[j, s] * h_grad[r] * coeff
            omega.append(acc)
        p_densities.append(integrate_exact_one_form(omega))

    rows = []
    for j in range(n):
        row = []
        for k in range(n):
            acc = Poly.zero(n)
            for m in range(L):
                for q in range(L):
                    coeff = S.mu.inv_entry(m, q)
                    if coeff:
                        acc = acc + hess[m][j, k] * p_densities[q] * coeff
            row.append(acc)
        rows.append(row)
    f_density = integrate_exact_two_form(PolyMatrix(rows))
    return LocalityReport(
        passes=True,
        residual=residual,
        p_densities=tuple(p_densities),
        f_density=f_density,
    )


def involution_residual_constant_bracket(S: PsiSystem, n_idx: int, m_idx: int) -> list:
    """Closedness residual of psi_{n,i} eta^{ij} psi_{m,jk} du^k for the pair
    (n_idx, m_idx), 1-based.  Zero for all pairs iff the normal equations of
    the submanifold system hold."""
    n = S.n
    psi_n = S.psi[n_idx - 1]
    psi_m = S.psi[m_idx - 1]
    grad_n = gradient(psi_n)
    hess_m = hessian(psi_m)
    omega = []
    for k in range(n):
        acc = Poly.zero(n)
        for i in range(n):
            for j in range(n):
                coeff = S.eta.inv_entry(i, j)
                if coeff:
                    acc = acc + grad_n[i] * hess_m[j, k] * coeff
        omega.append(acc)
    return [
        [omega[k].diff(l + 1) - omega[l].diff(k + 1) for l in range(n)]
        for k in range(n)
    ]


def involution_wdvv_integrals(P: Potential) -> list:
    """Closedness residual of Phi_{ni} eta^{ij} Phi_{mjk} du^k per pair (n,m).

    Entry [n][m][k][l]; all zero iff the potential solves the associativity
    equations (the derivative integrals are then in involution for the
    constant bracket)."""
    n = P.n
    second = P.second_derivatives()
    third = P.third_derivatives()
    out = []
    for a in range(n):
        block = []
        for b in range(n):
            omega = []
            for k in range(n):
                acc = Poly.zero(n)
                for i in range(n):
                    for j in range(n):
                        coeff = P.eta.inv_entry(i, j)
                        if coeff:
                            acc = acc + second[a][i] * third[b][j][k] * coeff
                omega.append(acc)
            block.append(
                [
                    [omega[k].diff(l + 1) - omega[l].diff(k + 1) for l in range(n)]
                    for k in range(n)
                ]
            )
        out.append(block)
    return out


def check_eq10(P: Potential) -> list:
    """Residual Phi_{ki} eta^{ij} Phi_{jnl} - Phi_{li} eta^{ij} Phi_{jnk},
    indexed (n, k, l)."""
    n = P.n
    second = P.second_derivatives()
    third = P.third_derivatives()

    def half(k, nn, l):
        acc = Poly.zero(n)
        for i in range(n):
            for j in range(n):
                coeff = P.eta.inv_entry(i, j)
                if coeff:
                    acc = acc + second[k][i] * third[j][nn][l] * coeff
        return acc

    return [
        [
            [half(k, nn, l) - half(l, nn, k) for l in range(n)]
            for k in range(n)
        ]
        for nn in range(n)
    ]
