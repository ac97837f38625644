"""Flat torsionless submanifold data in a pseudo-Euclidean ambient space.

The whole geometry of such a submanifold is carried by L scalar functions
psi_alpha(u) whose Hessians are the second fundamental forms, together with
the flat tangential metric eta_{ij} and the constant normal Gram matrix
mu_{alpha beta}.  Flatness and torsionlessness then reduce to two quadratic
residuals (a Gauss-type one and a Ricci-type one) that are computed here
exactly, plus a linear problem with two spectral parameters whose curvature
vanishes precisely on solutions.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .algebra import ConstSymMatrix, Poly, PolyMatrix, hessian
from .frobenius import Potential

__all__ = [
    "PsiSystem",
    "SecondForms",
    "LaxParams",
    "CodazziReport",
    "second_forms",
    "gauss_residual",
    "ricci_residual",
    "reduce_potential",
    "codazzi_check",
    "zero_curvature_residual",
]


@dataclass(frozen=True)
class PsiSystem:
    """L generating functions over N flat coordinates.

    eta holds the covariant tangential metric eta_{ij}, mu the covariant
    normal Gram matrix mu_{alpha beta}; both carry cached exact inverses.
    """

    n: int
    l: int
    eta: ConstSymMatrix
    mu: ConstSymMatrix
    psi: tuple

    def __post_init__(self):
        if self.eta.dim != self.n:
            raise ValueError("eta dimension does not match n")
        if self.mu.dim != self.l:
            raise ValueError("mu dimension does not match l")
        if len(self.psi) != self.l:
            raise ValueError("need exactly l generating functions")
        for p in self.psi:
            if not isinstance(p, Poly) or p.n_vars != self.n:
                raise ValueError("each psi must be a Poly in n variables")


@dataclass(frozen=True)
class SecondForms:
    """omega[alpha] is the symmetric matrix of ∂²psi_alpha/∂u^i∂u^j."""

    omega: tuple


@dataclass(frozen=True)
class LaxParams:
    """Spectral parameters of the linear problem.

    None means the parameter stays a symbolic polynomial variable; a Fraction
    pins it to a numeric value.  Both stay symbolic by default, making the
    curvature check exact and uniform in the parameters.
    """

    lam: Fraction | None = None
    rho: Fraction | None = None


def second_forms(S: PsiSystem) -> SecondForms:
    return SecondForms(tuple(hessian(p) for p in S.psi))


def gauss_residual(S: PsiSystem) -> list:
    """Entry (i,j,k,l):

        sum_{alpha,beta} mu^{alpha beta}
            (psi_{alpha,ik} psi_{beta,jl} - psi_{alpha,il} psi_{beta,jk})
    """
    n, L = S.n, S.l
    om = second_forms(S).omega

    def bracket(i, k, j, l):
        acc = Poly.zero(n)
        for a in range(L):
            for b in range(L):
                coeff = S.mu.inv_entry(a, b)
                if coeff:
                    acc = acc + om[a][i, k] * om[b][j, l] * coeff
        return acc

    return [
        [
            [
                [bracket(i, k, j, l) - bracket(i, l, j, k) for l in range(n)]
                for k in range(n)
            ]
            for j in range(n)
        ]
        for i in range(n)
    ]


def ricci_residual(S: PsiSystem) -> list:
    """Entry (alpha,beta,k,l):

        sum_{i,j} eta^{ij}
            (psi_{alpha,ik} psi_{beta,jl} - psi_{alpha,il} psi_{beta,jk})
    """
    n, L = S.n, S.l
    om = second_forms(S).omega

    def contract(a, k, b, l):
        acc = Poly.zero(n)
        for i in range(n):
            for j in range(n):
                coeff = S.eta.inv_entry(i, j)
                if coeff:
                    acc = acc + om[a][i, k] * om[b][j, l] * coeff
        return acc

    return [
        [
            [
                [contract(a, k, b, l) - contract(a, l, b, k) for l in range(n)]
                for k in range(n)
            ]
            for b in range(L)
        ]
        for a in range(L)
    ]


def reduce_potential(P: Potential, c) -> PsiSystem:
    """Potential-to-submanifold reduction: L = N, mu^{ab} = c eta^{ab},
    psi_alpha = dPhi/du^alpha.  Requires c != 0."""
    c = Fraction(c)
    if c == 0:
        raise ValueError("reduction constant c must be nonzero")
    mu_cov = P.eta.scaled(Fraction(1) / c)
    psi = tuple(P.phi.diff(a + 1) for a in range(P.n))
    return PsiSystem(n=P.n, l=P.n, eta=P.eta, mu=mu_cov, psi=psi)


@dataclass(frozen=True)
class CodazziReport:
    ok: bool
    checked_triples: int


def codazzi_check(S: PsiSystem) -> CodazziReport:
    """Peterson-Codazzi compatibility: d omega_{alpha,ij}/du^k symmetric in
    (j,k).  Hessian forms satisfy it identically; evaluated anyway as a
    structural self-check."""
    n = S.n
    om = second_forms(S).omega
    ok = True
    count = 0
    for a in range(S.l):
        for i in range(n):
            for j in range(n):
                for k in range(j + 1, n):
                    count += 1
                    if om[a][i, j].diff(k + 1) != om[a][i, k].diff(j + 1):
                        ok = False
    return CodazziReport(ok=ok, checked_triples=count)


def _connection_matrices(S: PsiSystem) -> list[PolyMatrix]:
    """M_i(u; lambda, rho) for the stacked unknown (da/du^1..da/du^N, b_1..b_L).

    The linear problem reads, component-wise,

        d(a_j)/du^i = lambda sum_{alpha,beta} mu^{alpha beta} omega_{alpha,ij} b_beta
        d(b_alpha)/du^i = rho sum_{k,j} eta^{kj} omega_{alpha,ij} a_k

    so in the extended variable list (u^1..u^N, lambda, rho) each M_i is a
    block off-diagonal (N+L) square matrix, linear in lambda and rho.
    """
    n, L = S.n, S.l
    nv = n + 2
    lam = Poly.variable(nv, n + 1)
    rho = Poly.variable(nv, n + 2)
    om = second_forms(S).omega
    big = [
        [[om[a][i, j].extend_vars(nv) for j in range(n)] for i in range(n)]
        for a in range(L)
    ]
    mats = []
    for i in range(n):
        rows = []
        for j in range(n):
            row = [Poly.zero(nv)] * n
            for b in range(L):
                acc = Poly.zero(nv)
                for a in range(L):
                    coeff = S.mu.inv_entry(a, b)
                    if coeff:
                        acc = acc + big[a][i][j] * coeff
                row.append(acc * lam)
            rows.append(row)
        for a in range(L):
            row = []
            for k in range(n):
                acc = Poly.zero(nv)
                for j in range(n):
                    coeff = S.eta.inv_entry(k, j)
                    if coeff:
                        acc = acc + big[a][i][j] * coeff
                row.append(acc * rho)
            row.extend([Poly.zero(nv)] * L)
            rows.append(row)
        mats.append(PolyMatrix(rows))
    return mats


def zero_curvature_residual(S: PsiSystem, params: LaxParams | None = None) -> dict:
    """Curvature d_i M_j - d_j M_i + [M_i, M_j] for each pair i < j.

    Entries are polynomials in (u, lambda, rho); numeric LaxParams substitute
    the parameters before returning.  The whole family vanishes identically
    iff the Gauss and Ricci residuals both vanish.
    """
    if params is None:
        params = LaxParams()
    n = S.n
    mats = _connection_matrices(S)
    out = {}
    for i in range(n):
        for j in range(i + 1, n):
            f = mats[j].diff(i + 1) - mats[i].diff(j + 1) + mats[i].commutator(mats[j])
            if params.lam is not None or params.rho is not None:
                f = f.map(lambda p: _substitute_params(p, n, params))
            out[(i + 1, j + 1)] = f
    return out


def _substitute_params(p: Poly, n: int, params: LaxParams) -> Poly:
    acc: dict[tuple, Fraction] = {}
    for exp, coeff in p.terms.items():
        c = coeff
        e = list(exp)
        if params.lam is not None:
            c *= params.lam ** e[n]
            e[n] = 0
        if params.rho is not None:
            c *= params.rho ** e[n + 1]
            e[n + 1] = 0
        key = tuple(e)
        s = acc.get(key, Fraction(0)) + c
        if s == 0:
            acc.pop(key, None)
        else:
            acc[key] = s
    return Poly(p.n_vars, acc)
