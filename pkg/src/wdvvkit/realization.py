"""Numeric realization of a potential as an embedded flat submanifold.

The linear system for the position vector r and the auxiliary vector n,

    d^2 r / du^i du^j =  c eta^{kl} Phi_{ijk}(u) dn/du^l
    d^2 n / du^i du^j = -  eta^{kl} Phi_{ijk}(u) dr/du^l

is integrated as a first-order system in (r, n, R, Nn) with R = dr/du and
Nn = dn/du, using classical fourth-order Runge-Kutta along piecewise-linear
paths in u.  The ambient 2N-dimensional metric is blockdiag(eta, (1/c) eta)
in the initial frame, so the columns of R and Nn start with exact Gram
matrices eta and (1/c) eta; those Gram matrices are first integrals of the
exact flow and their numeric drift measures integration quality.  Loop
closure measures flatness of the connection, which holds iff the potential
solves the associativity equations.

All symbolic data stays exact; floats appear only in the state vectors and
in pointwise evaluation of the third derivatives Phi_{ijk}.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .algebra import ConstSymMatrix
from .frobenius import Potential

__all__ = [
    "AmbientMetric",
    "EmbeddingProblem",
    "EmbeddingSample",
    "FundamentalFormsReport",
    "NonFiniteError",
    "default_initial_frame",
    "integrate_along_path",
    "sample_grid",
    "verify_fundamental_forms",
    "loop_closure_test",
    "snake_order",
]


class NonFiniteError(RuntimeError):
    """Integration produced a nonfinite value.

    Attributes:
        arc: index of the path segment being integrated when it happened.
    """

    def __init__(self, arc: int):
        super().__init__(f"nonfinite state while integrating path segment {arc}")
        self.arc = arc


@dataclass(frozen=True)
class AmbientMetric:
    """Flat 2N metric blockdiag(eta, (1/c) eta), exact plus a float copy."""

    exact: ConstSymMatrix
    mat: np.ndarray

    @staticmethod
    def build(eta: ConstSymMatrix, c: Fraction) -> "AmbientMetric":
        exact = ConstSymMatrix.block_diag(eta, eta.scaled(Fraction(1) / c))
        return AmbientMetric(exact=exact, mat=exact.to_float())

    @property
    def dim(self) -> int:
        return self.exact.dim

    def signature(self) -> tuple[int, int]:
        return self.exact.signature()


@dataclass(frozen=True)
class EmbeddingProblem:
    """Initial data for one realization run."""

    potential: Potential
    c: Fraction
    base_point: np.ndarray
    r0: np.ndarray
    n0: np.ndarray
    R0: np.ndarray
    Nn0: np.ndarray
    ambient: AmbientMetric

    @property
    def n(self) -> int:
        return self.potential.n


def default_initial_frame(P: Potential, c, u0) -> EmbeddingProblem:
    """Adapted frame at u0: r = n = 0, R columns are the first N ambient
    basis vectors, Nn columns the last N.  All Gram conditions then hold
    exactly at the base point; this fixes the up-to-motions gauge."""
    c = Fraction(c)
    if c == 0:
        raise ValueError("deformation constant c must be nonzero")
    n = P.n
    u0 = np.asarray(u0, dtype=float)
    if u0.shape != (n,):
        raise ValueError("base point has wrong dimension")
    eye = np.eye(2 * n)
    return EmbeddingProblem(
        potential=P,
        c=c,
        base_point=u0,
        r0=np.zeros(2 * n),
        n0=np.zeros(2 * n),
        R0=eye[:, :n].copy(),
        Nn0=eye[:, n:].copy(),
        ambient=AmbientMetric.build(P.eta, c),
    )


@dataclass
class EmbeddingSample:
    """States recorded during a single integration run.

    points has shape (M, N); r, n have shape (M, 2N); R, Nn have shape
    (M, 2N, N).  For rectangular grids, grid_shape and axes describe the
    layout and the flat index runs in C order over the grid.  fine_R, when
    present, holds side-stencil Jacobians for second-form differencing:
    shape (M, N, 2, 2N, N) indexed (point, axis, minus/plus, ambient, col).
    """

    points: np.ndarray
    r: np.ndarray
    n: np.ndarray
    R: np.ndarray
    Nn: np.ndarray
    step: float
    problem: EmbeddingProblem
    grid_shape: tuple | None = None
    axes: list | None = None
    fine_delta: float | None = None
    fine_R: np.ndarray | None = None


class _System:
    """Packed first-order right-hand side for one problem."""

    def __init__(self, E: EmbeddingProblem):
        self.n = E.n
        self.c = float(E.c)
        self.eta_inv = E.potential.eta.inv_to_float()
        third = E.potential.third_derivatives()
        # unique index triples; the tensor is totally symmetric
        self.third = third

    def third_tensor(self, u: np.ndarray) -> np.ndarray:
        n = self.n
        t = np.empty((n, n, n))
        for i in range(n):
            for j in range(i, n):
                for k in range(j, n):
                    v = self.third[i][j][k].eval_float(u)
                    t[i, j, k] = t[i, k, j] = t[j, i, k] = v
                    t[j, k, i] = t[k, i, j] = t[k, j, i] = v
        return t

    def deriv(self, u: np.ndarray, udot: np.ndarray, y: np.ndarray) -> np.ndarray:
        n = self.n
        r, nvec, R, Nn = _unpack(y, n)
        t = self.third_tensor(u)
        # B[l, i] = sum_{k, j} eta^{kl} Phi_{ijk}(u) udot^j
        contracted = np.einsum("ijk,j->ik", t, udot)
        B = self.eta_inv @ contracted.T  # (l, i)
        dR = self.c * (Nn @ B)
        dNn = -(R @ B)
        return _pack(R @ udot, Nn @ udot, dR, dNn)


def _pack(r, nvec, R, Nn) -> np.ndarray:
    return np.concatenate([r, nvec, R.ravel(), Nn.ravel()])


def _unpack(y: np.ndarray, n: int):
    two_n = 2 * n
    r = y[:two_n]
    nvec = y[two_n : 2 * two_n]
    R = y[2 * two_n : 2 * two_n + two_n * n].reshape(two_n, n)
    Nn = y[2 * two_n + two_n * n :].reshape(two_n, n)
    return r, nvec, R, Nn


def _rk4_segment(sys: _System, y: np.ndarray, a: np.ndarray, b: np.ndarray, steps: int, arc: int) -> np.ndarray:
    """Integrate from u=a to u=b along the straight segment in `steps` steps."""
    direction = b - a
    h = 1.0 / steps
    for m in range(steps):
        s0 = m * h
        u0 = a + s0 * direction
        u_half = a + (s0 + h / 2) * direction
        u1 = a + (s0 + h) * direction
        k1 = sys.deriv(u0, direction, y)
        k2 = sys.deriv(u_half, direction, y + 0.5 * h * k1)
        k3 = sys.deriv(u_half, direction, y + 0.5 * h * k2)
        k4 = sys.deriv(u1, direction, y + h * k3)
        y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    if not np.all(np.isfinite(y)):
        raise NonFiniteError(arc)
    return y


def _steps_for(a: np.ndarray, b: np.ndarray, step: float) -> int:
    dist = float(np.linalg.norm(b - a))
    return max(1, int(np.ceil(dist / step)))


def integrate_along_path(E: EmbeddingProblem, path, step: float) -> EmbeddingSample:
    """Integrate along the piecewise-linear path (list of u-waypoints,
    starting at the base point is not required: a straight lead-in segment is
    added when the first waypoint differs).  States are recorded at every
    waypoint."""
    if step <= 0:
        raise ValueError("step must be positive")
    sys = _System(E)
    waypoints = [np.asarray(p, dtype=float) for p in path]
    if not waypoints:
        raise ValueError("empty path")
    y = _pack(E.r0, E.n0, E.R0, E.Nn0)
    current = E.base_point
    recorded_points = []
    states = []
    if not np.allclose(current, waypoints[0]):
        waypoints = [current] + waypoints
    for arc, target in enumerate(waypoints):
        if arc == 0:
            if not np.allclose(current, target):
                y = _rk4_segment(sys, y, current, target, _steps_for(current, target, step), arc)
            current = target
        else:
            y = _rk4_segment(sys, y, current, target, _steps_for(current, target, step), arc)
            current = target
        recorded_points.append(current.copy())
        states.append(y.copy())
    n = E.n
    unpacked = [_unpack(s, n) for s in states]
    return EmbeddingSample(
        points=np.array(recorded_points),
        r=np.array([u[0] for u in unpacked]),
        n=np.array([u[1] for u in unpacked]),
        R=np.array([u[2] for u in unpacked]),
        Nn=np.array([u[3] for u in unpacked]),
        step=step,
        problem=E,
    )


def snake_order(shape: tuple) -> list[tuple]:
    """Grid visit order in which consecutive nodes are axis neighbors."""
    if not shape:
        return [()]
    tail = snake_order(tuple(shape[1:]))
    out = []
    for i in range(shape[0]):
        block = tail if i % 2 == 0 else list(reversed(tail))
        out.extend((i,) + t for t in block)
    return out


def sample_grid(E: EmbeddingProblem, axes, step: float, fd_delta: float | None = None) -> EmbeddingSample:
    """Integrate over a rectangular grid in one run.

    axes is a list of N strictly increasing coordinate arrays.  The grid is
    traversed in snake order so each leg is one grid edge; states are stored
    at the nodes in C-order layout.  When fd_delta is given, six short side
    excursions per node (distance fd_delta along each axis) record extra
    Jacobians for second-form differencing at a spacing the caller controls
    independently of the grid.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    n = E.n
    if len(axes) != n:
        raise ValueError("need one coordinate axis per variable")
    axes = [np.asarray(a, dtype=float) for a in axes]
    shape = tuple(len(a) for a in axes)
    sys = _System(E)

    def node_u(idx: tuple) -> np.ndarray:
        return np.array([axes[d][idx[d]] for d in range(n)])

    order = snake_order(shape)
    total = int(np.prod(shape))
    points = np.empty((total,) + (n,))
    r = np.empty((total, 2 * n))
    nvec = np.empty((total, 2 * n))
    R = np.empty((total, 2 * n, n))
    Nn = np.empty((total, 2 * n, n))
    fine = np.empty((total, n, 2, 2 * n, n)) if fd_delta else None

    y = _pack(E.r0, E.n0, E.R0, E.Nn0)
    current = E.base_point
    for arc, idx in enumerate(order):
        target = node_u(idx)
        if not np.allclose(current, target):
            y = _rk4_segment(sys, y, current, target, _steps_for(current, target, step), arc)
        current = target
        flat = int(np.ravel_multi_index(idx, shape))
        rr, nn_, RR, NN = _unpack(y, n)
        points[flat] = current
        r[flat] = rr
        nvec[flat] = nn_
        R[flat] = RR
        Nn[flat] = NN
        if fd_delta:
            for axis in range(n):
                for sign_idx, sign in enumerate((-1.0, 1.0)):
                    side = current + sign * fd_delta * np.eye(n)[axis]
                    y_side = _rk4_segment(
                        sys, y.copy(), current, side, _steps_for(current, side, step), arc
                    )
                    fine[flat, axis, sign_idx] = _unpack(y_side, n)[2]
    return EmbeddingSample(
        points=points,
        r=r,
        n=nvec,
        R=R,
        Nn=Nn,
        step=step,
        problem=E,
        grid_shape=shape,
        axes=axes,
        fine_delta=fd_delta,
        fine_R=fine,
    )


@dataclass(frozen=True)
class FundamentalFormsReport:
    """Worst-case residuals of the four embedding checks over all nodes.

    (a) tangent Gram RᵀGR = eta; (b) mixed Gram RᵀG Nn = 0; (c) normal Gram
    NnᵀG Nn = (1/c) eta; (d) second fundamental forms: the Nn-projection of
    centered differences of R equals the potential's third derivatives.
    second_form_mode records where (d)'s differences came from: "stencil"
    (dedicated side excursions at fine_delta) or "grid" (grid neighbors,
    interior nodes only), or "skipped" when neither is possible.
    """

    tol: float
    n_points: int
    max_tangent_gram: float
    max_mixed_gram: float
    max_normal_gram: float
    max_second_form: float | None
    second_form_mode: str
    passes: dict

    @property
    def all_pass(self) -> bool:
        return all(self.passes.values())


def verify_fundamental_forms(sample: EmbeddingSample, tol: float) -> FundamentalFormsReport:
    E = sample.problem
    n = E.n
    G = E.ambient.mat
    eta_f = E.potential.eta.to_float()
    mu_f = eta_f / float(E.c)
    third = E.potential.third_derivatives()

    max_a = max_b = max_c = 0.0
    for m in range(sample.points.shape[0]):
        R = sample.R[m]
        Nn = sample.Nn[m]
        max_a = max(max_a, float(np.abs(R.T @ G @ R - eta_f).max()))
        max_b = max(max_b, float(np.abs(R.T @ G @ Nn).max()))
        max_c = max(max_c, float(np.abs(Nn.T @ G @ Nn - mu_f).max()))

    max_d = None
    mode = "skipped"
    if sample.fine_R is not None and sample.fine_delta:
        mode = "stencil"
        max_d = 0.0
        delta = sample.fine_delta
        for m in range(sample.points.shape[0]):
            u = sample.points[m]
            Nn = sample.Nn[m]
            phi = np.empty((n, n, n))
            for b in range(n):
                for i in range(n):
                    for j in range(n):
                        phi[b, i, j] = third[b][i][j].eval_float(u)
            for j in range(n):
                dR = (sample.fine_R[m, j, 1] - sample.fine_R[m, j, 0]) / (2 * delta)
                # dR[:, i] approximates d^2 r / du^i du^j
                proj = dR.T @ G @ Nn  # (i, beta)
                for i in range(n):
                    for b in range(n):
                        max_d = max(max_d, abs(float(proj[i, b]) - float(phi[b, i, j])))
    elif sample.grid_shape is not None and all(s >= 3 for s in sample.grid_shape):
        mode = "grid"
        max_d = 0.0
        shape = sample.grid_shape
        axes = sample.axes
        R_grid = sample.R.reshape(shape + (2 * n, n))
        Nn_grid = sample.Nn.reshape(shape + (2 * n, n))
        pts_grid = sample.points.reshape(shape + (n,))
        interior = [range(1, s - 1) for s in shape]
        for idx in itertools.product(*interior):
            u = pts_grid[idx]
            Nn = Nn_grid[idx]
            for j in range(n):
                up = list(idx)
                dn = list(idx)
                up[j] += 1
                dn[j] -= 1
                h = axes[j][up[j]] - axes[j][dn[j]]
                dR = (R_grid[tuple(up)] - R_grid[tuple(dn)]) / h
                proj = dR.T @ G @ Nn
                for i in range(n):
                    for b in range(n):
                        val = third[b][i][j].eval_float(u)
                        max_d = max(max_d, abs(float(proj[i, b]) - val))

    passes = {
        "tangent_gram": max_a <= tol,
        "mixed_gram": max_b <= tol,
        "normal_gram": max_c <= tol,
    }
    if max_d is not None:
        passes["second_form"] = max_d <= tol
    return FundamentalFormsReport(
        tol=tol,
        n_points=int(sample.points.shape[0]),
        max_tangent_gram=max_a,
        max_mixed_gram=max_b,
        max_normal_gram=max_c,
        max_second_form=max_d,
        second_form_mode=mode,
        passes=passes,
    )


def loop_closure_test(E: EmbeddingProblem, loop, step: float) -> float:
    """Integrate around a closed u-path; return the max-norm distance between
    the final and initial (r, n, R, Nn) state.  Near zero iff the connection
    is flat along the loop, which is the associativity property in numeric
    form."""
    waypoints = [np.asarray(p, dtype=float) for p in loop]
    if len(waypoints) < 2 or not np.allclose(waypoints[0], waypoints[-1]):
        raise ValueError("loop must be closed (first and last waypoints equal)")
    sys = _System(E)
    y0 = _pack(E.r0, E.n0, E.R0, E.Nn0)
    y = y0.copy()
    current = E.base_point
    if not np.allclose(current, waypoints[0]):
        y = _rk4_segment(sys, y, current, waypoints[0], _steps_for(current, waypoints[0], step), 0)
        current = waypoints[0]
    start = y.copy()
    for arc in range(1, len(waypoints)):
        y = _rk4_segment(sys, y, current, waypoints[arc], _steps_for(current, waypoints[arc], step), arc)
        current = waypoints[arc]
    return float(np.abs(y - start).max())
