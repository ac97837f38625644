"""Exact arithmetic kernel: rationals, multivariate polynomials, polynomial
matrices, constant symmetric metrics, and integration of closed forms.

Every symbolic path works over ``fractions.Fraction``; floating point enters
only through the explicit ``*_float`` conversions used by the numeric layers.
Monomials are ordered graded lexicographically (total degree first, then
exponent tuple), which fixes one canonical form for printing and golden files.

Practical working range: up to about 8 variables and total degree 16.  The
code stays exact beyond that, but run time and term counts grow quickly.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

Rational = Fraction

__all__ = [
    "Rational",
    "Poly",
    "JetPoly",
    "JetSpace",
    "PolyMatrix",
    "ConstSymMatrix",
    "SingularMatrixError",
    "NotClosedError",
    "grlex_key",
    "gradient",
    "hessian",
    "integrate_exact_one_form",
    "integrate_exact_two_form",
    "matrix_inverse_exact",
    "solve_exact_linear",
    "strip_affine_part",
    "strip_quadratic_part",
]


class SingularMatrixError(ValueError):
    """Raised when an exact inverse is requested of a singular matrix."""


class NotClosedError(ValueError):
    """A form handed to an exact integrator failed its closedness check.

    Attributes:
        indices: the index pair whose mixed partials disagree.
        residual: the offending difference as a Poly.
    """

    def __init__(self, message: str, indices, residual):
        super().__init__(message)
        self.indices = indices
        self.residual = residual


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    raise TypeError(f"expected an exact rational, got {type(x).__name__}")


def grlex_key(exponents: tuple) -> tuple:
    """Sort key for graded lexicographic order (ascending)."""
    return (sum(exponents), exponents)


class Poly:
    """Immutable multivariate polynomial with Fraction coefficients.

    Terms are stored as a dict mapping exponent tuples (one entry per
    variable, length ``n_vars``) to nonzero coefficients.  Variables are
    addressed 1-based to match the surface syntax u1, u2, ...
    """

    __slots__ = ("n_vars", "terms")

    def __init__(self, n_vars: int, terms: Mapping[tuple, Fraction] | None = None):
        if n_vars < 0:
            raise ValueError("n_vars must be nonnegative")
        clean: dict[tuple, Fraction] = {}
        if terms:
            for exp, coeff in terms.items():
                c = _as_fraction(coeff)
                if c == 0:
                    continue
                exp = tuple(int(e) for e in exp)
                if len(exp) != n_vars or any(e < 0 for e in exp):
                    raise ValueError(f"bad exponent tuple {exp} for n_vars={n_vars}")
                clean[exp] = c
        object.__setattr__(self, "n_vars", n_vars)
        object.__setattr__(self, "terms", clean)

    def __setattr__(self, name, value):
        raise AttributeError("Poly is immutable")

    # -- constructors ------------------------------------------------------

    @staticmethod
    def zero(n_vars: int) -> "Poly":
        return Poly(n_vars, {})

    @staticmethod
    def constant(n_vars: int, value) -> "Poly":
        return Poly(n_vars, {(0,) * n_vars: _as_fraction(value)})

    @staticmethod
    def variable(n_vars: int, index: int) -> "Poly":
        """The monomial u<index>, index is 1-based."""
        if not 1 <= index <= n_vars:
            raise ValueError(f"variable index {index} out of range 1..{n_vars}")
        exp = tuple(1 if i == index - 1 else 0 for i in range(n_vars))
        return Poly(n_vars, {exp: Fraction(1)})

    # -- queries -----------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return all(sum(e) == 0 for e in self.terms)

    def constant_value(self) -> Fraction:
        """Coefficient of the constant monomial (the whole value if constant)."""
        return self.terms.get((0,) * self.n_vars, Fraction(0))

    def total_degree(self) -> int:
        """Total degree, with the convention that the zero polynomial has -1."""
        if not self.terms:
            return -1
        return max(sum(e) for e in self.terms)

    def sorted_terms(self) -> list[tuple[tuple, Fraction]]:
        """Terms in descending graded lexicographic order, leading term first."""
        return sorted(self.terms.items(), key=lambda kv: grlex_key(kv[0]), reverse=True)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Poly):
            return NotImplemented
        return self.n_vars == other.n_vars and self.terms == other.terms

    __hash__ = None

    def __repr__(self) -> str:
        parts = [f"{exp}:{coeff}" for exp, coeff in self.sorted_terms()[:6]]
        if len(self.terms) > 6:
            parts.append("...")
        return f"Poly({self.n_vars}; {', '.join(parts) or '0'})"

    # -- arithmetic --------------------------------------------------------

    def _check_compatible(self, other: "Poly"):
        if self.n_vars != other.n_vars:
            raise ValueError("polynomials over different variable counts")

    def __add__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Poly.constant(self.n_vars, other)
        if not isinstance(other, Poly):
            return NotImplemented
        self._check_compatible(other)
        acc = dict(self.terms)
        for exp, coeff in other.terms.items():
            s = acc.get(exp, Fraction(0)) + coeff
            if s == 0:
                acc.pop(exp, None)
            else:
                acc[exp] = s
        return Poly(self.n_vars, acc)

    __radd__ = __add__

    def __neg__(self):
        return Poly(self.n_vars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Poly.constant(self.n_vars, other)
        if not isinstance(other, Poly):
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            c = _as_fraction(other)
            if c == 0:
                return Poly.zero(self.n_vars)
            return Poly(self.n_vars, {e: k * c for e, k in self.terms.items()})
        if not isinstance(other, Poly):
            return NotImplemented
        self._check_compatible(other)
        acc: dict[tuple, Fraction] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                exp = tuple(a + b for a, b in zip(e1, e2))
                s = acc.get(exp, Fraction(0)) + c1 * c2
                if s == 0:
                    acc.pop(exp, None)
                else:
                    acc[exp] = s
        return Poly(self.n_vars, acc)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValueError("exponent must be a nonnegative integer")
        result = Poly.constant(self.n_vars, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    # -- calculus ----------------------------------------------------------

    def diff(self, index: int) -> "Poly":
        """Partial derivative with respect to u<index> (1-based)."""
        if not 1 <= index <= self.n_vars:
            raise ValueError(f"variable index {index} out of range 1..{self.n_vars}")
        i = index - 1
        acc: dict[tuple, Fraction] = {}
        for exp, coeff in self.terms.items():
            e = exp[i]
            if e == 0:
                continue
            new = list(exp)
            new[i] = e - 1
            acc[tuple(new)] = coeff * e
        return Poly(self.n_vars, acc)

    def eval(self, point: Sequence) -> Fraction:
        """Exact evaluation at a rational point."""
        if len(point) != self.n_vars:
            raise ValueError("point has wrong dimension")
        pt = [_as_fraction(x) for x in point]
        total = Fraction(0)
        for exp, coeff in self.terms.items():
            v = coeff
            for x, e in zip(pt, exp):
                if e:
                    v *= x**e
            total += v
        return total

    def eval_float(self, point: Sequence[float]) -> float:
        total = 0.0
        for exp, coeff in self.terms.items():
            v = float(coeff)
            for x, e in zip(point, exp):
                if e:
                    v *= float(x) ** e
            total += v
        return total

    def compile_float(self) -> Callable[[np.ndarray], np.ndarray]:
        """Vectorized float evaluator.

        Returns a callable taking an array of shape (..., n_vars) and
        producing values of shape (...).  Intended for grid evaluation in the
        numeric layers; the symbolic layer never calls it.
        """
        if not self.terms:
            return lambda u: np.zeros(np.asarray(u).shape[:-1])
        exps = np.array(list(self.terms.keys()), dtype=np.int64)
        coeffs = np.array([float(c) for c in self.terms.values()])

        def evaluate(u: np.ndarray) -> np.ndarray:
            u = np.asarray(u, dtype=float)
            powers = u[..., None, :] ** exps
            return powers.prod(axis=-1) @ coeffs

        return evaluate

    # -- reshaping ---------------------------------------------------------

    def extend_vars(self, new_n_vars: int) -> "Poly":
        """Reinterpret over a larger variable list, new variables appended."""
        if new_n_vars < self.n_vars:
            raise ValueError("cannot shrink the variable list")
        pad = (0,) * (new_n_vars - self.n_vars)
        return Poly(new_n_vars, {e + pad: c for e, c in self.terms.items()})

    def drop_terms_below_degree(self, cutoff: int) -> "Poly":
        """Keep only terms of total degree >= cutoff."""
        return Poly(self.n_vars, {e: c for e, c in self.terms.items() if sum(e) >= cutoff})


# A jet polynomial is an ordinary Poly over 3N variables read as
# (u^1..u^N, u^1_x..u^N_x, u^1_xx..u^N_xx).  The alias marks intent in
# signatures; JetSpace supplies the variable bookkeeping.
JetPoly = Poly


class JetSpace:
    """Variable layout for first and second x-jets over N field components."""

    def __init__(self, n: int):
        if n < 1:
            raise ValueError("need at least one field component")
        self.n = n
        self.n_vars = 3 * n

    def u(self, i: int) -> Poly:
        return Poly.variable(self.n_vars, i)

    def ux(self, i: int) -> Poly:
        return Poly.variable(self.n_vars, self.n + i)

    def uxx(self, i: int) -> Poly:
        return Poly.variable(self.n_vars, 2 * self.n + i)

    def embed(self, p: Poly) -> Poly:
        """Lift a function of u alone into the jet variable list."""
        if p.n_vars != self.n:
            raise ValueError("expected a Poly over the base variables")
        return p.extend_vars(self.n_vars)

    def total_x_derivative(self, p: Poly) -> Poly:
        """D_x on functions of (u, u_x): u^i goes to u^i_x, u^i_x to u^i_xx."""
        if p.n_vars != self.n_vars:
            raise ValueError("expected a jet Poly")
        acc = Poly.zero(self.n_vars)
        for i in range(1, self.n + 1):
            acc = acc + p.diff(i) * self.ux(i)
            acc = acc + p.diff(self.n + i) * self.uxx(i)
        return acc


def strip_affine_part(p: Poly) -> Poly:
    """Remove constant and linear terms, the usual normalization for densities."""
    return p.drop_terms_below_degree(2)


def strip_quadratic_part(p: Poly) -> Poly:
    """Remove terms of total degree two and below, used for potentials."""
    return p.drop_terms_below_degree(3)


def gradient(p: Poly) -> list[Poly]:
    return [p.diff(i) for i in range(1, p.n_vars + 1)]


def hessian(p: Poly) -> "PolyMatrix":
    n = p.n_vars
    grads = gradient(p)
    rows = [[grads[i].diff(j + 1) for j in range(n)] for i in range(n)]
    return PolyMatrix(rows)


class PolyMatrix:
    """Rectangular matrix of Poly entries over a shared variable list."""

    __slots__ = ("rows", "cols", "n_vars", "entries")

    def __init__(self, entries: Sequence[Sequence[Poly]]):
        rows = len(entries)
        if rows == 0:
            raise ValueError("PolyMatrix needs at least one row")
        cols = len(entries[0])
        if cols == 0:
            raise ValueError("PolyMatrix needs at least one column")
        n_vars = entries[0][0].n_vars
        frozen = []
        for row in entries:
            if len(row) != cols:
                raise ValueError("ragged rows")
            for p in row:
                if not isinstance(p, Poly) or p.n_vars != n_vars:
                    raise ValueError("entries must be Poly over one variable list")
            frozen.append(tuple(row))
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "cols", cols)
        object.__setattr__(self, "n_vars", n_vars)
        object.__setattr__(self, "entries", tuple(frozen))

    def __setattr__(self, name, value):
        raise AttributeError("PolyMatrix is immutable")

    @staticmethod
    def zeros(rows: int, cols: int, n_vars: int) -> "PolyMatrix":
        z = Poly.zero(n_vars)
        return PolyMatrix([[z] * cols for _ in range(rows)])

    @staticmethod
    def identity(n: int, n_vars: int) -> "PolyMatrix":
        one = Poly.constant(n_vars, 1)
        z = Poly.zero(n_vars)
        return PolyMatrix([[one if i == j else z for j in range(n)] for i in range(n)])

    @staticmethod
    def from_const(mat: "ConstSymMatrix", n_vars: int) -> "PolyMatrix":
        return PolyMatrix(
            [
                [Poly.constant(n_vars, mat.entries[i][j]) for j in range(mat.dim)]
                for i in range(mat.dim)
            ]
        )

    def __getitem__(self, ij) -> Poly:
        i, j = ij
        return self.entries[i][j]

    def __eq__(self, other) -> bool:
        if not isinstance(other, PolyMatrix):
            return NotImplemented
        return self.entries == other.entries

    __hash__ = None

    def __add__(self, other: "PolyMatrix") -> "PolyMatrix":
        self._check_shape(other)
        return PolyMatrix(
            [
                [self.entries[i][j] + other.entries[i][j] for j in range(self.cols)]
                for i in range(self.rows)
            ]
        )

    def __sub__(self, other: "PolyMatrix") -> "PolyMatrix":
        self._check_shape(other)
        return PolyMatrix(
            [
                [self.entries[i][j] - other.entries[i][j] for j in range(self.cols)]
                for i in range(self.rows)
            ]
        )

    def __neg__(self) -> "PolyMatrix":
        return PolyMatrix([[-p for p in row] for row in self.entries])

    def _check_shape(self, other: "PolyMatrix"):
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise ValueError("shape mismatch")

    def __matmul__(self, other: "PolyMatrix") -> "PolyMatrix":
        if self.cols != other.rows:
            raise ValueError("inner dimensions disagree")
        out = []
        for i in range(self.rows):
            row = []
            for j in range(other.cols):
                acc = Poly.zero(self.n_vars)
                for k in range(self.cols):
                    acc = acc + self.entries[i][k] * other.entries[k][j]
                row.append(acc)
            out.append(row)
        return PolyMatrix(out)

    def scale(self, c) -> "PolyMatrix":
        return PolyMatrix([[p * c for p in row] for row in self.entries])

    def transpose(self) -> "PolyMatrix":
        return PolyMatrix(
            [[self.entries[i][j] for i in range(self.rows)] for j in range(self.cols)]
        )

    def diff(self, index: int) -> "PolyMatrix":
        return PolyMatrix([[p.diff(index) for p in row] for row in self.entries])

    def is_zero(self) -> bool:
        return all(p.is_zero() for row in self.entries for p in row)

    def is_symmetric(self) -> bool:
        if self.rows != self.cols:
            return False
        return all(
            self.entries[i][j] == self.entries[j][i]
            for i in range(self.rows)
            for j in range(i + 1, self.cols)
        )

    def commutator(self, other: "PolyMatrix") -> "PolyMatrix":
        return (self @ other) - (other @ self)

    def map(self, fn: Callable[[Poly], Poly]) -> "PolyMatrix":
        return PolyMatrix([[fn(p) for p in row] for row in self.entries])

    def max_total_degree(self) -> int:
        return max(p.total_degree() for row in self.entries for p in row)

    def nonzero_count(self) -> int:
        return sum(1 for row in self.entries for p in row if not p.is_zero())

    def __repr__(self) -> str:
        return f"PolyMatrix({self.rows}x{self.cols}, n_vars={self.n_vars})"


class ConstSymMatrix:
    """Symmetric invertible matrix of rational constants.

    Symmetry and invertibility are checked at construction; the exact inverse
    is computed eagerly and cached so downstream code can index it freely.
    """

    __slots__ = ("dim", "entries", "_inv_entries")

    def __init__(self, entries: Sequence[Sequence], _inv=None):
        dim = len(entries)
        mat = []
        for row in entries:
            if len(row) != dim:
                raise ValueError("matrix must be square")
            mat.append(tuple(_as_fraction(x) for x in row))
        for i in range(dim):
            for j in range(i + 1, dim):
                if mat[i][j] != mat[j][i]:
                    raise ValueError(f"not symmetric at ({i},{j})")
        object.__setattr__(self, "dim", dim)
        object.__setattr__(self, "entries", tuple(mat))
        if _inv is None:
            _inv = _exact_inverse(mat)  # raises SingularMatrixError if singular
        object.__setattr__(self, "_inv_entries", _inv)

    def __setattr__(self, name, value):
        raise AttributeError("ConstSymMatrix is immutable")

    @staticmethod
    def identity(dim: int) -> "ConstSymMatrix":
        return ConstSymMatrix(
            [[Fraction(1 if i == j else 0) for j in range(dim)] for i in range(dim)]
        )

    def __getitem__(self, ij) -> Fraction:
        i, j = ij
        return self.entries[i][j]

    def __eq__(self, other) -> bool:
        if not isinstance(other, ConstSymMatrix):
            return NotImplemented
        return self.entries == other.entries

    __hash__ = None

    def inverse(self) -> "ConstSymMatrix":
        # the inverse of a symmetric matrix is symmetric, so this round-trips
        return ConstSymMatrix(self._inv_entries, _inv=self.entries)

    def inv_entry(self, i: int, j: int) -> Fraction:
        return self._inv_entries[i][j]

    def scaled(self, c) -> "ConstSymMatrix":
        c = _as_fraction(c)
        if c == 0:
            raise ValueError("scaling a metric by zero")
        return ConstSymMatrix([[x * c for x in row] for row in self.entries])

    def signature(self) -> tuple[int, int]:
        """Numbers of positive and negative squares, by exact congruence
        diagonalization.  Invertibility means the counts sum to dim."""
        a = [list(row) for row in self.entries]
        n = self.dim
        pos = neg = 0
        for k in range(n):
            if a[k][k] == 0:
                swap = next((j for j in range(k + 1, n) if a[j][j] != 0), None)
                if swap is not None:
                    _congruence_swap(a, k, swap)
                else:
                    j = next((j for j in range(k + 1, n) if a[k][j] != 0), None)
                    if j is None:
                        raise SingularMatrixError("degenerate block in signature sweep")
                    _congruence_add(a, k, j)
            pivot = a[k][k]
            if pivot > 0:
                pos += 1
            else:
                neg += 1
            for i in range(k + 1, n):
                if a[i][k] == 0:
                    continue
                f = a[i][k] / pivot
                for j in range(n):
                    a[i][j] -= f * a[k][j]
                for j in range(n):
                    a[j][i] -= f * a[j][k]
        return pos, neg

    def to_float(self) -> np.ndarray:
        return np.array([[float(x) for x in row] for row in self.entries])

    def inv_to_float(self) -> np.ndarray:
        return np.array([[float(x) for x in row] for row in self._inv_entries])

    @staticmethod
    def block_diag(a: "ConstSymMatrix", b: "ConstSymMatrix") -> "ConstSymMatrix":
        n, m = a.dim, b.dim
        zero = Fraction(0)
        out = []
        for i in range(n):
            out.append(list(a.entries[i]) + [zero] * m)
        for i in range(m):
            out.append([zero] * n + list(b.entries[i]))
        return ConstSymMatrix(out)

    def __repr__(self) -> str:
        return f"ConstSymMatrix({[list(map(str, row)) for row in self.entries]})"


def _congruence_swap(a: list[list[Fraction]], i: int, j: int):
    a[i], a[j] = a[j], a[i]
    for row in a:
        row[i], row[j] = row[j], row[i]


def _congruence_add(a: list[list[Fraction]], i: int, j: int):
    # row_i += row_j, then col_i += col_j; makes a[i][i] = 2 a[i][j] != 0
    n = len(a)
    for k in range(n):
        a[i][k] += a[j][k]
    for k in range(n):
        a[k][i] += a[k][j]


def _exact_inverse(mat: Sequence[Sequence[Fraction]]) -> tuple:
    """Gauss-Jordan with partial pivoting over Fraction."""
    n = len(mat)
    a = [list(row) for row in mat]
    inv = [[Fraction(1 if i == j else 0) for j in range(n)] for i in range(n)]
    for col in range(n):
        pivot_row = next((r for r in range(col, n) if a[r][col] != 0), None)
        if pivot_row is None:
            raise SingularMatrixError("matrix is singular over the rationals")
        if pivot_row != col:
            a[col], a[pivot_row] = a[pivot_row], a[col]
            inv[col], inv[pivot_row] = inv[pivot_row], inv[col]
        pivot = a[col][col]
        a[col] = [x / pivot for x in a[col]]
        inv[col] = [x / pivot for x in inv[col]]
        for r in range(n):
            if r == col or a[r][col] == 0:
                continue
            f = a[r][col]
            a[r] = [x - f * y for x, y in zip(a[r], a[col])]
            inv[r] = [x - f * y for x, y in zip(inv[r], inv[col])]
    return tuple(tuple(row) for row in inv)


def matrix_inverse_exact(entries: Sequence[Sequence]) -> list[list[Fraction]]:
    """Exact inverse of a square rational matrix (no symmetry assumed)."""
    mat = [[_as_fraction(x) for x in row] for row in entries]
    return [list(row) for row in _exact_inverse(mat)]


def solve_exact_linear(
    rows: Sequence[Sequence], rhs: Sequence
) -> list[Fraction] | None:
    """One exact solution of a (possibly overdetermined) rational system.

    Returns None when the system is inconsistent; free unknowns are set to 0.
    """
    a = [[_as_fraction(x) for x in row] for row in rows]
    b = [_as_fraction(x) for x in rhs]
    if len(a) != len(b):
        raise ValueError("row/rhs count mismatch")
    n_unknowns = len(a[0]) if a else 0
    pivots: list[tuple[int, int]] = []
    row = 0
    for col in range(n_unknowns):
        pivot_row = next((r for r in range(row, len(a)) if a[r][col] != 0), None)
        if pivot_row is None:
            continue
        a[row], a[pivot_row] = a[pivot_row], a[row]
        b[row], b[pivot_row] = b[pivot_row], b[row]
        pivot = a[row][col]
        a[row] = [x / pivot for x in a[row]]
        b[row] = b[row] / pivot
        for r in range(len(a)):
            if r == row or a[r][col] == 0:
                continue
            f = a[r][col]
            a[r] = [x - f * y for x, y in zip(a[r], a[row])]
            b[r] = b[r] - f * b[row]
        pivots.append((row, col))
        row += 1
        if row == len(a):
            break
    for r in range(row, len(a)):
        if b[r] != 0:
            return None
    solution = [Fraction(0)] * n_unknowns
    for r, c in pivots:
        solution[c] = b[r]
    return solution


# -- exact integration of closed forms ------------------------------------


def one_form_closedness_residual(omega: Sequence[Poly]) -> list[tuple[tuple[int, int], Poly]]:
    """All pairwise mixed-partial defects d omega_k / du^l - d omega_l / du^k."""
    n = len(omega)
    out = []
    for k in range(n):
        for l in range(k + 1, n):
            r = omega[k].diff(l + 1) - omega[l].diff(k + 1)
            out.append(((k + 1, l + 1), r))
    return out


def integrate_exact_one_form(omega: Sequence[Poly]) -> Poly:
    """Potential of a closed polynomial 1-form, vanishing at the origin.

    Uses the straight-line homotopy from 0: a degree-d monomial of omega_k
    contributes coefficient/(d+1) times the monomial with the k-th exponent
    bumped.  Closedness is checked exactly first; NotClosedError carries the
    first offending residual.
    """
    if not omega:
        raise ValueError("empty form")
    n_vars = omega[0].n_vars
    if len(omega) != n_vars:
        raise ValueError("a 1-form needs one component per variable")
    for (k, l), r in one_form_closedness_residual(omega):
        if not r.is_zero():
            raise NotClosedError(
                f"form is not closed: mixed partials differ for pair ({k},{l})",
                (k, l),
                r,
            )
    acc: dict[tuple, Fraction] = {}
    for k, comp in enumerate(omega):
        for exp, coeff in comp.terms.items():
            d = sum(exp)
            new = list(exp)
            new[k] += 1
            key = tuple(new)
            s = acc.get(key, Fraction(0)) + coeff / (d + 1)
            if s == 0:
                acc.pop(key, None)
            else:
                acc[key] = s
    return Poly(n_vars, acc)


def integrate_exact_two_form(m: PolyMatrix) -> Poly:
    """Scalar with prescribed Hessian, by two nested 1-form integrations.

    Requires m symmetric with each row closed as a 1-form.  The result
    vanishes at the origin together with its gradient.
    """
    if m.rows != m.cols:
        raise ValueError("Hessian prescription must be square")
    if not m.is_symmetric():
        for i in range(m.rows):
            for j in range(i + 1, m.cols):
                r = m.entries[i][j] - m.entries[j][i]
                if not r.is_zero():
                    raise NotClosedError(
                        f"matrix is not symmetric at ({i + 1},{j + 1})", (i + 1, j + 1), r
                    )
    first = [integrate_exact_one_form(list(row)) for row in m.entries]
    return integrate_exact_one_form(first)
