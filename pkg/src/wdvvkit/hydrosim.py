"""Finite-difference simulation of hydrodynamic-type flows u_t = A(u) u_x.

One periodic spatial variable, N field components.  Space is discretized by
4th-order central differences, time by classical RK4; both are fixed because
the point of the simulator is to watch conserved functionals of smooth
solutions, and higher-order centered schemes keep the conservation drift at
scheme level without adding dissipation.  Systems of this type form gradient
catastrophes in finite time, so runs are guarded by a blow-up threshold
instead of any shock handling; keep horizons short and amplitudes small.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .algebra import Poly
from .hamop import HydroFlow

__all__ = [
    "Grid1D",
    "FieldState",
    "SimConfig",
    "BlowUp",
    "simulate_flow",
    "functional_value",
    "conservation_report",
    "advisory_dt",
]

log = logging.getLogger(__name__)


class BlowUp(RuntimeError):
    """Field values left the trust region before t_end (gradient catastrophe
    guard, not an error in the caller's setup).  Carries the failure time."""

    def __init__(self, time: float):
        super().__init__(f"simulation blew up at t = {time:.6g}")
        self.time = time


@dataclass(frozen=True)
class Grid1D:
    """Uniform periodic grid on [0, length)."""

    m: int
    length: float = 1.0

    def __post_init__(self):
        if self.m < 16:
            raise ValueError("need at least 16 grid points")
        if self.length <= 0:
            raise ValueError("domain length must be positive")

    @property
    def dx(self) -> float:
        return self.length / self.m

    def nodes(self) -> np.ndarray:
        return np.arange(self.m) * self.dx


@dataclass(frozen=True)
class FieldState:
    """Snapshot of the N fields on the grid: values has shape (m, N)."""

    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field values must be finite")


@dataclass(frozen=True)
class SimConfig:
    dt: float
    t_end: float
    record_every: int = 1
    blowup_threshold: float = 1e3
    smoothing: float = 0.0  # exponential Fourier filter strength; 0 disables

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.t_end < 0:
            raise ValueError("t_end must be nonnegative")
        if self.record_every < 1:
            raise ValueError("record_every must be at least 1")


def _diff_x(values: np.ndarray, dx: float) -> np.ndarray:
    """4th-order central difference along axis 0, periodic."""
    up1 = np.roll(values, -1, axis=0)
    dn1 = np.roll(values, 1, axis=0)
    up2 = np.roll(values, -2, axis=0)
    dn2 = np.roll(values, 2, axis=0)
    return (8.0 * (up1 - dn1) - (up2 - dn2)) / (12.0 * dx)


class _CompiledFlow:
    def __init__(self, flow: HydroFlow):
        self.n = flow.a.rows
        self.entries = [
            [flow.a[i, j].compile_float() for j in range(self.n)]
            for i in range(self.n)
        ]

    def rhs(self, values: np.ndarray, dx: float) -> np.ndarray:
        ux = _diff_x(values, dx)
        out = np.zeros_like(values)
        for i in range(self.n):
            acc = np.zeros(values.shape[0])
            for j in range(self.n):
                acc += self.entries[i][j](values) * ux[:, j]
            out[:, i] = acc
        return out


def advisory_dt(flow: HydroFlow, init: FieldState, grid: Grid1D) -> float:
    """CFL-style advisory bound dx / (10 max|A|), with max|A| estimated as the
    largest induced sup-norm of A(u) over the initial nodes.  Advisory only:
    the simulator warns but does not refuse larger steps."""
    compiled = _CompiledFlow(flow)
    n = compiled.n
    vals = np.empty((init.values.shape[0], n, n))
    for i in range(n):
        for j in range(n):
            vals[:, i, j] = compiled.entries[i][j](init.values)
    row_sums = np.abs(vals).sum(axis=2).max()
    if row_sums == 0:
        return np.inf
    return grid.dx / (10.0 * row_sums)


def _smooth(values: np.ndarray, strength: float) -> np.ndarray:
    m = values.shape[0]
    k = np.fft.rfftfreq(m) * m  # integer wavenumbers 0..m/2
    damp = np.exp(-strength * (2.0 * k / m) ** 8)
    return np.fft.irfft(np.fft.rfft(values, axis=0) * damp[:, None], n=m, axis=0)


def simulate_flow(flow: HydroFlow, init: FieldState, grid: Grid1D, cfg: SimConfig) -> list[FieldState]:
    """March u_t = A(u) u_x and return recorded states (always including the
    initial and final ones).  Raises BlowUp when any value leaves the
    threshold or turns nonfinite."""
    values = np.asarray(init.values, dtype=float)
    if values.shape[0] != grid.m:
        raise ValueError("state does not match grid size")
    if values.ndim != 2 or values.shape[1] != flow.a.rows:
        raise ValueError("state does not match flow dimension")
    compiled = _CompiledFlow(flow)
    adv = advisory_dt(flow, init, grid)
    if cfg.dt > adv:
        log.warning("dt %.3g exceeds CFL advisory %.3g", cfg.dt, adv)

    dx = grid.dx
    n_steps = int(np.ceil(cfg.t_end / cfg.dt)) if cfg.t_end > 0 else 0
    trajectory = [FieldState(values=values.copy(), time=init.time)]
    t = init.time
    for step in range(n_steps):
        h = min(cfg.dt, init.time + cfg.t_end - t)
        k1 = compiled.rhs(values, dx)
        k2 = compiled.rhs(values + 0.5 * h * k1, dx)
        k3 = compiled.rhs(values + 0.5 * h * k2, dx)
        k4 = compiled.rhs(values + h * k3, dx)
        values = values + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if cfg.smoothing > 0:
            values = _smooth(values, cfg.smoothing)
        t += h
        if not np.all(np.isfinite(values)) or np.abs(values).max() > cfg.blowup_threshold:
            raise BlowUp(t)
        if (step + 1) % cfg.record_every == 0 or step == n_steps - 1:
            trajectory.append(FieldState(values=values.copy(), time=t))
    return trajectory


def functional_value(density: Poly, state: FieldState, grid: Grid1D) -> float:
    """Integral of density(u(x)) dx by the periodic rectangle rule (identical
    to the trapezoid rule on a periodic grid)."""
    if density.n_vars != state.values.shape[1]:
        raise ValueError("density arity does not match field dimension")
    node_vals = density.compile_float()(state.values)
    return float(node_vals.sum() * grid.dx)


def conservation_report(trajectory: list[FieldState], densities: list[Poly], grid: Grid1D) -> list[float]:
    """Max relative drift |H(t) - H(0)| / max(1, |H(0)|) per density."""
    out = []
    for dens in densities:
        values = [functional_value(dens, s, grid) for s in trajectory]
        ref = values[0]
        scale = max(1.0, abs(ref))
        out.append(max(abs(v - ref) for v in values) / scale)
    return out
