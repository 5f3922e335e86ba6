"""Phase-space fields and the frictionless Fokker-Planck grid solver.

The PDE is

    df/dt = -(p/m) df/dx + V'(x) df/dp + (D_x/2) d2f/dx2 + (D_p/2) d2f/dp2

solved with Strang splitting: flux-limited finite-volume advection along
each axis (van Leer limiter, outflow boundaries) around an explicit
diffusion step (Neumann boundaries).  Outflow mass leakage is monitored
and aborts the run past a tolerance.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .gaussian import gaussian_pdf
from .potentials import HamiltonianModel
from .scales import DiffusionSpec
from . import _kernels

__all__ = [
    "PhaseField",
    "gaussian_phase_field",
    "l1_distance",
    "evolve_fokker_planck",
    "CFLError",
]


@dataclass
class PhaseField:
    """A scalar field on a rectangular (x, p) phase-space grid.

    values[i, j] is the density at (x[i], p[j]).  Probability densities are
    nonnegative and integrate to one; quasi-probability fields (Wigner
    transforms) share the type but skip `assert_probability`.
    """

    x: np.ndarray
    p: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.p = np.asarray(self.p, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.x.size, self.p.size):
            raise ValueError("values shape must be (len(x), len(p))")

    @property
    def dx(self) -> float:
        return float(self.x[1] - self.x[0])

    @property
    def dp(self) -> float:
        return float(self.p[1] - self.p[0])

    @property
    def cell_area(self) -> float:
        return self.dx * self.dp

    def mass(self) -> float:
        return float(self.values.sum() * self.cell_area)

    def assert_probability(self, mass_tol: float = 1e-6,
                           undershoot_tol: float = 1e-9) -> None:
        if abs(self.mass() - 1.0) > mass_tol:
            raise ValueError(f"field mass {self.mass():.8f} is not 1")
        if self.values.min() < -undershoot_tol:
            raise ValueError(f"field undershoots to {self.values.min():.3g}")

    def marginal_x(self) -> np.ndarray:
        return self.values.sum(axis=1) * self.dp

    def marginal_p(self) -> np.ndarray:
        return self.values.sum(axis=0) * self.dx

    def moments(self):
        """Mean vector (x, p) and 2x2 covariance of the field."""
        w = self.values * self.cell_area
        tot = w.sum()
        mx = float((w.sum(axis=1) * self.x).sum() / tot)
        mp = float((w.sum(axis=0) * self.p).sum() / tot)
        dxv = self.x - mx
        dpv = self.p - mp
        cxx = float((w.sum(axis=1) * dxv**2).sum() / tot)
        cpp = float((w.sum(axis=0) * dpv**2).sum() / tot)
        cxp = float((w * np.outer(dxv, dpv)).sum() / tot)
        return np.array([mx, mp]), np.array([[cxx, cxp], [cxp, cpp]])


def gaussian_phase_field(mean, cov, x: np.ndarray, p: np.ndarray) -> PhaseField:
    """Gaussian probability density sampled on the (x, p) grid."""
    mean = np.asarray(mean, dtype=float)
    beta = np.stack(np.meshgrid(x - mean[0], p - mean[1], indexing="ij"),
                    axis=-1)
    return PhaseField(x, p, gaussian_pdf(beta, np.asarray(cov, dtype=float)))


def l1_distance(f1: PhaseField, f2: PhaseField) -> float:
    """Integral of |f1 - f2| over phase space."""
    if f1.values.shape != f2.values.shape or not (
            np.array_equal(f1.x, f2.x) and np.array_equal(f1.p, f2.p)):
        raise ValueError("fields live on different grids")
    return float(np.abs(f1.values - f2.values).sum() * f1.cell_area)


class CFLError(ValueError):
    """Step size violates the advection or diffusion CFL bound."""

    def __init__(self, kind: str, dt: float, dt_max: float):
        self.suggested_dt = 0.8 * dt_max
        super().__init__(
            f"{kind} CFL violated: dt = {dt:.3g} exceeds {dt_max:.3g}; "
            f"suggested dt = {self.suggested_dt:.3g}")


def _cfl_limits(f: PhaseField, model: HamiltonianModel,
                diffusion: DiffusionSpec):
    vx = np.abs(f.p).max() / model.mass
    vp = np.abs(model.potential.grad(f.x)).max()
    adv = math.inf
    if vx > 0:
        adv = min(adv, f.dx / vx)
    if vp > 0:
        adv = min(adv, f.dp / vp)
    diff = math.inf
    if diffusion.d_x > 0:
        diff = min(diff, f.dx**2 / (0.5 * diffusion.d_x))
    if diffusion.d_p > 0:
        diff = min(diff, f.dp**2 / (0.5 * diffusion.d_p))
    # advection limit is Courant <= 1 per half-step pair; explicit
    # diffusion of the (D/2)-Laplacian needs (D/2) dt / h^2 <= 1/2,
    # with a safety margin
    return adv, 0.45 * diff


def evolve_fokker_planck(f0: PhaseField, model: HamiltonianModel,
                         diffusion: DiffusionSpec, t_final: float, dt: float,
                         snapshot_times=None, leak_tol: float = 1e-4):
    """Integrate the frictionless Fokker-Planck equation.

    Returns a list of (t, PhaseField) snapshots (t = 0 included).  Aborts
    when outflow through the boundary exceeds `leak_tol` of the mass.
    """
    adv_max, diff_max = _cfl_limits(f0, model, diffusion)
    if dt > adv_max:
        raise CFLError("advection", dt, adv_max)
    if dt > diff_max:
        raise CFLError("diffusion", dt, diff_max)

    n_steps = max(int(round(t_final / dt)), 1)
    dt = t_final / n_steps
    snaps = sorted(snapshot_times) if snapshot_times else [t_final]
    snap_steps = {max(int(round(t / dt)), 0) for t in snaps}

    vals = np.ascontiguousarray(f0.values.copy())
    speed_x = f0.p / model.mass                 # row speed, constant per j
    speed_p = -np.asarray(model.potential.grad(f0.x), dtype=float)
    mass0 = vals.sum()
    out = [(0.0, PhaseField(f0.x, f0.p, vals.copy()))] if 0 in snap_steps \
        else []
    if not out:
        out = [(0.0, PhaseField(f0.x, f0.p, vals.copy()))]

    for step in range(1, n_steps + 1):
        _kernels.advect_x(vals, speed_x, f0.dx, 0.5 * dt)
        _kernels.advect_p(vals, speed_p, f0.dp, 0.5 * dt)
        _kernels.diffuse(vals, 0.5 * diffusion.d_x * dt / f0.dx**2,
                         0.5 * diffusion.d_p * dt / f0.dp**2)
        _kernels.advect_p(vals, speed_p, f0.dp, 0.5 * dt)
        _kernels.advect_x(vals, speed_x, f0.dx, 0.5 * dt)
        leak = 1.0 - vals.sum() / mass0
        if abs(leak) > leak_tol:
            raise RuntimeError(
                f"step {step}: boundary mass leak {leak:.3g} exceeds "
                f"{leak_tol}; enlarge the phase-space box")
        if step in snap_steps:
            out.append((step * dt, PhaseField(f0.x, f0.p, vals.copy())))
    return out
