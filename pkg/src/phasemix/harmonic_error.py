"""Error of the local quadratic approximation acting on a Gaussian state.

Replacing the potential V by its second-order Taylor expansion about the
packet center changes the generator by a term proportional to the
third-derivative scale J3 = sup|V'''|.  Acting on a pure Gaussian of
covariance sigma, the residual generator is bounded in trace norm
(quantum) and L1 norm (classical) by

    sqrt(5 d^3 / 3) * J3 * ||sigma_xx||^(3/2) / hbar    (quantum)
    sqrt(3 d^3)     * J3 * ||sigma_xx||^(3/2) / hbar    (classical)

with the operator norm of the position block of sigma.  The single
constant mu = sqrt(3) d^(3/2) J3 ||sigma_xx||^(3/2) / hbar dominates both
(it equals the classical constant and exceeds the quantum one).  This
module computes the bounds for any dimension and, for d = 1, also
evaluates the residual generators explicitly on grids so that the bounds
can be checked numerically.
"""

import math
from dataclasses import dataclass

import numpy as np

from .gaussian import gaussian_pdf
from .potentials import HamiltonianModel, harmonic_expansion

__all__ = [
    "HarmonicErrorReport",
    "lemma_bound_quantum",
    "lemma_bound_classical",
    "main_text_mu",
    "numeric_harmonic_error_quantum",
    "numeric_harmonic_error_classical",
    "harmonic_error_report",
]


def _sigma_xx_norm(sigma: np.ndarray, d: int) -> float:
    sigma = np.asarray(sigma, dtype=float)
    if sigma.shape != (2 * d, 2 * d):
        raise ValueError(f"covariance must be {2 * d}x{2 * d}")
    return float(np.linalg.eigvalsh(sigma[:d, :d]).max())


def lemma_bound_quantum(sigma, model: HamiltonianModel, hbar: float,
                        d: int) -> float:
    """Trace-norm bound sqrt(5 d^3/3) J3 ||sigma_xx||^(3/2) / hbar."""
    norm = _sigma_xx_norm(sigma, d)
    return math.sqrt(5.0 * d**3 / 3.0) * model.sup3 * norm**1.5 / hbar


def lemma_bound_classical(sigma, model: HamiltonianModel, hbar: float,
                          d: int) -> float:
    """L1-norm bound sqrt(3 d^3) J3 ||sigma_xx||^(3/2) / hbar."""
    norm = _sigma_xx_norm(sigma, d)
    return math.sqrt(3.0 * d**3) * model.sup3 * norm**1.5 / hbar


def main_text_mu(sigma, model: HamiltonianModel, hbar: float,
                 d: int) -> float:
    """Single constant mu = sqrt(3) d^(3/2) J3 ||sigma_xx||^(3/2) / hbar.

    Equals the classical bound and dominates the quantum one (their ratio
    is sqrt(9/5) independent of inputs).
    """
    return lemma_bound_classical(sigma, model, hbar, d)


def _check_coverage(center: float, width: float, lo: float, hi: float,
                    what: str):
    if center - 6.0 * width < lo or center + 6.0 * width > hi:
        raise ValueError(f"grid does not cover the Gaussian in {what}: "
                         f"need {center} +- {6 * width:.3g} inside "
                         f"[{lo:.3g}, {hi:.3g}]")


def _residual_gradient(model: HamiltonianModel, a_x: float, x: np.ndarray):
    """V'(x) minus the gradient of the quadratic expansion about a_x."""
    quad = harmonic_expansion(model, a_x)
    return model.potential.grad(x) - (quad.gradient
                                      + quad.hessian * (x - quad.base_point))


def numeric_harmonic_error_quantum(alpha, sigma, model: HamiltonianModel,
                                   hbar: float, grid: np.ndarray) -> float:
    """Trace norm of the residual generator on a pure Gaussian (d = 1).

    Builds dV = V - V_quad on the position grid, forms the commutator term
    -(i/hbar) [dV, tau] for the pure Gaussian tau, and returns the sum of
    the absolute eigenvalues (trace norm with the grid measure).
    """
    alpha = np.asarray(alpha, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if sigma.shape != (2, 2):
        raise ValueError("numeric check is implemented for d = 1 only")
    x = np.asarray(grid, dtype=float)
    dx = x[1] - x[0]
    _check_coverage(alpha[0], math.sqrt(sigma[0, 0]), x[0], x[-1], "x")

    quad = harmonic_expansion(model, alpha[0])
    dv = model.potential.value(x) - quad(x)
    # pure Gaussian wave function with position covariance sigma_xx and
    # position-momentum correlation sigma_xp
    u = x - alpha[0]
    psi = np.exp(-u**2 * (1.0 - 2.0j * sigma[0, 1] / hbar)
                 / (4.0 * sigma[0, 0]) + 1j * alpha[1] * u / hbar)
    psi /= math.sqrt((np.abs(psi) ** 2).sum() * dx)
    tau = np.outer(psi, psi.conj())
    comm = (-1j / hbar) * (dv[:, None] - dv[None, :]) * tau
    return float(np.abs(np.linalg.eigvalsh(comm * dx)).sum())


def numeric_harmonic_error_classical(alpha, sigma, model: HamiltonianModel,
                                     grid) -> float:
    """L1 norm of the residual generator on a Gaussian phase density (d=1).

    The residual is tau * (sigma^-1 beta)_p * dV'(x) with dV' the gradient
    mismatch of the quadratic expansion; `grid` is an (x, p) pair of
    cell-centered axes.
    """
    alpha = np.asarray(alpha, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if sigma.shape != (2, 2):
        raise ValueError("numeric check is implemented for d = 1 only")
    x, p = (np.asarray(g, dtype=float) for g in grid)
    _check_coverage(alpha[0], math.sqrt(sigma[0, 0]), x[0], x[-1], "x")
    _check_coverage(alpha[1], math.sqrt(sigma[1, 1]), p[0], p[-1], "p")

    beta = np.stack(np.meshgrid(x - alpha[0], p - alpha[1], indexing="ij"),
                    axis=-1)
    tau = gaussian_pdf(beta, sigma)
    inv = np.linalg.inv(sigma)
    lever_p = beta @ inv[1]
    dv_grad = _residual_gradient(model, alpha[0], x)
    integrand = tau * lever_p * dv_grad[:, None]
    cell = (x[1] - x[0]) * (p[1] - p[0])
    return float(np.abs(integrand).sum() * cell)


@dataclass
class HarmonicErrorReport:
    """Bounds, numerics, and their ratios for one (alpha, sigma, model)."""

    alpha: np.ndarray
    sigma: np.ndarray
    hbar: float
    potential: str
    bound_quantum: float
    bound_classical: float
    mu: float
    numeric_quantum: float
    numeric_classical: float

    @property
    def ratio_quantum(self) -> float:
        return self.numeric_quantum / self.bound_quantum \
            if self.bound_quantum > 0 else 0.0

    @property
    def ratio_classical(self) -> float:
        return self.numeric_classical / self.bound_classical \
            if self.bound_classical > 0 else 0.0

    def validate(self, tol: float = 0.05):
        """Numerics must not exceed the bounds beyond discretization tol."""
        if self.numeric_quantum > self.bound_quantum * (1.0 + tol) + 1e-12:
            raise ValueError("quantum numeric error exceeds the bound: "
                             f"{self.numeric_quantum} > {self.bound_quantum}")
        if self.numeric_classical > self.bound_classical * (1.0 + tol) + 1e-12:
            raise ValueError("classical numeric error exceeds the bound: "
                             f"{self.numeric_classical} > "
                             f"{self.bound_classical}")


def harmonic_error_report(alpha, sigma, model: HamiltonianModel, hbar: float,
                          x_grid, p_grid) -> HarmonicErrorReport:
    """Evaluate both bounds and both numerics on the supplied grids."""
    rep = HarmonicErrorReport(
        alpha=np.asarray(alpha, dtype=float),
        sigma=np.asarray(sigma, dtype=float),
        hbar=float(hbar),
        potential=type(model.potential).__name__,
        bound_quantum=lemma_bound_quantum(sigma, model, hbar, 1),
        bound_classical=lemma_bound_classical(sigma, model, hbar, 1),
        mu=main_text_mu(sigma, model, hbar, 1),
        numeric_quantum=numeric_harmonic_error_quantum(alpha, sigma, model,
                                                       hbar, x_grid),
        numeric_classical=numeric_harmonic_error_classical(
            alpha, sigma, model, (x_grid, p_grid)),
    )
    rep.validate()
    return rep
