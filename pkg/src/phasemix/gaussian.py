"""Gaussian-state and symplectic-matrix primitives.

Conventions: phase-space vectors are ordered (x_1..x_d, p_1..p_d); the
symplectic form is Omega = [[0, I], [-I, 0]].  A covariance matrix sigma
belongs to a pure Gaussian state iff (2/hbar)*sigma is symplectic, in which
case its eigenvalues come in pairs (lam, (hbar/2)^2 / lam).
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

__all__ = [
    "symplectic_form",
    "GaussianState",
    "is_pure_gaussian",
    "purity_defect",
    "nts_check",
    "nts_eigenvalues",
    "covariance_eigen_pairs",
    "gaussian_moment",
    "gaussian_moment4",
    "gaussian_moment6",
    "gaussian_pdf",
    "gaussian_derivative_residual",
    "random_symplectic",
    "random_pure_cov",
    "sigma_star",
]


def symplectic_form(d: int) -> np.ndarray:
    """The 2d x 2d antisymmetric form Omega with Omega^2 = -I."""
    eye = np.eye(d)
    zero = np.zeros((d, d))
    omega = np.block([[zero, eye], [-eye, zero]])
    # construction-time sanity assertions
    assert np.array_equal(omega @ omega, -np.eye(2 * d))
    assert np.array_equal(omega.T, -omega)
    return omega


def sigma_star(a_H: float, hbar: float, d: int = 1) -> np.ndarray:
    """Coherent-state covariance: diag(hbar/(2 a_H) I, hbar a_H / 2 I)."""
    return np.diag(np.concatenate([np.full(d, hbar / (2.0 * a_H)),
                                   np.full(d, hbar * a_H / 2.0)]))


def _check_symmetric(cov: np.ndarray, rtol: float = 1e-12) -> None:
    scale = max(np.abs(cov).max(), 1e-300)
    if np.abs(cov - cov.T).max() > rtol * scale * 10:
        raise ValueError("covariance matrix is not symmetric")


@dataclass
class GaussianState:
    """A Gaussian state: phase-space mean plus 2d x 2d covariance matrix."""

    mean: np.ndarray
    cov: np.ndarray
    hbar: float = 1.0

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=float)
        self.cov = np.asarray(self.cov, dtype=float)
        if self.mean.ndim != 1 or self.mean.size % 2:
            raise ValueError("mean must be a 2d-vector (x block then p block)")
        if self.cov.shape != (self.mean.size, self.mean.size):
            raise ValueError("covariance shape does not match mean")
        if self.hbar <= 0:
            raise ValueError("hbar must be positive")
        _check_symmetric(self.cov)
        if np.linalg.eigvalsh(self.cov).min() <= 0:
            raise ValueError("covariance must be positive definite")

    @property
    def d(self) -> int:
        return self.mean.size // 2

    def is_pure(self, tol: float = 1e-8) -> bool:
        return is_pure_gaussian(self.cov, self.hbar, tol)


def purity_defect(cov: np.ndarray, hbar: float) -> float:
    """Max-norm deviation of (2 cov/hbar) from the symplectic condition."""
    cov = np.asarray(cov, dtype=float)
    _check_symmetric(cov)
    d = cov.shape[0] // 2
    omega = symplectic_form(d)
    a = 2.0 * cov / hbar
    return np.abs(a.T @ omega @ a - omega).max()


def is_pure_gaussian(cov: np.ndarray, hbar: float, tol: float = 1e-8) -> bool:
    """True iff cov is the covariance of a pure Gaussian state."""
    return purity_defect(cov, hbar) <= tol


def _whitened(cov: np.ndarray, sig_star: np.ndarray) -> np.ndarray:
    w = 1.0 / np.sqrt(np.diag(sig_star))
    return cov * np.outer(w, w)


def nts_eigenvalues(cov: np.ndarray, sig_star: np.ndarray) -> np.ndarray:
    """Eigenvalues of the whitened covariance sigma*^(-1/2) cov sigma*^(-1/2)."""
    return np.linalg.eigvalsh(_whitened(np.asarray(cov, float), sig_star))


def nts_check(cov: np.ndarray, sig_star: np.ndarray, z: float,
              tol: float = 1e-9) -> bool:
    """Not-too-squeezed test: z^-1 sigma* <= cov <= z sigma*.

    Tested via the spectrum of the whitened matrix, which is basis
    independent; `tol` is absolute on the eigenvalues.
    """
    if z < 1.0:
        raise ValueError("squeeze bound z must be >= 1")
    lam = nts_eigenvalues(cov, sig_star)
    return lam.min() >= 1.0 / z - tol and lam.max() <= z + tol


def covariance_eigen_pairs(cov: np.ndarray, hbar: float,
                           rtol: float = 1e-10):
    """Eigenvalues of a pure covariance, matched into (lam, lam') pairs.

    Each pair multiplies to (hbar/2)^2.  Raises for impure covariances,
    reporting the worst-paired eigenvalue.
    """
    cov = np.asarray(cov, dtype=float)
    lam = np.sort(np.linalg.eigvalsh(cov))
    n = lam.size
    target = (hbar / 2.0) ** 2
    pairs = [(lam[i], lam[n - 1 - i]) for i in range(n // 2)]
    bad = max(pairs, key=lambda ab: abs(ab[0] * ab[1] / target - 1.0))
    if abs(bad[0] * bad[1] / target - 1.0) > rtol:
        raise ValueError(
            f"covariance is not pure: eigenvalue pair {bad} multiplies to "
            f"{bad[0] * bad[1]:.6g}, expected {target:.6g}")
    return pairs


def gaussian_moment(cov: np.ndarray, a: np.ndarray) -> float:
    """< beta^T A beta > under a centered Gaussian: Tr[sigma A]."""
    _check_dims(cov, a)
    return float(np.trace(cov @ a))


def gaussian_moment4(cov: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    """< (b^T A b)(b^T B b) > = Tr[sA]Tr[sB] + 2 Tr[sAsB]."""
    _check_dims(cov, a, b)
    sa, sb = cov @ a, cov @ b
    return float(np.trace(sa) * np.trace(sb) + 2.0 * np.trace(sa @ sb))


def gaussian_moment6(cov: np.ndarray, a: np.ndarray, b: np.ndarray,
                     c: np.ndarray) -> float:
    """Sixth moment of three quadratic forms under a centered Gaussian."""
    _check_dims(cov, a, b, c)
    sa, sb, sc = cov @ a, cov @ b, cov @ c
    ta, tb, tc = np.trace(sa), np.trace(sb), np.trace(sc)
    return float(
        ta * tb * tc
        + 2.0 * (ta * np.trace(sb @ sc)
                 + tb * np.trace(sc @ sa)
                 + tc * np.trace(sb @ sa))
        + 8.0 * np.trace(sa @ sb @ sc))


def _check_dims(cov, *mats):
    cov = np.asarray(cov)
    for m in mats:
        if np.asarray(m).shape != cov.shape:
            raise ValueError("matrix dimensions do not match covariance")


def gaussian_pdf(beta: np.ndarray, cov: np.ndarray) -> np.ndarray:
    """Centered Gaussian density at rows of beta (shape (..., 2d))."""
    cov = np.asarray(cov, dtype=float)
    n = cov.shape[0]
    inv = np.linalg.inv(cov)
    det = np.linalg.det(cov)
    q = np.einsum("...a,ab,...b->...", beta, inv, beta)
    return np.exp(-0.5 * q) / ((2.0 * np.pi) ** (n / 2.0) * np.sqrt(det))


def gaussian_derivative_residual(state: GaussianState, a: int, b: int,
                                 h: float) -> float:
    """Residual of the identity d_a d_b tau = 2 d/d(sigma_ab) tau.

    Both sides are evaluated with central finite differences on a probe grid
    around the mean; the return value is the max absolute mismatch, which is
    O(h^2) for valid h.  Warns (via ValueError on caller request) when h is
    too large relative to the covariance.
    """
    cov = state.cov
    n = cov.shape[0]
    lam_min = np.linalg.eigvalsh(cov).min()
    if h > 0.3 * np.sqrt(lam_min):
        import warnings

        warnings.warn("finite-difference step h is large relative to the "
                      "narrowest covariance direction; residual may not "
                      "shrink under h -> h/2")
    rng = np.random.default_rng(7)
    probes = rng.normal(size=(24, n)) * np.sqrt(np.diag(cov))

    def tau(beta, sig):
        return gaussian_pdf(beta, sig)

    ea = np.zeros(n)
    ea[a] = 1.0
    eb = np.zeros(n)
    eb[b] = 1.0

    # lhs: mixed second derivative in beta
    if a == b:
        lhs = (tau(probes + h * ea, cov) - 2.0 * tau(probes, cov)
               + tau(probes - h * ea, cov)) / h**2
    else:
        lhs = (tau(probes + h * (ea + eb), cov)
               - tau(probes + h * (ea - eb), cov)
               - tau(probes - h * (ea - eb), cov)
               + tau(probes - h * (ea + eb), cov)) / (4.0 * h**2)

    # rhs: 2 d tau / d sigma_ab for independent matrix entries.  Only
    # symmetric perturbations are admissible, so perturb (a,b) and (b,a)
    # together; by symmetry of the extension that directional derivative
    # equals 2 d/d sigma_ab for a != b and 2 d/d sigma_aa on the diagonal,
    # i.e. exactly the right-hand side of the identity in both cases.
    hs = h**2  # step carries units of covariance
    dsig = np.zeros((n, n))
    dsig[a, b] += 1.0
    dsig[b, a] += 1.0
    rhs = (tau(probes, cov + hs * dsig) - tau(probes, cov - hs * dsig)) / (2.0 * hs)
    return float(np.abs(lhs - rhs).max())


def random_symplectic(d: int, rng: np.random.Generator,
                      scale: float = 0.5) -> np.ndarray:
    """Random symplectic matrix exp(Omega S) with S random symmetric."""
    omega = symplectic_form(d)
    s = rng.normal(size=(2 * d, 2 * d)) * scale
    s = 0.5 * (s + s.T)
    return expm(omega @ s)


def random_pure_cov(d: int, hbar: float, a_H: float,
                    rng: np.random.Generator, scale: float = 0.5) -> np.ndarray:
    """Random pure covariance S sigma* S^T with S symplectic."""
    s = random_symplectic(d, rng, scale)
    return s @ sigma_star(a_H, hbar, d) @ s.T


def project_symplectic_whitened(sig_t: np.ndarray, max_iter: int = 3,
                                tol: float = 1e-12):
    """Project a near-symplectic symmetric matrix onto the symplectic set.

    Uses the averaging iteration sig <- (sig + Omega^T sig^-1 Omega)/2, whose
    fixed points are exactly the symmetric positive symplectic matrices and
    which converges quadratically near the manifold.  For d = 1 this is
    equivalent to determinant normalization.  Returns (projected, defect
    before projection, displacement).
    """
    sig_t = np.asarray(sig_t, dtype=float)
    n = sig_t.shape[0]
    omega = symplectic_form(n // 2)
    before = np.abs(sig_t @ omega @ sig_t - omega).max()
    out = sig_t
    if n == 2:
        out = sig_t / np.sqrt(np.linalg.det(sig_t))
    else:
        for _ in range(max_iter):
            out = 0.5 * (out + omega.T @ np.linalg.inv(out) @ omega)
            if np.abs(out @ omega @ out - omega).max() < tol:
                break
    return out, before, np.abs(out - sig_t).max()
