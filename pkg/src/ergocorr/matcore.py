"""Dense complex matrix helpers and a cyclic complex Jacobi eigensolver.

Matrices are plain ``numpy.ndarray`` objects of dtype ``complex128`` stored
row-major. Dimensions are desk scale (at most 64).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NegativeEigenvalue, NoConvergence, NotHermitian

HERMITIAN_TOL = 1e-12
OFFDIAG_TOL = 1e-13
MAX_SWEEPS = 100
MAX_DIM = 64
LOG_CUTOFF = 1e-14
PHASE_TOL = 1e-12


@dataclass(frozen=True)
class HermitianEig:
    """Spectrum (ascending) and column-orthonormal eigenvectors."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def as_matrix(m) -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {a.shape}")
    return a


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(m).T


def hermiticity_error(m: np.ndarray) -> float:
    return float(np.max(np.abs(m - dagger(m)))) if m.size else 0.0


def is_hermitian(m, tol: float = HERMITIAN_TOL) -> bool:
    a = as_matrix(m)
    return hermiticity_error(a) <= tol * max(1.0, float(np.max(np.abs(a), initial=0.0)))


def check_hermitian(m, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Validate and return the exactly symmetrised matrix ``(m + m^dagger)/2``."""
    a = as_matrix(m)
    if not is_hermitian(a, tol):
        raise NotHermitian(f"max |M - M^dagger| = {hermiticity_error(a):.3e} exceeds {tol:.1e}")
    return 0.5 * (a + dagger(a))


def expect(h: np.ndarray, rho: np.ndarray) -> float:
    """Tr(h rho) for Hermitian arguments, returned as a real number."""
    return float(np.real(np.sum(h * rho.T)))


def kron(a, b) -> np.ndarray:
    """Kronecker product; row index of the result is ``i * dim_b + j``."""
    return np.kron(as_matrix(a), as_matrix(b))


def _fix_phases(v: np.ndarray) -> np.ndarray:
    for k in range(v.shape[1]):
        col = v[:, k]
        nz = np.nonzero(np.abs(col) > PHASE_TOL)[0]
        if nz.size:
            z = col[nz[0]]
            v[:, k] = col * (abs(z) / z)
            v[nz[0], k] = abs(z)
    return v


def hermitian_eig(m, *, tol: float = OFFDIAG_TOL, max_sweeps: int = MAX_SWEEPS) -> HermitianEig:
    """Diagonalise a Hermitian matrix with cyclic complex Jacobi rotations.

    Each rotation is a 2x2 unitary ``[[c, s], [-s e^{-i phi}, c e^{-i phi}]]``
    that zeroes the (p, q) element, where ``phi`` is the phase of ``m[p, q]``.
    Sweeps stop once the off-diagonal Frobenius norm drops below
    ``tol * max(1, ||m||_F)``.

    Eigenvalues are returned ascending (stable sort); the first component of
    each eigenvector above 1e-12 in modulus is made real positive.

    Raises
    ------
    NotHermitian
        If ``max |m - m^dagger|`` exceeds the symmetry tolerance.
    NoConvergence
        If ``max_sweeps`` sweeps do not reach the off-diagonal tolerance.
    """
    a = check_hermitian(m).copy()
    n = a.shape[0]
    if n > MAX_DIM:
        raise DimensionMismatch(f"dimension {n} exceeds the supported maximum {MAX_DIM}")
    v = np.eye(n, dtype=complex)
    threshold = tol * max(1.0, float(np.linalg.norm(a)))
    pairs = [(p, q) for p in range(n) for q in range(p + 1, n)]
    offdiag = ~np.eye(n, dtype=bool)

    for _ in range(max_sweeps + 1):
        off = float(np.linalg.norm(a[offdiag]))
        if off < threshold:
            break
        for p, q in pairs:
            apq = a[p, q]
            mod = abs(apq)
            if mod == 0.0:
                continue
            app = a[p, p].real
            aqq = a[q, q].real
            theta = (aqq - app) / (2.0 * mod)
            t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
            if theta < 0.0:
                t = -t
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = t * c
            ph = np.conj(apq) / mod
            j = np.array([[c, s], [-s * ph, c * ph]])
            idx = [p, q]
            a[:, idx] = a[:, idx] @ j
            a[idx, :] = dagger(j) @ a[idx, :]
            a[p, q] = a[q, p] = 0.0
            a[p, p] = app - t * mod
            a[q, q] = aqq + t * mod
            v[:, idx] = v[:, idx] @ j
    else:
        raise NoConvergence(f"Jacobi eigensolver did not converge in {max_sweeps} sweeps")

    w = np.real(np.diag(a)).copy()
    order = np.argsort(w, kind="stable")
    return HermitianEig(w[order], _fix_phases(v[:, order]))


def eigvalsh(m) -> np.ndarray:
    return hermitian_eig(m).eigenvalues


def matrix_log_on_support(m, *, cutoff: float = LOG_CUTOFF) -> tuple[np.ndarray, np.ndarray]:
    """Logarithm of a PSD matrix restricted to its support.

    Returns ``(log_m, support)`` where ``log_m = V diag(ln l_k if l_k > cutoff
    else 0) V^dagger`` and ``support`` is the projector onto eigenvectors with
    ``l_k > cutoff``.
    """
    eig = hermitian_eig(m)
    lam = eig.eigenvalues
    if lam.size and lam[0] < -HERMITIAN_TOL:
        raise NegativeEigenvalue(f"smallest eigenvalue {lam[0]:.3e} is negative")
    keep = lam > cutoff
    logs = np.zeros_like(lam)
    logs[keep] = np.log(lam[keep])
    v = eig.eigenvectors
    return (v * logs) @ dagger(v), (v[:, keep]) @ dagger(v[:, keep])
