"""Angle parametrisation of local orthonormal bases.

A basis of C^d is ``ref @ U(x)`` with ``U(x)`` the ordered product of complex
Givens rotations over all pairs ``i < j``, each carrying a polar angle
``theta in [0, pi]`` and an azimuth ``phi in [0, 2 pi)``. For ``d = 2`` the
first column is the Bloch vector ``(cos(theta/2), e^{i phi} sin(theta/2))``.
Column phases are irrelevant for rank-one projectors, so ``d (d - 1)`` angles
cover every basis.
"""

from __future__ import annotations

import cmath
import math
from functools import lru_cache

import numpy as np
from scipy.special import entr

MAX_LOCAL_DIM = 4


@lru_cache(maxsize=None)
def pairs(d: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(d) for j in range(i + 1, d)]


def n_angles(d: int) -> int:
    return d * (d - 1)


def givens_product(x: np.ndarray, d: int) -> np.ndarray:
    """Unitaries for a batch of angle vectors; ``x`` has shape ``(..., d(d-1))``."""
    x = np.asarray(x, dtype=float)
    batch = x.shape[:-1]
    u = np.broadcast_to(np.eye(d, dtype=complex), batch + (d, d)).copy()
    for k, (i, j) in enumerate(pairs(d)):
        theta = x[..., 2 * k]
        phi = x[..., 2 * k + 1]
        c = np.cos(theta / 2)
        s = np.sin(theta / 2)
        e = np.exp(1j * phi)
        ui = u[..., :, i].copy()
        uj = u[..., :, j]
        # columns (i, j) <- (i, j) @ [[c, -conj(e) s], [e s, c]]
        u[..., :, i] = ui * c[..., None] + uj * (e * s)[..., None]
        u[..., :, j] = -ui * (np.conj(e) * s)[..., None] + uj * c[..., None]
    return u


def qubit_basis(theta: float, phi: float) -> np.ndarray:
    c, s, e = math.cos(theta / 2), math.sin(theta / 2), cmath.exp(1j * phi)
    return np.array([[c, -e.conjugate() * s], [e * s, c]])


def givens_single(x, d: int) -> np.ndarray:
    """Unbatched ``givens_product``; the optimizers' hot path."""
    if d == 2:
        return qubit_basis(x[0], x[1])
    # columns as Python lists: far cheaper than numpy slicing at these sizes
    cols = [[1.0 + 0j if r == c else 0j for r in range(d)] for c in range(d)]
    for k, (i, j) in enumerate(pairs(d)):
        c = math.cos(x[2 * k] / 2)
        s = math.sin(x[2 * k] / 2)
        e = cmath.exp(1j * x[2 * k + 1])
        es, ecs = e * s, -e.conjugate() * s
        ui, uj = cols[i], cols[j]
        cols[i] = [c * a + es * b for a, b in zip(ui, uj)]
        cols[j] = [ecs * a + c * b for a, b in zip(ui, uj)]
    return np.array(cols).T


def kron_batched(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``kron`` of the last two axes, broadcasting over leading axes."""
    da, db = a.shape[-1], b.shape[-1]
    out = a[..., :, None, :, None] * b[..., None, :, None, :]
    return out.reshape(out.shape[:-4] + (da * db, da * db))


def random_angles(rng: np.random.Generator, shape, d: int) -> np.ndarray:
    shape = tuple(np.atleast_1d(shape)) if shape != () else ()
    n = n_angles(d)
    x = np.empty(shape + (n,))
    x[..., 0::2] = np.arccos(rng.uniform(-1.0, 1.0, shape + (n // 2,)))
    x[..., 1::2] = rng.uniform(0.0, 2 * np.pi, shape + (n // 2,))
    return x


def shannon(p: np.ndarray, axis=None) -> np.ndarray:
    """Shannon entropy in nats with ``0 ln 0 = 0``; tiny negative entries are clipped."""
    return np.sum(entr(np.clip(p, 0.0, None)), axis=axis)


class ProductBasisMap:
    """Evaluates product-basis dephasing of a fixed matrix for angle vectors.

    ``ref_a``/``ref_b`` are the bases reached at zero angles.
    """

    def __init__(self, rho: np.ndarray, d_a: int, d_b: int, ref_a=None, ref_b=None):
        self.rho = np.asarray(rho, dtype=complex)
        self.d_a = d_a
        self.d_b = d_b
        self.ref_a = np.eye(d_a, dtype=complex) if ref_a is None else np.asarray(ref_a, dtype=complex)
        self.ref_b = np.eye(d_b, dtype=complex) if ref_b is None else np.asarray(ref_b, dtype=complex)
        self.na = n_angles(d_a)
        self.nb = n_angles(d_b)

    @property
    def n(self) -> int:
        return self.na + self.nb

    def bases(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            return (
                self.ref_a @ givens_single(x[: self.na], self.d_a),
                self.ref_b @ givens_single(x[self.na :], self.d_b),
            )
        return (
            self.ref_a @ givens_product(x[..., : self.na], self.d_a),
            self.ref_b @ givens_product(x[..., self.na :], self.d_b),
        )

    def product(self, x: np.ndarray) -> np.ndarray:
        ba, bb = self.bases(x)
        return kron_batched(ba, bb)

    def diag_in(self, m: np.ndarray, w: np.ndarray) -> np.ndarray:
        """Real diagonal of ``w^dagger m w`` (batched over leading axes of ``w``)."""
        return np.real(np.sum(np.conj(w) * (m @ w), axis=-2))

    def probabilities(self, x: np.ndarray) -> np.ndarray:
        return self.diag_in(self.rho, self.product(x))

    def entropy(self, x: np.ndarray) -> float:
        p = self.probabilities(x)
        return float(np.sum(entr(np.maximum(p, 0.0))))
