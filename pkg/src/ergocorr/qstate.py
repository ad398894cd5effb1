"""Bipartite states, Hamiltonians, classical states and structural maps.

Subsystem ordering follows ``numpy.kron``: the joint index of ``|i>_A |j>_B``
is ``i * d_b + j``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, InvalidState, NotPure, ValidationError
from .matcore import as_matrix, check_hermitian, dagger, hermitian_eig

STATE_TOL = 1e-10
BASIS_TOL = 1e-10
PURITY_TOL = 1e-9
PROB_TOL = 1e-12


def _check_dims(d_a: int, d_b: int) -> None:
    if int(d_a) != d_a or int(d_b) != d_b or d_a < 1 or d_b < 1:
        raise InvalidState(f"subsystem dimensions must be positive integers, got ({d_a}, {d_b})")


@dataclass(frozen=True)
class BipartiteState:
    rho: np.ndarray
    d_a: int
    d_b: int

    def __post_init__(self):
        _check_dims(self.d_a, self.d_b)
        rho = as_matrix(self.rho)
        if rho.shape[0] != self.d_a * self.d_b:
            raise DimensionMismatch(
                f"rho has dimension {rho.shape[0]}, expected d_a * d_b = {self.d_a * self.d_b}"
            )
        rho = check_hermitian(rho, STATE_TOL)
        tr = float(np.real(np.trace(rho)))
        if abs(tr - 1.0) > STATE_TOL:
            raise InvalidState(f"trace of rho is {tr!r}, expected 1")
        lam_min = hermitian_eig(rho).eigenvalues[0]
        if lam_min < -STATE_TOL:
            raise InvalidState(f"rho has a negative eigenvalue {lam_min:.3e}")
        object.__setattr__(self, "rho", rho)

    @property
    def dim(self) -> int:
        return self.d_a * self.d_b

    @classmethod
    def from_ket(cls, psi, d_a: int, d_b: int) -> "BipartiteState":
        psi = np.asarray(psi, dtype=complex).ravel()
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()), d_a, d_b)


@dataclass(frozen=True)
class BipartiteHamiltonian:
    """Either ``H_A x 1 + 1 x H_B`` (non-interacting) or a general Hermitian ``H``.

    Use the ``non_interacting`` and ``general`` constructors.
    """

    kind: str
    total: np.ndarray
    d_a: int
    d_b: int
    h_a: np.ndarray | None = None
    h_b: np.ndarray | None = None

    @classmethod
    def non_interacting(cls, h_a, h_b) -> "BipartiteHamiltonian":
        h_a = check_hermitian(h_a)
        h_b = check_hermitian(h_b)
        d_a, d_b = h_a.shape[0], h_b.shape[0]
        total = np.kron(h_a, np.eye(d_b)) + np.kron(np.eye(d_a), h_b)
        return cls("non_interacting", total, d_a, d_b, h_a, h_b)

    @classmethod
    def general(cls, h, d_a: int, d_b: int) -> "BipartiteHamiltonian":
        _check_dims(d_a, d_b)
        h = check_hermitian(h)
        if h.shape[0] != d_a * d_b:
            raise DimensionMismatch(f"H has dimension {h.shape[0]}, expected {d_a * d_b}")
        return cls("general", h, d_a, d_b)

    @property
    def is_interacting(self) -> bool:
        return self.kind != "non_interacting"

    @property
    def local_spectra(self) -> tuple[np.ndarray, np.ndarray]:
        if self.is_interacting:
            raise ValidationError("local spectra are only defined for non-interacting Hamiltonians")
        return hermitian_eig(self.h_a).eigenvalues, hermitian_eig(self.h_b).eigenvalues


def check_basis(b, name: str = "basis") -> np.ndarray:
    b = as_matrix(b)
    err = np.max(np.abs(dagger(b) @ b - np.eye(b.shape[0])))
    if err > BASIS_TOL:
        raise ValidationError(f"{name} is not orthonormal (max |B^dagger B - 1| = {err:.2e})")
    return b


@dataclass(frozen=True)
class LocalBasisPair:
    """Orthonormal bases of A and B stored as columns."""

    basis_a: np.ndarray
    basis_b: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "basis_a", check_basis(self.basis_a, "basis_a"))
        object.__setattr__(self, "basis_b", check_basis(self.basis_b, "basis_b"))

    @classmethod
    def computational(cls, d_a: int, d_b: int) -> "LocalBasisPair":
        return cls(np.eye(d_a, dtype=complex), np.eye(d_b, dtype=complex))

    @property
    def product(self) -> np.ndarray:
        return np.kron(self.basis_a, self.basis_b)


@dataclass(frozen=True)
class ClassicalState:
    """``sum_ij p_ij |a_i><a_i| x |b_j><b_j|`` kept as a probability table plus bases."""

    p: np.ndarray
    bases: LocalBasisPair
    flags: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        if p.shape != (self.bases.basis_a.shape[0], self.bases.basis_b.shape[0]):
            raise DimensionMismatch(f"probability table shape {p.shape} does not match the bases")
        if p.min() < -PROB_TOL or abs(p.sum() - 1.0) > PROB_TOL:
            raise InvalidState("p must be a normalised non-negative table")
        object.__setattr__(self, "p", np.clip(p, 0.0, None))

    @property
    def d_a(self) -> int:
        return self.p.shape[0]

    @property
    def d_b(self) -> int:
        return self.p.shape[1]

    @property
    def matrix(self) -> np.ndarray:
        w = self.bases.product
        return (w * self.p.ravel()) @ dagger(w)

    def as_state(self) -> BipartiteState:
        return BipartiteState(self.matrix, self.d_a, self.d_b)

    @property
    def spectrum(self) -> np.ndarray:
        return np.sort(self.p.ravel())[::-1]

    @property
    def marginals(self) -> tuple[np.ndarray, np.ndarray]:
        return self.p.sum(axis=1), self.p.sum(axis=0)


def _split(rho: np.ndarray, d_a: int, d_b: int) -> np.ndarray:
    return rho.reshape(d_a, d_b, d_a, d_b)


def partial_trace(s: BipartiteState, keep: str = "A") -> np.ndarray:
    t = _split(s.rho, s.d_a, s.d_b)
    if keep.upper() == "A":
        return np.einsum("ijkj->ik", t)
    if keep.upper() == "B":
        return np.einsum("ijil->jl", t)
    raise ValueError(f"keep must be 'A' or 'B', got {keep!r}")


def marginals(s: BipartiteState) -> tuple[np.ndarray, np.ndarray]:
    return partial_trace(s, "A"), partial_trace(s, "B")


def product_of_marginals(s: BipartiteState) -> BipartiteState:
    rho_a, rho_b = marginals(s)
    return BipartiteState(np.kron(rho_a, rho_b), s.d_a, s.d_b)


def dephased_probabilities(rho: np.ndarray, basis_a: np.ndarray, basis_b: np.ndarray) -> np.ndarray:
    """``p_ij = <a_i b_j| rho |a_i b_j>`` without validation (hot path)."""
    d_a, d_b = basis_a.shape[0], basis_b.shape[0]
    t = _split(rho, d_a, d_b)
    x = np.einsum("ai,abcd,ci->ibd", basis_a.conj(), t, basis_a)
    return np.real(np.einsum("bj,ibd,dj->ij", basis_b.conj(), x, basis_b))


def dephase_by_product_basis(s: BipartiteState, bases: LocalBasisPair) -> ClassicalState:
    p = dephased_probabilities(s.rho, bases.basis_a, bases.basis_b)
    return ClassicalState(np.clip(p, 0.0, None) / p.sum(), bases)


def schmidt_decompose(s: BipartiteState) -> tuple[np.ndarray, LocalBasisPair]:
    """Schmidt weights ``p_i`` (squared coefficients, descending) and local bases.

    The returned bases are completed to full orthonormal bases of A and B;
    the first ``min(d_a, d_b)`` columns carry the Schmidt vectors.
    """
    eig = hermitian_eig(s.rho)
    if eig.eigenvalues[-1] < 1.0 - PURITY_TOL:
        raise NotPure(f"largest eigenvalue {eig.eigenvalues[-1]:.12f} is below 1 - {PURITY_TOL}")
    psi = eig.eigenvectors[:, -1].reshape(s.d_a, s.d_b)
    u, sv, vh = np.linalg.svd(psi)
    weights = sv**2
    weights = weights / weights.sum()
    # psi_ij = sum_k s_k u_ik vh_kj, so the B vectors are the rows of vh
    return weights, LocalBasisPair(u, vh.T)


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based (Philox) generator; identical seeds give identical streams."""
    return np.random.Generator(np.random.Philox(int(seed)))


def random_state(d_a: int, d_b: int, rank: int | None, rng: np.random.Generator) -> BipartiteState:
    """Ginibre-induced random density matrix ``G G^dagger / Tr`` with ``G`` of shape ``(d, rank)``."""
    d = d_a * d_b
    rank = d if rank is None else rank
    g = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
    rho = g @ dagger(g)
    return BipartiteState(rho / np.real(np.trace(rho)), d_a, d_b)


def random_pure_state(d_a: int, d_b: int, rng: np.random.Generator) -> BipartiteState:
    return random_state(d_a, d_b, 1, rng)


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary from the phase-corrected QR of a Ginibre matrix."""
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def random_simplex(shape, rng: np.random.Generator) -> np.ndarray:
    """Flat Dirichlet sample via normalised standard exponentials."""
    x = rng.standard_exponential(shape)
    return x / x.sum()


def random_classical(d_a: int, d_b: int, rng: np.random.Generator) -> ClassicalState:
    return ClassicalState(random_simplex((d_a, d_b), rng), LocalBasisPair.computational(d_a, d_b))


def random_local_spectra(d: int, rng: np.random.Generator) -> np.ndarray:
    return np.sort(rng.uniform(0.0, 1.0, d))


def local_unitary(s: BipartiteState, u_a: np.ndarray, u_b: np.ndarray) -> BipartiteState:
    u = np.kron(u_a, u_b)
    return BipartiteState(u @ s.rho @ dagger(u), s.d_a, s.d_b)
