"""Passive states, ergotropy and related energetic quantities.

Functions accept either raw matrices or `BipartiteState` / `BipartiteHamiltonian`
objects; the numeric work is always done on the dense matrices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .entropy import INFINITY, relative_entropy, von_neumann_entropy
from .errors import DimensionMismatch, EnergyMismatch, InteractingHamiltonian
from .matcore import as_matrix, dagger, expect, hermitian_eig
from .qstate import BipartiteHamiltonian, BipartiteState, ClassicalState, marginals, random_unitary

MAJORIZATION_TOL = 1e-10
ENERGY_MATCH_TOL = 1e-8
THERMAL_FIT_TOL = 1e-8


def _rho(x) -> np.ndarray:
    if isinstance(x, BipartiteState):
        return x.rho
    if isinstance(x, ClassicalState):
        return x.matrix
    return as_matrix(x)


def _ham(h) -> np.ndarray:
    return h.total if isinstance(h, BipartiteHamiltonian) else as_matrix(h)


def energy(rho, h) -> float:
    return expect(_ham(h), _rho(rho))


def energy_levels(h) -> np.ndarray:
    return hermitian_eig(_ham(h)).eigenvalues


def passive_energy(spectrum, levels) -> float:
    """``sum_k eps_k r_k`` with populations descending against ascending levels."""
    r = np.sort(np.asarray(spectrum, dtype=float))[::-1]
    return float(np.dot(np.sort(levels), r))


@dataclass(frozen=True)
class ErgotropyResult:
    ergotropy: float
    passive_state: np.ndarray
    energy_initial: float
    energy_passive: float
    extraction_unitary: np.ndarray
    spectrum: np.ndarray


def passive_state(rho, h) -> ErgotropyResult:
    """Passive state ``P = sum_k r_k |eps_k><eps_k|`` and the ergotropy ``E(rho) - E(P)``.

    The stored unitary ``U = sum_k |eps_k><r_k|`` satisfies ``P = U rho U^dagger``.
    Ties in either spectrum are broken by the stable sort of the eigensolver.
    """
    rho = _rho(rho)
    hm = _ham(h)
    if rho.shape != hm.shape:
        raise DimensionMismatch(f"state {rho.shape} and Hamiltonian {hm.shape} differ in dimension")
    eh = hermitian_eig(hm)
    er = hermitian_eig(rho)
    r = er.eigenvalues[::-1]
    vr = er.eigenvectors[:, ::-1]
    ve = eh.eigenvectors
    p = (ve * r) @ dagger(ve)
    u = ve @ dagger(vr)
    e0 = expect(hm, rho)
    ep = float(np.dot(eh.eigenvalues, r))
    return ErgotropyResult(e0 - ep, p, e0, ep, u, r)


def ergotropy(rho, h) -> float:
    return passive_state(rho, h).ergotropy


def classical_ergotropy(chi: ClassicalState, h) -> float:
    """Ergotropy of a classical state from its probability table (no eigensolve of the state)."""
    hm = _ham(h)
    w = chi.bases.product
    diag_h = np.real(np.sum(np.conj(w) * (hm @ w), axis=0))
    return float(np.dot(chi.p.ravel(), diag_h)) - passive_energy(chi.p.ravel(), energy_levels(hm))


class ThermalReference(NamedTuple):
    beta: float
    state: np.ndarray


def gibbs_state(h, beta: float) -> ThermalReference:
    eig = hermitian_eig(_ham(h))
    eps = eig.eigenvalues
    w = np.exp(-beta * (eps - eps[0]))
    w /= w.sum()
    v = eig.eigenvectors
    return ThermalReference(float(beta), (v * w) @ dagger(v))


def passive_gibbs_divergence(spectrum, levels, beta: float) -> float:
    """``S(P || rho_beta)`` computed from spectra: both operators share the energy eigenbasis."""
    r = np.sort(np.asarray(spectrum, dtype=float))[::-1]
    eps = np.sort(np.asarray(levels, dtype=float))
    logz = -beta * eps[0] + math.log(np.sum(np.exp(-beta * (eps - eps[0]))))
    log_g = -beta * eps - logz
    pos = r > 0
    return float(np.sum(r[pos] * (np.log(r[pos]) - log_g[pos])))


class IdentityResidual(NamedTuple):
    gap: float
    infinite_term: bool


def thermal_identity_gap(rho, eta, h, beta: float) -> IdentityResidual:
    """Residual of ``beta (Erg(rho) - Erg(eta)) = S(eta) - S(rho) - S(P_rho||g) + S(P_eta||g)``.

    ``g`` is the Gibbs state at inverse temperature ``beta``. The relative entropies
    are evaluated with matrix logarithms, independently of the spectral shortcut
    used elsewhere. Requires equal energies.
    """
    rho = _rho(rho)
    eta = _rho(eta)
    hm = _ham(h)
    e_rho, e_eta = expect(hm, rho), expect(hm, eta)
    if abs(e_rho - e_eta) > ENERGY_MATCH_TOL:
        raise EnergyMismatch(f"E(rho) = {e_rho!r} and E(eta) = {e_eta!r} differ")
    a = passive_state(rho, hm)
    b = passive_state(eta, hm)
    g = gibbs_state(hm, beta).state
    s_a = relative_entropy(a.passive_state, g)
    s_b = relative_entropy(b.passive_state, g)
    if s_a == INFINITY or s_b == INFINITY:
        return IdentityResidual(math.nan, True)
    lhs = beta * (a.ergotropy - b.ergotropy)
    rhs = von_neumann_entropy(eta) - von_neumann_entropy(rho) - s_a + s_b
    return IdentityResidual(abs(lhs - rhs), False)


def _local(h) -> tuple[np.ndarray, np.ndarray]:
    if not isinstance(h, BipartiteHamiltonian) or h.is_interacting:
        raise InteractingHamiltonian("a non-interacting BipartiteHamiltonian is required")
    return h.h_a, h.h_b


def ergotropic_gap(s: BipartiteState, h: BipartiteHamiltonian) -> float:
    h_a, h_b = _local(h)
    rho_a, rho_b = marginals(s)
    return ergotropy(s.rho, h) - ergotropy(rho_a, h_a) - ergotropy(rho_b, h_b)


def energy_dephasing(rho, h) -> np.ndarray:
    """Dephasing in the (deterministic) energy eigenbasis."""
    v = hermitian_eig(_ham(h)).eigenvectors
    d = np.real(np.sum(np.conj(v) * (_rho(rho) @ v), axis=0))
    return (v * d) @ dagger(v)


def is_degenerate(h, gap: float = 1e-9) -> bool:
    eps = energy_levels(h)
    return bool(eps.size > 1 and np.min(np.diff(eps)) < gap)


def coherence_contribution(rho, h) -> float:
    return ergotropy(rho, h) - ergotropy(energy_dephasing(rho, h), h)


def majorization_check(rho, eta, tol: float = MAJORIZATION_TOL) -> bool:
    """True when ``eta`` is majorised by ``rho`` (partial sums of descending spectra)."""
    r = np.cumsum(hermitian_eig(_rho(rho)).eigenvalues[::-1])
    q = np.cumsum(hermitian_eig(_rho(eta)).eigenvalues[::-1])
    if r.shape != q.shape:
        raise DimensionMismatch("spectra have different lengths")
    return bool(np.all(q <= r + tol))


def fit_thermal_beta(spectrum, levels) -> tuple[float, float]:
    """Least-squares fit of ``ln r_k = -beta eps_k - ln Z``; returns ``(beta, rms residual)``.

    A rank-deficient spectrum is never thermal at finite beta; ``(nan, inf)`` is returned.
    """
    r = np.sort(np.asarray(spectrum, dtype=float))[::-1]
    eps = np.sort(np.asarray(levels, dtype=float))
    if np.any(r <= 0):
        return math.nan, math.inf
    a = np.column_stack([-eps, -np.ones_like(eps)])
    coef, *_ = np.linalg.lstsq(a, np.log(r), rcond=None)
    resid = np.log(r) - a @ coef
    return float(coef[0]), float(np.sqrt(np.mean(resid**2)))


def is_thermal(spectrum, levels) -> bool:
    return fit_thermal_beta(spectrum, levels)[1] < THERMAL_FIT_TOL


def same_energy_mixture(rho, h, rng: np.random.Generator) -> np.ndarray:
    """A state ``(1 - w) X + w Y`` with the energy of ``rho``, both ``X`` and ``Y`` unitary conjugates of ``rho``.

    ``X`` is a random conjugate; ``Y`` is the passive state or the maximally
    active conjugate, whichever lies on the other side of ``E(rho)``, so the
    bracket always exists. The weight follows from linearity of the energy and
    the result is majorised by ``rho``.
    """
    rho = _rho(rho)
    hm = _ham(h)
    target = expect(hm, rho)
    u = random_unitary(rho.shape[0], rng)
    x = u @ rho @ dagger(u)
    e_x = expect(hm, x)
    eh = hermitian_eig(hm)
    # descending populations give the passive state, ascending ones the most active
    order = slice(None, None, -1) if e_x > target else slice(None)
    r = hermitian_eig(rho).eigenvalues[order]
    y = (eh.eigenvectors * r) @ dagger(eh.eigenvectors)
    e_y = float(np.dot(eh.eigenvalues, r))
    if abs(e_x - e_y) <= ENERGY_MATCH_TOL * max(1.0, abs(target)):
        return x
    w = (target - e_x) / (e_y - e_x)
    eta = (1.0 - w) * x + w * y
    return 0.5 * (eta + dagger(eta))
