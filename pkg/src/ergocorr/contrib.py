"""Correlation contributions to ergotropy, their entropic identities and bounds.

All contributions are differences of ergotropies and carry energy units. The
bounds are returned already divided by ``beta``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import bases as _bases
from .closest import (
    PENALTY_STARTS,
    ConstrainedClassicalResult,
    HorodeckiFamily,
    check_horodecki_energy,
    classical_energy,
    constrained_closest_classical,
    detect_horodecki,
    horodecki_closest_separable,
)
from .entropy import (
    DISCORD_STARTS,
    CorrelationMeasures,
    classical_entropy,
    correlation_measures,
    discord_and_closest_classical,
    marginal_dephasing,
    mutual_information,
    relative_entropy,
    von_neumann_entropy,
)
from .ergotropy import (
    classical_ergotropy,
    energy,
    energy_levels,
    ergotropic_gap,
    ergotropy,
    gibbs_state,
    passive_energy,
    passive_gibbs_divergence,
)
from .errors import InteractingHamiltonian, NotPure, OutOfScopeFamily, ValidationError
from .matcore import hermitian_eig
from .qstate import (
    PURITY_TOL,
    BipartiteHamiltonian,
    BipartiteState,
    ClassicalState,
    dephase_by_product_basis,
    product_of_marginals,
    schmidt_decompose,
)


class Bracket(NamedTuple):
    lower: float
    upper: float

    def contains(self, value: float, tol: float = 1e-7) -> bool:
        return self.lower - tol <= value <= self.upper + tol


def _require_local(h: BipartiteHamiltonian) -> None:
    if h.is_interacting:
        raise InteractingHamiltonian("this contribution needs a non-interacting Hamiltonian; see tilde_contributions")


def default_beta(h: BipartiteHamiltonian) -> float:
    """``1 / (max eps - min eps)``, the canonical inverse temperature of reports."""
    eps = energy_levels(h)
    width = float(eps[-1] - eps[0])
    if width <= 0.0:
        raise ValidationError("H is proportional to the identity; pass beta explicitly")
    return 1.0 / width


def _beta(h, beta):
    if beta is None:
        return default_beta(h)
    if not beta > 0:
        raise ValidationError(f"beta must be positive, got {beta!r}")
    return float(beta)


def _spectrum(rho) -> np.ndarray:
    return hermitian_eig(rho).eigenvalues


def _div(spectrum, h, beta) -> float:
    return passive_gibbs_divergence(spectrum, energy_levels(h), beta)


# ------------------------------------------------------------------ totals


def delta_total(s: BipartiteState, h: BipartiteHamiltonian) -> float:
    _require_local(h)
    return ergotropy(s.rho, h) - ergotropy(product_of_marginals(s).rho, h)


def delta_total_bounds(s: BipartiteState, h: BipartiteHamiltonian, beta: float | None = None) -> Bracket:
    _require_local(h)
    beta = _beta(h, beta)
    t = mutual_information(s)
    pi = product_of_marginals(s)
    return Bracket(
        (t - _div(_spectrum(s.rho), h, beta)) / beta,
        (t + _div(_spectrum(pi.rho), h, beta)) / beta,
    )


# ---------------------------------------------------------------- discord


def closest_for(s: BipartiteState, h: BipartiteHamiltonian, *, starts: int = DISCORD_STARTS,
                closest_starts: int = PENALTY_STARTS, seed: int = 0, method: str = "auto"):
    """Unconstrained ``chi`` and constrained ``eta`` for ``s``, with ``S(chi) <= S(eta)`` enforced.

    When the constrained search lands below the unconstrained best-found entropy,
    ``eta`` is also the better unconstrained point and replaces ``chi``.
    """
    _, chi = discord_and_closest_classical(s, starts=starts, seed=seed)
    res = constrained_closest_classical(s, h, method=method, starts=closest_starts, seed=seed, extra=[chi])
    if res.entropy < classical_entropy(chi):
        chi = res.eta
    return chi, res


def delta_discord(s: BipartiteState, h: BipartiteHamiltonian, eta: ClassicalState | None = None, **kwargs) -> float:
    """``Erg(rho) - Erg(eta)`` with ``eta`` the constrained closest classical state."""
    _require_local(h)
    if eta is None:
        eta = closest_for(s, h, **kwargs)[1].eta
    return ergotropy(s.rho, h) - classical_ergotropy(eta, h)


def delta_discord_bounds(s: BipartiteState, h: BipartiteHamiltonian, chi: ClassicalState, eta: ClassicalState,
                         beta: float | None = None) -> Bracket:
    """``[D - S(P_rho||g)] / beta`` and ``[S(rho||eta) + S(P_eta||g)] / beta``.

    ``S(rho||eta) = S(eta) - S(rho)`` because ``eta`` dephases ``rho``.
    """
    _require_local(h)
    beta = _beta(h, beta)
    s_rho = von_neumann_entropy(s.rho)
    d = classical_entropy(chi) - s_rho
    return Bracket(
        (d - _div(_spectrum(s.rho), h, beta)) / beta,
        (classical_entropy(eta) - s_rho + _div(eta.spectrum, h, beta)) / beta,
    )


def delta_discord_pure(s: BipartiteState, h: BipartiteHamiltonian) -> float:
    """``sum_i p_i eps_i - eps_1`` for a pure state (Schmidt weights against ascending levels)."""
    _require_local(h)
    if _spectrum(s.rho)[-1] < 1.0 - PURITY_TOL:
        raise NotPure("delta_discord_pure needs a pure state")
    weights, _ = schmidt_decompose(s)
    eps = energy_levels(h)
    return passive_energy(weights, eps[: weights.size]) - float(eps[0])


def schmidt_dephasing(s: BipartiteState) -> ClassicalState:
    _, pair = schmidt_decompose(s)
    return dephase_by_product_basis(s, pair)


# --------------------------------------------------------------- classical


def _local_levels(h: BipartiteHamiltonian) -> np.ndarray:
    ea, eb = h.local_spectra
    return np.sort(np.add.outer(ea, eb).ravel())


def product_spectrum(p: np.ndarray) -> np.ndarray:
    """Descending spectrum of the product of marginals of a probability table."""
    p = np.asarray(p, dtype=float)
    return np.sort(np.outer(p.sum(axis=1), p.sum(axis=0)).ravel())[::-1]


def delta_classical(chi: ClassicalState, h: BipartiteHamiltonian) -> float:
    """``sum_k eps_k (r~_k - r_k)`` from the table and local spectra (eigenvalues descending)."""
    _require_local(h)
    return passive_energy(product_spectrum(chi.p), _local_levels(h)) - passive_energy(chi.p.ravel(), _local_levels(h))


def delta_classical_batch(p: np.ndarray, eps_a: np.ndarray, eps_b: np.ndarray) -> np.ndarray:
    """Vectorised ``delta_classical`` for tables ``p (n, d_a, d_b)`` and spectra ``(n, d_a)``, ``(n, d_b)``."""
    p = np.asarray(p, dtype=float)
    n = p.shape[0]
    levels = np.sort((eps_a[:, :, None] + eps_b[:, None, :]).reshape(n, -1), axis=1)
    r = -np.sort(-p.reshape(n, -1), axis=1)
    q = -np.sort(-(p.sum(axis=2)[:, :, None] * p.sum(axis=1)[:, None, :]).reshape(n, -1), axis=1)
    return np.sum(levels * (q - r), axis=1)


def x_coefficients(r, q) -> np.ndarray:
    """Partial sums ``x_k = sum_{n<=k} (r_n - q_n)`` of two descending spectra, ``k = 1..d-1``."""
    r = np.sort(np.asarray(r, dtype=float))[::-1]
    q = np.sort(np.asarray(q, dtype=float))[::-1]
    return np.cumsum(r - q)[:-1]


def abel_energy_difference(r, q, levels) -> float:
    """``sum_k (eps_{k+1} - eps_k) x_k``, the summation-by-parts form of ``sum_k eps_k (q_k - r_k)``."""
    return float(np.dot(np.diff(np.sort(levels)), x_coefficients(r, q)))


# ------------------------------------------------------------------- local


def delta_L(s: BipartiteState, h: BipartiteHamiltonian, eta: ClassicalState) -> float:
    """``Erg(pi_rho) - Erg(pi_eta)``."""
    _require_local(h)
    return ergotropy(product_of_marginals(s).rho, h) - ergotropy(product_of_marginals(eta.as_state()).rho, h)


def delta_L_identity_residual(s: BipartiteState, h: BipartiteHamiltonian, chi: ClassicalState,
                              eta: ClassicalState, beta: float | None = None) -> float:
    """``|beta dL - [L + S(pi_eta) - S(pi_chi) - S(P_pi||g) + S(P_pi_eta||g)]|``, spectra only."""
    beta = _beta(h, beta)
    pi_rho = _spectrum(product_of_marginals(s).rho)
    pi_eta = product_spectrum(eta.p)
    pi_chi = product_spectrum(chi.p)
    ent = lambda x: float(_bases.shannon(x))
    big_l = ent(pi_chi) - ent(pi_rho)
    rhs = big_l + ent(pi_eta) - ent(pi_chi) - _div(pi_rho, h, beta) + _div(pi_eta, h, beta)
    return abs(beta * delta_L(s, h, eta) - rhs)


# ------------------------------------------------------------ entanglement


def _family(x) -> HorodeckiFamily:
    if isinstance(x, HorodeckiFamily):
        return x
    fam = detect_horodecki(x)
    if fam is None:
        raise OutOfScopeFamily("the entanglement contribution is only available for the Horodecki family")
    return fam


def delta_entanglement(x, h: BipartiteHamiltonian) -> float:
    """``Erg(rho) - Erg(tau)`` for a Horodecki-family state (``HorodeckiFamily`` or matching state)."""
    _require_local(h)
    fam = _family(x)
    tau = check_horodecki_energy(fam, h)
    return ergotropy(fam.state().rho, h) - ergotropy(tau.rho, h)


# ------------------------------------------------------------------- prime


def delta_prime(s: BipartiteState, h: BipartiteHamiltonian, chi_prime: ClassicalState | None = None) -> float:
    _require_local(h)
    chi_prime = marginal_dephasing(s) if chi_prime is None else chi_prime
    return ergotropy(s.rho, h) - classical_ergotropy(chi_prime, h)


def delta_prime_bounds(s: BipartiteState, h: BipartiteHamiltonian, beta: float | None = None) -> Bracket:
    _require_local(h)
    beta = _beta(h, beta)
    chi_prime = marginal_dephasing(s)
    d_prime = classical_entropy(chi_prime) - von_neumann_entropy(s.rho)
    return Bracket(
        (d_prime - _div(_spectrum(s.rho), h, beta)) / beta,
        (d_prime + _div(chi_prime.spectrum, h, beta)) / beta,
    )


# ------------------------------------------------------------------- tilde


class TildeContributions(NamedTuple):
    tilde_T: float
    tilde_D: float
    tilde_E: float | None


def _tilde(rho, other, h) -> float:
    return ergotropy(rho, h) - ergotropy(other, h) - energy(rho, h) + energy(other, h)


def tilde_contributions(s: BipartiteState, h: BipartiteHamiltonian, chi: ClassicalState | None = None, *,
                        starts: int = DISCORD_STARTS, seed: int = 0) -> TildeContributions:
    """Energy-corrected contributions, valid for interacting Hamiltonians.

    ``tilde_E`` is ``None`` outside the Horodecki family.
    """
    if chi is None:
        _, chi = discord_and_closest_classical(s, starts=starts, seed=seed)
    t = _tilde(s.rho, product_of_marginals(s).rho, h)
    levels = energy_levels(h)
    d = passive_energy(chi.p.ravel(), levels) - passive_energy(_spectrum(s.rho), levels)
    fam = detect_horodecki(s)
    e = None
    if fam is not None:
        e = _tilde(s.rho, horodecki_closest_separable(fam).rho, h)
    return TildeContributions(t, d, e)


# ------------------------------------------------------------- free energy


def free_energy_gap(s: BipartiteState, h: BipartiteHamiltonian, beta: float) -> float:
    """``[S(rho||g) - S(pi_rho||g)] / beta`` with ``g`` the Gibbs state at ``beta``."""
    _require_local(h)
    beta = _beta(h, beta)
    g = gibbs_state(h, beta).state
    return (relative_entropy(s.rho, g) - relative_entropy(product_of_marginals(s).rho, g)) / beta


# ------------------------------------------------------------------ report


@dataclass(frozen=True)
class ContributionReport:
    ergotropy: float
    delta_T: float
    delta: float
    delta_C: float
    delta_L: float
    delta_E: float | None
    delta_prime: float
    delta_C_prime: float
    gap_EG: float
    beta: float
    bounds: dict
    decomposition_residual: float
    prime_residual: float
    delta_L_identity_residual: float
    measures: CorrelationMeasures
    eta_entropy: float
    eta_energy_residual: float
    flags: dict = field(default_factory=dict)

    def scalars(self) -> dict:
        out = {
            k: getattr(self, k)
            for k in (
                "ergotropy", "delta_T", "delta", "delta_C", "delta_L", "delta_E", "delta_prime",
                "delta_C_prime", "gap_EG", "beta", "decomposition_residual", "prime_residual",
                "delta_L_identity_residual", "eta_entropy", "eta_energy_residual",
            )
        }
        out.update({f"measure_{k}": v for k, v in vars(self.measures).items()})
        for name, (lo, hi) in self.bounds.items():
            out[f"{name}_lower"] = lo
            out[f"{name}_upper"] = hi
        return out


def contribution_report(
    s: BipartiteState,
    h: BipartiteHamiltonian,
    beta: float | None = None,
    *,
    starts: int = DISCORD_STARTS,
    closest_starts: int = PENALTY_STARTS,
    seed: int = 0,
    method: str = "auto",
    closest: ConstrainedClassicalResult | None = None,
    chi: ClassicalState | None = None,
) -> ContributionReport:
    """Every contribution of ``s`` under non-interacting ``h``, with residuals and bound brackets.

    ``closest``/``chi`` may be supplied to reuse an earlier search.
    """
    _require_local(h)
    beta = _beta(h, beta)
    if closest is None:
        chi, closest = closest_for(s, h, starts=starts, closest_starts=closest_starts, seed=seed, method=method)
    elif chi is None:
        _, chi = discord_and_closest_classical(s, starts=starts, seed=seed, extra=[closest.eta])
    eta = closest.eta
    chi_prime = marginal_dephasing(s)

    erg = ergotropy(s.rho, h)
    d_t = delta_total(s, h)
    d = erg - classical_ergotropy(eta, h)
    d_c = delta_classical(eta, h)
    d_l = delta_L(s, h, eta)
    d_p = delta_prime(s, h, chi_prime)
    d_cp = delta_classical(chi_prime, h)
    fam = detect_horodecki(s)
    d_e = None
    if fam is not None:
        try:
            d_e = delta_entanglement(fam, h)
        except OutOfScopeFamily:
            d_e = None

    bounds = {
        "delta_T": delta_total_bounds(s, h, beta),
        "delta": delta_discord_bounds(s, h, chi, eta, beta),
        "delta_prime": delta_prime_bounds(s, h, beta),
    }
    return ContributionReport(
        ergotropy=erg,
        delta_T=d_t,
        delta=d,
        delta_C=d_c,
        delta_L=d_l,
        delta_E=d_e,
        delta_prime=d_p,
        delta_C_prime=d_cp,
        gap_EG=ergotropic_gap(s, h),
        beta=beta,
        bounds=bounds,
        decomposition_residual=abs(d_t - (d + d_c - d_l)),
        prime_residual=abs(d_t - (d_p + d_cp)),
        delta_L_identity_residual=delta_L_identity_residual(s, h, chi, eta, beta),
        measures=correlation_measures(s, chi),
        eta_entropy=closest.entropy,
        eta_energy_residual=classical_energy(eta, h) - energy(s.rho, h),
        flags={
            "marginal_degenerate": bool(chi_prime.flags.get("marginal_degenerate", False)),
            "discontinuity": bool(closest.discontinuity_flag),
            "infinite_term": False,
            "energy_degenerate": bool(np.min(np.diff(energy_levels(h))) < 1e-9),
            "eta_branch": closest.branch,
        },
    )
