"""Entropic functionals and entropy-based correlation measures (nats)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from . import bases as _bases
from .errors import DimensionMismatch, DimensionTooLarge
from .matcore import as_matrix, hermitian_eig, matrix_log_on_support
from .qstate import (
    BipartiteState,
    ClassicalState,
    LocalBasisPair,
    dephase_by_product_basis,
    marginals,
    product_of_marginals,
)

INFINITY = math.inf
SUPPORT_TOL = 1e-10
DEGENERACY_GAP = 1e-9

DISCORD_STARTS = 32
GRID_POINTS = 16
NM_FATOL = 1e-9
NM_XATOL = 1e-4


def von_neumann_entropy(m) -> float:
    lam = hermitian_eig(m).eigenvalues
    return float(_bases.shannon(lam))


def relative_entropy(rho, eta) -> float:
    """``Tr rho (ln rho - ln eta)``, or ``INFINITY`` when supp(rho) is not inside supp(eta)."""
    rho = as_matrix(rho)
    eta = as_matrix(eta)
    if rho.shape != eta.shape:
        raise DimensionMismatch(f"shapes {rho.shape} and {eta.shape} differ")
    log_eta, support = matrix_log_on_support(eta)
    kernel = np.eye(eta.shape[0]) - support
    if float(np.real(np.trace(rho @ kernel))) > SUPPORT_TOL:
        return INFINITY
    return -von_neumann_entropy(rho) - float(np.real(np.trace(rho @ log_eta)))


def mutual_information(s: BipartiteState) -> float:
    rho_a, rho_b = marginals(s)
    return von_neumann_entropy(rho_a) + von_neumann_entropy(rho_b) - von_neumann_entropy(s.rho)


def classical_entropy(chi: ClassicalState) -> float:
    return float(_bases.shannon(chi.p))


def classical_mutual_information(chi: ClassicalState) -> float:
    pa, pb = chi.marginals
    return float(_bases.shannon(pa) + _bases.shannon(pb) - _bases.shannon(chi.p))


def marginal_eigenbases(s: BipartiteState) -> tuple[LocalBasisPair, bool]:
    """Eigenbases of the reduced states (descending populations) and a degeneracy flag."""
    out = []
    degenerate = False
    for r in marginals(s):
        eig = hermitian_eig(r)
        lam = eig.eigenvalues
        if lam.size > 1 and np.min(np.diff(lam)) < DEGENERACY_GAP:
            degenerate = True
        out.append(eig.eigenvectors[:, ::-1])
    return LocalBasisPair(*out), degenerate


def _check_local_dims(s: BipartiteState) -> None:
    if max(s.d_a, s.d_b) > _bases.MAX_LOCAL_DIM:
        raise DimensionTooLarge(
            f"local dimensions ({s.d_a}, {s.d_b}) exceed the optimizer scope of {_bases.MAX_LOCAL_DIM}"
        )


def _grid_points(m: _bases.ProductBasisMap, grid: int, rng: np.random.Generator) -> np.ndarray:
    if m.d_a == 2 and m.d_b == 2:
        theta = np.linspace(0.0, np.pi, grid)
        phi = np.linspace(0.0, 2 * np.pi, grid, endpoint=False)
        g = np.stack(np.meshgrid(theta, phi, theta, phi, indexing="ij"), axis=-1)
        return g.reshape(-1, 4)
    # no tensor grid beyond qubits: the same budget of random points instead
    return np.concatenate(
        [_bases.random_angles(rng, grid**2, m.d_a), _bases.random_angles(rng, grid**2, m.d_b)], axis=-1
    )


def _nelder_mead(fun, x0, step=0.4, xatol=NM_XATOL, fatol=NM_FATOL, maxiter=None):
    n = len(x0)
    simplex = np.vstack([x0, x0 + step * np.eye(n)])
    res = minimize(
        fun,
        x0,
        method="Nelder-Mead",
        options={
            "initial_simplex": simplex,
            "xatol": xatol,
            "fatol": fatol,
            "maxiter": maxiter or 400 * n,
            "maxfev": maxiter or 400 * n,
        },
    )
    return res.x, float(res.fun)


def _best_distinct(points: np.ndarray, values: np.ndarray, k: int) -> list[np.ndarray]:
    order = np.argsort(values, kind="stable")
    seen = set()
    out = []
    for i in order:
        key = round(float(values[i]), 9)
        if key in seen:
            continue
        seen.add(key)
        out.append(points[i])
        if len(out) == k:
            break
    return out


def minimize_dephased_entropy(
    s: BipartiteState, *, starts: int = DISCORD_STARTS, grid: int = GRID_POINTS, seed: int = 0, polish: bool = True
) -> tuple[float, LocalBasisPair]:
    """Best-found minimum over local bases of the entropy of the product-basis dephasing.

    Coarse stage: a 16^4 tensor grid for two qubits, otherwise ``grid**2`` random
    points per side. The best distinct coarse points, plus zero angles around the
    computational and marginal eigenbases, seed Nelder-Mead runs. The winner is
    polished with tighter tolerances. Not a certified global minimum.
    """
    _check_local_dims(s)
    rng = np.random.default_rng(seed)
    marg, _ = marginal_eigenbases(s)
    maps = [
        _bases.ProductBasisMap(s.rho, s.d_a, s.d_b),
        _bases.ProductBasisMap(s.rho, s.d_a, s.d_b, marg.basis_a, marg.basis_b),
    ]
    comp = maps[0]
    candidates = [(maps[0], np.zeros(comp.n)), (maps[1], np.zeros(comp.n))]
    if starts > len(candidates):
        pts = _grid_points(comp, grid, rng)
        vals = _bases.shannon(comp.probabilities(pts), axis=-1)
        for x in _best_distinct(pts, vals, starts - len(candidates)):
            candidates.append((comp, x))
    candidates = candidates[: max(starts, 1)]

    best = (INFINITY, None, None)
    for m, x0 in candidates:
        x, f = _nelder_mead(m.entropy, x0)
        if f < best[0] - 1e-12:
            best = (f, m, x)
    f, m, x = best
    if polish:
        x2, f2 = _nelder_mead(m.entropy, x, step=1e-3, xatol=1e-10, fatol=1e-15)
        if f2 <= f:
            x, f = x2, f2
    ba, bb = m.bases(x)
    return f, LocalBasisPair(ba, bb)


def discord_and_closest_classical(
    s: BipartiteState, *, starts: int = DISCORD_STARTS, seed: int = 0, extra: list[ClassicalState] = ()
) -> tuple[float, ClassicalState]:
    """Relative entropy of discord ``D = min S(chi) - S(rho)`` and the best-found ``chi``.

    ``extra`` classical states obtained by product-basis dephasing of ``s`` are
    also feasible points; the lowest-entropy one wins.
    """
    f, pair = minimize_dephased_entropy(s, starts=starts, seed=seed)
    chi = dephase_by_product_basis(s, pair)
    for c in extra:
        if classical_entropy(c) < classical_entropy(chi) - 1e-12:
            chi = c
    d = classical_entropy(chi) - von_neumann_entropy(s.rho)
    return d, chi


def marginal_dephasing(s: BipartiteState) -> ClassicalState:
    """Dephasing in the marginal eigenbases; ``flags['marginal_degenerate']`` marks ambiguity."""
    pair, degenerate = marginal_eigenbases(s)
    chi = dephase_by_product_basis(s, pair)
    chi.flags["marginal_degenerate"] = degenerate
    return chi


def measurement_induced_disturbance(s: BipartiteState) -> tuple[float, ClassicalState]:
    chi = marginal_dephasing(s)
    return classical_entropy(chi) - von_neumann_entropy(s.rho), chi


def L_quantity(s: BipartiteState, chi: ClassicalState) -> float:
    """``S(pi_chi) - S(pi_rho)``; equals ``S(pi_rho || pi_chi)`` when chi dephases s."""
    pa, pb = chi.marginals
    pi_rho = product_of_marginals(s)
    return float(_bases.shannon(pa) + _bases.shannon(pb)) - von_neumann_entropy(pi_rho.rho)


def L_relative(s: BipartiteState, chi: ClassicalState) -> float:
    return relative_entropy(product_of_marginals(s).rho, product_of_marginals(chi.as_state()).rho)


@dataclass(frozen=True)
class CorrelationMeasures:
    mutual_information: float
    discord: float
    classical: float
    disturbance: float
    L: float


def correlation_measures(s: BipartiteState, chi: ClassicalState | None = None, *, starts: int = DISCORD_STARTS,
                         seed: int = 0) -> CorrelationMeasures:
    if chi is None:
        d, chi = discord_and_closest_classical(s, starts=starts, seed=seed)
    else:
        d = classical_entropy(chi) - von_neumann_entropy(s.rho)
    d_prime, _ = measurement_induced_disturbance(s)
    return CorrelationMeasures(
        mutual_information=mutual_information(s),
        discord=d,
        classical=classical_mutual_information(chi),
        disturbance=d_prime,
        L=L_quantity(s, chi),
    )
