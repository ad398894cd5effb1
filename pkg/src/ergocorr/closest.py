"""Closest-state constructions.

`constrained_closest_classical` searches the product-basis dephasings of a state
for the lowest-entropy one with the same energy. Several strategies feed a
common candidate pool and the lowest feasible entropy wins:

* free feasible points: dephasing in the local energy eigenbases and in the
  marginal eigenbases (both energy preserving for non-interacting H), and an
  optional unconstrained minimiser when it happens to meet the constraint;
* the two-qubit curve path, which exploits that the energy residual splits into
  an A part and a B part in Bloch coordinates;
* the generic penalty path (Nelder-Mead on ``S + kappa * residual^2`` with
  escalating ``kappa``, followed by a one-angle projection onto the constraint).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from . import bases as _bases
from .entropy import _nelder_mead, classical_entropy, marginal_dephasing
from .errors import DimensionTooLarge, InfeasibleConstraint, OutOfScopeFamily, ValidationError
from .matcore import dagger, expect, hermitian_eig
from .qstate import (
    PURITY_TOL,
    BipartiteHamiltonian,
    BipartiteState,
    ClassicalState,
    LocalBasisPair,
    dephase_by_product_basis,
    marginals,
    schmidt_decompose,
)

ENERGY_TOL = 1e-8
TIE_TOL = 1e-10
BRANCH_JUMP = 0.1

PENALTY_STARTS = 64
PENALTY_KAPPAS = (1e1, 1e3, 1e5, 1e7)
PENALTY_ESCALATE = 8

CURVE_B_POINTS = 2001
CURVE_A_POINTS = 2001
CURVE_PHASES = 8
ROOT_XTOL = 1e-12
# finite stand-in for "no root", keeps bounded Brent free of inf arithmetic
INFEASIBLE_ENTROPY = 1e3


@dataclass(frozen=True)
class ConstrainedClassicalResult:
    eta: ClassicalState
    entropy: float
    energy_residual: float
    multistart_count: int
    discontinuity_flag: bool = False
    branch: str = ""
    candidates: dict = field(default_factory=dict, compare=False)


def _energy_scale(h: BipartiteHamiltonian) -> float:
    eps = hermitian_eig(h.total).eigenvalues
    return max(float(eps[-1] - eps[0]), 1e-300)


def _local_energy_bases(h: BipartiteHamiltonian) -> LocalBasisPair:
    if h.is_interacting:
        return LocalBasisPair.computational(h.d_a, h.d_b)
    return LocalBasisPair(hermitian_eig(h.h_a).eigenvectors, hermitian_eig(h.h_b).eigenvectors)


def classical_energy(chi: ClassicalState, h: BipartiteHamiltonian) -> float:
    w = chi.bases.product
    return float(np.dot(chi.p.ravel(), np.real(np.sum(np.conj(w) * (h.total @ w), axis=0))))


class _Pool:
    def __init__(self, s: BipartiteState, h: BipartiteHamiltonian):
        self.s = s
        self.h = h
        self.target = expect(h.total, s.rho)
        self.best: tuple[float, ClassicalState, str] | None = None
        self.seen: dict[str, float] = {}

    def offer(self, chi: ClassicalState, branch: str) -> None:
        res = classical_energy(chi, self.h) - self.target
        if abs(res) > ENERGY_TOL:
            return
        ent = classical_entropy(chi)
        self.seen[branch] = min(ent, self.seen.get(branch, math.inf))
        if self.best is None or ent < self.best[0] - TIE_TOL:
            self.best = (ent, chi, branch)


# ---------------------------------------------------------------- curve path


def constraint_curve_f(a, b, mu, R):
    """Energy residual ``(E(eta) - E(rho)) / eps`` of the two-qubit example at zero phases."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return (
        2 * (1 - a) * a * R * (2 * mu - 1)
        - 2 * (1 - b) * b * (1 - mu)
        + (1 - 2 * b) * np.sqrt((1 - b) * b) * mu
    )


def curve_roots(mu: float, R: float, n_b: int = CURVE_B_POINTS, n_a: int = CURVE_A_POINTS) -> list[tuple[float, float]]:
    """All ``(a, b)`` with ``f(a, b) = 0``: b scanned on a grid, a-roots bisected to 1e-12."""
    out = []
    a_grid = np.linspace(0.0, 1.0, n_a)
    for b in np.linspace(0.0, 1.0, n_b):
        fa = constraint_curve_f(a_grid, b, mu, R)
        for i in np.nonzero(fa == 0.0)[0]:
            out.append((float(a_grid[i]), float(b)))
        for i in np.nonzero(fa[:-1] * fa[1:] < 0)[0]:
            a = brentq(constraint_curve_f, a_grid[i], a_grid[i + 1], args=(b, mu, R), xtol=ROOT_XTOL)
            out.append((float(a), float(b)))
    return out


def _bloch_pair(a, phase):
    """Bases with first vector ``sqrt(a)|0> + sqrt(1-a) e^{i phase}|1>``; batched."""
    a = np.asarray(a, dtype=float)
    phase = np.broadcast_to(np.asarray(phase, dtype=float), a.shape)
    sa = np.sqrt(np.clip(a, 0.0, 1.0))
    sb = np.sqrt(np.clip(1.0 - a, 0.0, 1.0))
    e = np.exp(1j * phase)
    out = np.empty(a.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = sa
    out[..., 1, 0] = sb * e
    out[..., 0, 1] = sb
    out[..., 1, 1] = -sa * e
    return out


def _local_residual(a, phase, r: np.ndarray, e: np.ndarray):
    """``sum_i <v_i|r|v_i><v_i|h|v_i> - Tr(r h)`` for a qubit with ``h = diag(e)``."""
    a = np.asarray(a, dtype=float)
    root = np.sqrt(np.clip(a * (1 - a), 0.0, None))
    p1 = a * r[0, 0].real + (1 - a) * r[1, 1].real + 2 * root * np.real(np.exp(1j * phase) * r[0, 1])
    h1 = a * e[0] + (1 - a) * e[1]
    h2 = (1 - a) * e[0] + a * e[1]
    return p1 * h1 + (1 - p1) * h2 - (r[0, 0].real * e[0] + r[1, 1].real * e[1])


class _CurveProblem:
    """Two-qubit search in Bloch coordinates relative to the local energy eigenbases."""

    def __init__(self, s: BipartiteState, h: BipartiteHamiltonian):
        ea = hermitian_eig(h.h_a)
        eb = hermitian_eig(h.h_b)
        self.ref = (ea.eigenvectors, eb.eigenvectors)
        self.e = (ea.eigenvalues, eb.eigenvalues)
        w = np.kron(*self.ref)
        self.rho = dagger(w) @ s.rho @ w
        ra, rb = marginals(BipartiteState(s.rho, 2, 2))
        self.r = (dagger(self.ref[0]) @ ra @ self.ref[0], dagger(self.ref[1]) @ rb @ self.ref[1])

    def g(self, side: int, x, phase):
        return _local_residual(x, phase, self.r[side], self.e[side])

    def probabilities(self, a, alpha, b, beta):
        w = _bases.kron_batched(_bloch_pair(a, alpha), _bloch_pair(b, beta))
        return np.real(np.sum(np.conj(w) * (self.rho @ w), axis=-2))

    def entropy(self, a, alpha, b, beta):
        return _bases.shannon(self.probabilities(a, alpha, b, beta), axis=-1)

    def to_classical(self, a, alpha, b, beta) -> ClassicalState:
        pair = LocalBasisPair(self.ref[0] @ _bloch_pair(a, alpha), self.ref[1] @ _bloch_pair(b, beta))
        p = np.clip(self.probabilities(a, alpha, b, beta), 0.0, None).reshape(2, 2)
        return ClassicalState(p / p.sum(), pair)


def _monotone_pieces(values: np.ndarray) -> list[tuple[int, int]]:
    d = np.sign(np.diff(values))
    pieces = []
    start = 0
    for i in range(1, d.size):
        if d[i] != 0 and d[i - 1] != 0 and d[i] != d[i - 1]:
            pieces.append((start, i))
            start = i
    pieces.append((start, values.size - 1))
    return pieces


def _solve_on_piece(fun, lo, hi, target, flo, fhi, iters: int = 48):
    """Vectorised bisection of ``fun(x) = target`` on ``[lo, hi]`` (monotone there)."""
    inc = fhi >= flo
    lo = np.full(target.shape, lo, dtype=float)
    hi = np.full(target.shape, hi, dtype=float)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        below = fun(mid) < target
        go_right = below == inc
        lo = np.where(go_right, mid, lo)
        hi = np.where(go_right, hi, mid)
    return 0.5 * (lo + hi)


def _curve_search(s: BipartiteState, h: BipartiteHamiltonian, n_scan: int = CURVE_B_POINTS,
                  n_solve: int = CURVE_A_POINTS, n_phase: int = CURVE_PHASES):
    """Best feasible point of the two-qubit curve path, or ``None``.

    The scan variable (default b) runs over ``n_scan`` points and every root of the
    solved variable is located per monotone piece; phases run over an
    ``n_phase x n_phase`` grid starting at zero. The winner is refined along the
    scan variable, then over the phases (kept only if that lowers the entropy by
    more than 1e-9, so flat phase directions stay at their grid value).
    """
    cp = _CurveProblem(s, h)
    grid = np.linspace(0.0, 1.0, n_solve)
    phases = 2 * np.pi * np.arange(n_phase) / n_phase
    span = [float(np.ptp(cp.g(side, grid[None, :], phases[:, None]))) for side in (0, 1)]
    scale = max(span + [1e-300])
    if max(span) < 1e-13:
        return None
    solve = 0 if span[0] >= 1e-12 * scale and span[0] > 1e-14 else 1
    scan = 1 - solve

    def assemble(xs, ps, ys, qs):
        # (solve var, its phase, scan var, its phase) -> (a, alpha, b, beta)
        return (xs, ps, ys, qs) if solve == 0 else (ys, qs, xs, ps)

    y = np.linspace(0.0, 1.0, n_scan)
    tgt_all = -cp.g(scan, y[None, :], phases[:, None])  # (phase_scan, n_scan)
    best = None
    for i_p, ph in enumerate(phases):
        vals = cp.g(solve, grid, ph)
        if np.ptp(vals) < 1e-14:
            continue
        for lo_i, hi_i in _monotone_pieces(vals):
            flo, fhi = vals[lo_i], vals[hi_i]
            inside = (tgt_all >= min(flo, fhi)) & (tgt_all <= max(flo, fhi))
            if not inside.any():
                continue
            j_q, k = np.nonzero(inside)
            tgt = tgt_all[j_q, k]
            x = _solve_on_piece(lambda t: cp.g(solve, t, ph), grid[lo_i], grid[hi_i], tgt, flo, fhi)
            ent = cp.entropy(*assemble(x, np.full(x.shape, ph), y[k], phases[j_q]))
            ent = np.where(np.abs(cp.g(solve, x, ph) - tgt) <= ENERGY_TOL, ent, np.inf)
            m = int(np.argmin(ent))
            if best is None or ent[m] < best[0] - 1e-12:
                best = (float(ent[m]), float(x[m]), ph, float(y[k[m]]), float(phases[j_q[m]]), (lo_i, hi_i))
    if best is None:
        return None

    _, x0, ph, y0, q0, (lo_i, hi_i) = best
    piece = (grid[lo_i], grid[hi_i])

    def solve_x(yv, phv, qv):
        t = -float(cp.g(scan, yv, qv))
        fun = lambda t_: float(cp.g(solve, t_, phv)) - t
        flo, fhi = fun(piece[0]), fun(piece[1])
        if flo == 0.0:
            return piece[0]
        if fhi == 0.0:
            return piece[1]
        if flo * fhi > 0:
            return None
        return brentq(fun, piece[0], piece[1], xtol=1e-15, rtol=1e-15)

    def objective(yv, phv, qv):
        xv = solve_x(yv, phv, qv)
        if xv is None:
            return INFEASIBLE_ENTROPY, None
        return float(cp.entropy(*assemble(xv, phv, yv, qv))), xv

    dy = 1.0 / (n_scan - 1)
    res = minimize_scalar(
        lambda v: objective(v, ph, q0)[0],
        bounds=(max(0.0, y0 - dy), min(1.0, y0 + dy)),
        method="bounded",
        options={"xatol": 1e-12},
    )
    f_best, x_best = objective(y0, ph, q0)
    if res.fun < f_best:
        y0 = float(res.x)
        f_best, x_best = objective(y0, ph, q0)

    z, fz = _nelder_mead(lambda v: objective(v[0], v[1], v[2])[0], np.array([y0, ph, q0]), step=0.05,
                         xatol=1e-10, fatol=1e-14)
    if fz < f_best - 1e-9 and 0.0 <= z[0] <= 1.0:
        f2, x2 = objective(z[0], z[1], z[2])
        if x2 is not None:
            y0, ph, q0, f_best, x_best = float(z[0]), float(z[1]), float(z[2]), f2, x2
    if x_best is None:
        return None
    return cp.to_classical(*assemble(x_best, ph, y0, q0))


# -------------------------------------------------------------- penalty path


def _project(m: _bases.ProductBasisMap, hm: np.ndarray, target: float, x: np.ndarray):
    """Move one angle so that the energy residual vanishes; ``None`` if no angle brackets a root."""

    def resid(v):
        return float(np.dot(m.probabilities(v), m.diag_in(hm, m.product(v)))) - target

    r0 = resid(x)
    if abs(r0) <= 1e-14:
        return x
    grads = []
    for k in range(x.size):
        e = np.zeros(x.size)
        e[k] = 1e-6
        grads.append(abs(resid(x + e) - resid(x - e)))
    for k in np.argsort(grads)[::-1]:
        if grads[k] == 0.0:
            break

        def line(t, k=k):
            v = x.copy()
            v[k] += t
            return resid(v)

        for direction in (1.0, -1.0):
            prev_t, prev_r = 0.0, r0
            t = 1e-9
            while t < 2 * np.pi:
                rt = line(direction * t)
                if rt == 0.0 or np.sign(rt) != np.sign(prev_r):
                    a_, b_ = sorted((direction * prev_t, direction * t))
                    root = brentq(line, a_, b_, xtol=1e-16, rtol=1e-15) if rt != 0.0 else direction * t
                    v = x.copy()
                    v[k] += root
                    if abs(resid(v)) <= ENERGY_TOL:
                        return v
                    break
                prev_t, prev_r = t, rt
                t *= 2.0
    return None


def _penalty_search(s: BipartiteState, h: BipartiteHamiltonian, starts: int, rng: np.random.Generator,
                    seeds: list[LocalBasisPair]) -> list[ClassicalState]:
    hm = h.total
    target = expect(hm, s.rho)
    scale = _energy_scale(h)
    maps = [_bases.ProductBasisMap(s.rho, s.d_a, s.d_b, p.basis_a, p.basis_b) for p in seeds]
    comp = _bases.ProductBasisMap(s.rho, s.d_a, s.d_b)
    starts_list = [(m, np.zeros(m.n)) for m in maps]
    while len(starts_list) < starts:
        xa = _bases.random_angles(rng, (), s.d_a)
        xb = _bases.random_angles(rng, (), s.d_b)
        starts_list.append((comp, np.concatenate([xa, xb])))
    def objective(m, kappa):
        def f(v):
            w = m.product(v)
            p = m.diag_in(m.rho, w)
            res = (float(np.dot(p, m.diag_in(hm, w))) - target) / scale
            return float(_bases.shannon(p)) + kappa * res * res

        return f

    # every start gets the first (soft) stage; only the best few are escalated
    first = []
    for m, x in starts_list[:starts]:
        x, f = _nelder_mead(objective(m, PENALTY_KAPPAS[0]), x, step=0.3, xatol=1e-3)
        first.append((f, m, x))
    first.sort(key=lambda t: t[0])
    out = []
    for _, m, x in first[:PENALTY_ESCALATE]:
        for kappa in PENALTY_KAPPAS[1:]:
            x, _ = _nelder_mead(objective(m, kappa), x, step=0.02)
        xp = _project(m, hm, target, x)
        if xp is not None:
            ba, bb = m.bases(xp)
            out.append(dephase_by_product_basis(s, LocalBasisPair(ba, bb)))
    return out


# ------------------------------------------------------------------ driver


def is_two_qubit_curve_eligible(s: BipartiteState, h: BipartiteHamiltonian) -> bool:
    return s.d_a == 2 and s.d_b == 2 and not h.is_interacting


def constrained_closest_classical(
    s: BipartiteState,
    h: BipartiteHamiltonian,
    *,
    method: str = "auto",
    starts: int = PENALTY_STARTS,
    seed: int = 0,
    extra: list[ClassicalState] = (),
) -> ConstrainedClassicalResult:
    """Best-found lowest-entropy product-basis dephasing of ``s`` with ``E(eta) = E(s)``.

    ``method`` selects the search strategies on top of the free candidates:
    ``"auto"`` (curve path for non-interacting two-qubit inputs, penalty path
    otherwise), ``"curve"``, ``"penalty"``, ``"both"`` or ``"free"`` (free
    candidates only). ``extra`` dephasings of ``s`` (for instance the
    unconstrained discord minimiser) join the pool when they meet the energy
    constraint.

    Raises
    ------
    InfeasibleConstraint
        If no candidate meets the energy within 1e-8 (possible for interacting H).
    DimensionTooLarge
        If a local dimension exceeds 4 and a search strategy is requested.
    """
    if h.d_a != s.d_a or h.d_b != s.d_b:
        raise ValidationError("state and Hamiltonian subsystem dimensions differ")
    if method not in ("auto", "curve", "penalty", "both", "free"):
        raise ValueError(f"unknown method {method!r}")
    if method != "free" and max(s.d_a, s.d_b) > _bases.MAX_LOCAL_DIM:
        raise DimensionTooLarge(f"local dimensions ({s.d_a}, {s.d_b}) exceed {_bases.MAX_LOCAL_DIM}")
    eligible = is_two_qubit_curve_eligible(s, h)
    if method == "curve" and not eligible:
        raise ValidationError("the curve path needs a non-interacting two-qubit input")
    use_curve = method in ("curve", "both") or (method == "auto" and eligible)
    use_penalty = method in ("penalty", "both") or (method == "auto" and not eligible)

    pool = _Pool(s, h)
    energy_pair = _local_energy_bases(h)
    pool.offer(dephase_by_product_basis(s, energy_pair), "energy_dephasing")
    chi_prime = marginal_dephasing(s)
    pool.offer(chi_prime, "marginal")
    if hermitian_eig(s.rho).eigenvalues[-1] >= 1.0 - PURITY_TOL:
        _, schmidt = schmidt_decompose(s)
        pool.offer(dephase_by_product_basis(s, schmidt), "schmidt")
    for c in extra:
        pool.offer(c, "extra")
    count = 0
    if use_curve:
        c = _curve_search(s, h)
        if c is not None:
            pool.offer(c, "curve")
    if use_penalty:
        rng = np.random.default_rng(seed)
        seeds = [energy_pair, chi_prime.bases] + [c.bases for c in extra]
        for c in _penalty_search(s, h, starts, rng, seeds):
            pool.offer(c, "penalty")
        count = starts
    if pool.best is None:
        raise InfeasibleConstraint("no product-basis dephasing met the energy constraint")
    ent, eta, branch = pool.best
    return ConstrainedClassicalResult(
        eta=eta,
        entropy=ent,
        energy_residual=classical_energy(eta, h) - pool.target,
        multistart_count=count,
        branch=branch,
        candidates=dict(pool.seen),
    )


def flag_discontinuities(results: list[ConstrainedClassicalResult], jump: float = BRANCH_JUMP):
    """Mark results whose eta jumps (Frobenius) by more than ``jump`` from the previous one."""
    out = list(results[:1])
    for prev, cur in zip(results, results[1:]):
        d = float(np.linalg.norm(cur.eta.matrix - prev.eta.matrix))
        out.append(replace(cur, discontinuity_flag=d > jump))
    return out


def marginal_eigenbasis_dephasing(s: BipartiteState) -> ClassicalState:
    return marginal_dephasing(s)


# ---------------------------------------------------------------- Horodecki


@dataclass(frozen=True)
class HorodeckiFamily:
    """``p |psi(+-)><psi(+-)| + (1 - p)|00><00|`` with ``psi(+-) = (|01> +- |10>)/sqrt(2)``."""

    p: float
    sign: str = "+"

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValidationError(f"p must lie in [0, 1], got {self.p}")
        if self.sign not in ("+", "-"):
            raise ValidationError(f"sign must be '+' or '-', got {self.sign!r}")

    @property
    def psi(self) -> np.ndarray:
        sgn = 1.0 if self.sign == "+" else -1.0
        return np.array([0.0, 1.0, sgn, 0.0], dtype=complex) / math.sqrt(2.0)

    def state(self) -> BipartiteState:
        ket00 = np.zeros((4, 4), dtype=complex)
        ket00[0, 0] = 1.0
        return BipartiteState(self.p * np.outer(self.psi, self.psi.conj()) + (1 - self.p) * ket00, 2, 2)


def horodecki_closest_separable(fam: HorodeckiFamily) -> BipartiteState:
    """``q'^2 |00><00| + 2 p'q' |psi><psi| + p'^2 |11><11|`` with ``p' = p/2``, ``q' = 1 - p'``."""
    pp = fam.p / 2.0
    qq = 1.0 - pp
    m = 2 * pp * qq * np.outer(fam.psi, fam.psi.conj())
    m[0, 0] += qq * qq
    m[3, 3] += pp * pp
    return BipartiteState(m, 2, 2)


def detect_horodecki(s: BipartiteState, tol: float = 1e-10) -> HorodeckiFamily | None:
    """Return the family member equal to ``s`` within ``tol`` (max-abs), if any."""
    if (s.d_a, s.d_b) != (2, 2):
        return None
    p = 1.0 - float(np.real(s.rho[0, 0]))
    sign = "+" if np.real(s.rho[1, 2]) >= 0 else "-"
    if not -tol <= p <= 1.0 + tol:
        return None
    fam = HorodeckiFamily(min(max(p, 0.0), 1.0), sign)
    if np.max(np.abs(fam.state().rho - s.rho)) > tol:
        return None
    return fam


def check_horodecki_energy(fam: HorodeckiFamily, h: BipartiteHamiltonian, tol: float = 1e-12) -> BipartiteState:
    """The closest separable state, provided it shares the energy of the family state."""
    sigma = horodecki_closest_separable(fam)
    rho = fam.state()
    if abs(expect(h.total, sigma.rho) - expect(h.total, rho.rho)) > tol * max(1.0, _energy_scale(h)):
        raise OutOfScopeFamily("the closed-form separable state does not share the energy of rho for this H")
    return sigma
