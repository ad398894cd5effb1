"""Experiment runners: the two-qubit sweep, the negative-delta_C Monte Carlo and the worked examples.

Runners return plain records (lists of dicts) so the CLI can serialise them as
CSV or JSON without knowing their content.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.stats import binomtest

from .closest import (
    HorodeckiFamily,
    constraint_curve_f,
    flag_discontinuities,
    horodecki_closest_separable,
)
from .contrib import (
    contribution_report,
    closest_for,
    delta_classical,
    delta_classical_batch,
    delta_discord_pure,
    delta_entanglement,
    product_spectrum,
    tilde_contributions,
    x_coefficients,
)
from .entropy import DISCORD_STARTS
from .ergotropy import energy, passive_state
from .errors import ValidationError
from .qstate import BipartiteHamiltonian, BipartiteState, ClassicalState, LocalBasisPair

SCHEMA_VERSION = 1
NEGATIVE_THRESHOLD = -1e-12
BLOCK_SIZE = 1000


@dataclass
class ExperimentConfig:
    seed: int = 0
    n: int = 10**4
    d_a: int = 2
    d_b: int = 2
    db_values: tuple = (2, 3, 4, 5, 6)
    mu_grid: tuple = (0.0, 1.0, 0.005)
    R: float = 1.0
    epsilon: float = 1.0
    beta: float | None = None
    output_format: str = "csv"
    shards: int = 1
    starts: int = DISCORD_STARTS

    def __post_init__(self):
        if self.n < 1:
            raise ValidationError(f"n must be at least 1, got {self.n}")
        if self.mu_grid[2] <= 0:
            raise ValidationError(f"mu grid step must be positive, got {self.mu_grid[2]}")
        if min(self.d_a, self.d_b, *self.db_values) < 2:
            raise ValidationError("all subsystem dimensions must be at least 2")
        if self.shards < 1:
            raise ValidationError(f"shards must be at least 1, got {self.shards}")
        if self.output_format not in ("csv", "json"):
            raise ValidationError(f"output format must be csv or json, got {self.output_format!r}")
        if self.epsilon <= 0 or self.R < 0:
            raise ValidationError("epsilon must be positive and R non-negative")

    def mu_values(self) -> np.ndarray:
        start, stop, step = self.mu_grid
        k = int(math.floor((stop - start) / step + 1e-9))
        return np.round(start + step * np.arange(k + 1), 12)

    def echo(self) -> dict:
        out = asdict(self)
        out["db_values"] = list(self.db_values)
        out["mu_grid"] = list(self.mu_grid)
        return out


# ------------------------------------------------------------ two qubits


def example_state(mu: float) -> BipartiteState:
    """``mu |0><0| x |+><+| + (1 - mu) |1><1| x |1><1|``."""
    if not 0.0 <= mu <= 1.0:
        raise ValidationError(f"mu must lie in [0, 1], got {mu}")
    a = np.kron([1.0, 0.0], [1.0, 1.0]) / math.sqrt(2.0)
    b = np.kron([0.0, 1.0], [0.0, 1.0])
    return BipartiteState(mu * np.outer(a, a) + (1 - mu) * np.outer(b, b), 2, 2)


def example_hamiltonian(R: float = 1.0, eps: float = 1.0) -> BipartiteHamiltonian:
    """``H_A = R eps |1><1|``, ``H_B = eps |1><1|``."""
    return BipartiteHamiltonian.non_interacting(np.diag([0.0, R * eps]), np.diag([0.0, eps]))


def example_discord(mu: float) -> float:
    return min(mu, 1 - mu) * math.log(2.0)


def example_passive_energy(mu: float, R: float, eps: float = 1.0) -> float:
    return min(1.0, R) * eps * min(mu, 1 - mu)


def example_delta_low(mu: float, R: float, eps: float = 1.0) -> float:
    """Closed form of delta for ``mu <= 1/2``."""
    return abs(1 - R) * eps * mu / 2


def run_fig1(cfg: ExperimentConfig) -> tuple[list[dict], float | None]:
    """Contribution report along the mu grid; returns the records and the detected ``mu_c``.

    ``mu_c`` is the midpoint of the first grid cell above 1/2 where eta jumps
    (see `flag_discontinuities`), or ``None`` if no jump is seen.
    """
    h = example_hamiltonian(cfg.R, cfg.epsilon)
    mus = cfg.mu_values()
    results, reports = [], []
    for mu in mus:
        s = example_state(float(mu))
        chi, res = closest_for(s, h, starts=cfg.starts, seed=cfg.seed)
        results.append(res)
        reports.append(contribution_report(s, h, cfg.beta, closest=res, chi=chi))
    results = flag_discontinuities(results)
    records = []
    mu_c = None
    for i, (mu, res, rep) in enumerate(zip(mus, results, reports)):
        flag = bool(res.discontinuity_flag)
        if flag and mu > 0.5 and mu_c is None:
            mu_c = float(0.5 * (mus[i - 1] + mu))
        rec = {"mu": float(mu), "R": cfg.R, "epsilon": cfg.epsilon}
        rec.update(rep.scalars())
        rec.update({f"flag_{k}": v for k, v in rep.flags.items()})
        rec["flag_discontinuity"] = flag
        records.append(rec)
    return records, mu_c


# --------------------------------------------------------- Monte Carlo


def block_rng(seed: int, d_a: int, d_b: int, block: int) -> np.random.Generator:
    """Generator of one sample block; depends only on the seed, dimensions and block index."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), d_a, d_b, block])))


def count_negative_block(seed: int, d_a: int, d_b: int, block: int, size: int) -> int:
    """Negative-delta_C count in one block of flat-simplex tables and uniform [0, 1] local levels."""
    rng = block_rng(seed, d_a, d_b, block)
    p = rng.standard_exponential((size, d_a, d_b))
    p /= p.sum(axis=(1, 2), keepdims=True)
    eps_a = rng.uniform(0.0, 1.0, (size, d_a))
    eps_b = rng.uniform(0.0, 1.0, (size, d_b))
    return int(np.count_nonzero(delta_classical_batch(p, eps_a, eps_b) < NEGATIVE_THRESHOLD))


def _blocks(n: int) -> list[tuple[int, int]]:
    return [(b, min(BLOCK_SIZE, n - b * BLOCK_SIZE)) for b in range((n + BLOCK_SIZE - 1) // BLOCK_SIZE)]


def run_shard(seed: int, d_a: int, d_b: int, n: int, shard: int, shards: int) -> int:
    """Count for the blocks assigned to ``shard`` (round-robin over block indices)."""
    return sum(count_negative_block(seed, d_a, d_b, b, size) for b, size in _blocks(n)[shard::shards])


def wilson_interval(k: int, n: int) -> tuple[float, float]:
    ci = binomtest(k, n).proportion_ci(confidence_level=0.95, method="wilson")
    return float(ci.low), float(ci.high)


def run_fig2(cfg: ExperimentConfig) -> list[dict]:
    """Probability of ``delta_C < -1e-12`` per ``d_b`` with Wilson 95% intervals.

    Samples come in fixed blocks seeded by index, so the counts do not depend on
    the shard count; shards are merged in index order.
    """
    records = []
    for d_b in cfg.db_values:
        counts = [run_shard(cfg.seed, cfg.d_a, d_b, cfg.n, k, cfg.shards) for k in range(cfg.shards)]
        k = sum(counts)
        lo, hi = wilson_interval(k, cfg.n)
        records.append({
            "d_a": cfg.d_a, "d_b": int(d_b), "n": cfg.n, "negatives": k,
            "probability": k / cfg.n, "wilson_lower": lo, "wilson_upper": hi,
        })
    return records


def is_non_increasing(records: list[dict]) -> list[bool]:
    """Per adjacent pair: the later estimate does not exceed the earlier upper Wilson bound."""
    return [b["probability"] <= a["wilson_upper"] for a, b in zip(records, records[1:])]


# ------------------------------------------------------------ examples


@dataclass
class ExampleRow:
    name: str
    expected: float
    computed: float
    tolerance: float
    source: str = "quoted"
    abs_error: float = field(init=False)
    ok: bool = field(init=False)

    def __post_init__(self):
        self.abs_error = abs(self.computed - self.expected)
        self.ok = bool(self.abs_error <= self.tolerance)


COUNTEREXAMPLE_P = np.array([[0.27, 0.04, 0.23], [0.26, 0.03, 0.17]])


def counterexample_x() -> np.ndarray:
    return x_coefficients(COUNTEREXAMPLE_P.ravel(), product_spectrum(COUNTEREXAMPLE_P))


def counterexample_delta_c(eps_a=(0.0, 0.6), eps_b=(0.0, 0.6, 1.0)) -> float:
    chi = ClassicalState(COUNTEREXAMPLE_P, LocalBasisPair.computational(2, 3))
    return delta_classical(chi, BipartiteHamiltonian.non_interacting(np.diag(eps_a), np.diag(eps_b)))


def horodecki_hamiltonian(eps: float = 1.0) -> BipartiteHamiltonian:
    return BipartiteHamiltonian.non_interacting(np.diag([0.0, eps]), np.diag([0.0, eps]))


def run_examples(cfg: ExperimentConfig | None = None) -> list[dict]:
    """Every quoted value next to its computed counterpart and the absolute error."""
    cfg = cfg or ExperimentConfig()
    eps = cfg.epsilon
    rows = []
    for mu, R in ((0.3, 2.0), (0.3, 1.0), (0.1, 0.5), (0.4, 2.0)):
        s, h = example_state(mu), example_hamiltonian(R, eps)
        chi, res = closest_for(s, h, starts=cfg.starts, seed=cfg.seed)
        rep = contribution_report(s, h, closest=res, chi=chi)
        rows.append(ExampleRow(f"delta mu={mu} R={R}", example_delta_low(mu, R, eps), rep.delta, 1e-5))
        rows.append(ExampleRow(f"D mu={mu}", example_discord(mu), rep.measures.discord, 1e-4))
        rows.append(ExampleRow(
            f"E(P_rho) mu={mu} R={R}", example_passive_energy(mu, R, eps),
            passive_state(s.rho, h).energy_passive, 1e-10,
        ))
    rows.append(ExampleRow("f(1/2, 1/2; mu=3/4, R=1)", 0.125, float(constraint_curve_f(0.5, 0.5, 0.75, 1.0)), 1e-15,
                           "derived"))

    hh = horodecki_hamiltonian(eps)
    fam = HorodeckiFamily(0.5)
    rows.append(ExampleRow("delta_E Horodecki p=1/2", -0.0625 * eps, delta_entanglement(fam, hh), 1e-10))
    rows.append(ExampleRow("tilde delta_E Horodecki p=1/2", -0.0625 * eps,
                           tilde_contributions(fam.state(), hh, starts=cfg.starts).tilde_E, 1e-10))
    rows.append(ExampleRow("E(sigma) - E(rho) Horodecki p=1/2", 0.0,
                           energy(horodecki_closest_separable(fam).rho, hh) - energy(fam.state().rho, hh), 1e-12))

    x = counterexample_x()
    for k, val in ((1, -0.0162), (3, 0.014), (5, 0.0022)):
        rows.append(ExampleRow(f"counterexample x_{k}", val, float(x[k - 1]), 1e-10))
    rows.append(ExampleRow("counterexample x_1 + x_3 + x_5", 0.0, float(x[0] + x[2] + x[4]), 1e-12))
    rows.append(ExampleRow("counterexample delta_C (eps_A=0.6, eps_B=0.6,1.0)", -0.00324, counterexample_delta_c(),
                           1e-12, "derived"))

    bell = BipartiteState.from_ket([0, 1, 1, 0], 2, 2)
    rows.append(ExampleRow("pure delta, Bell state", 0.5 * eps, delta_discord_pure(bell, hh), 1e-12, "derived"))
    skew = BipartiteState.from_ket([math.sqrt(0.8), 0, 0, math.sqrt(0.2)], 2, 2)
    rows.append(ExampleRow("pure delta, sqrt(0.8)|00> + sqrt(0.2)|11>", 0.2 * eps, delta_discord_pure(skew, hh),
                           1e-12, "derived"))
    return [asdict(r) for r in rows]
