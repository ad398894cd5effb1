import math

import numpy as np
import pytest

import oracles
from conftest import bell_state, local_h, random_local_h
from ergocorr.closest import HorodeckiFamily, constrained_closest_classical
from ergocorr.contrib import (
    abel_energy_difference,
    closest_for,
    contribution_report,
    default_beta,
    delta_classical,
    delta_classical_batch,
    delta_discord,
    delta_discord_pure,
    delta_entanglement,
    delta_L,
    delta_prime,
    delta_prime_bounds,
    delta_total,
    delta_total_bounds,
    free_energy_gap,
    schmidt_dephasing,
    tilde_contributions,
    x_coefficients,
)
from ergocorr.entropy import mutual_information, von_neumann_entropy
from ergocorr.errors import InteractingHamiltonian, NotPure, OutOfScopeFamily
from ergocorr.ergotropy import ergotropy, gibbs_state, passive_gibbs_divergence
from ergocorr.experiments import (
    counterexample_delta_c,
    counterexample_x,
    example_delta_low,
    example_hamiltonian,
    example_state,
)
from ergocorr.qstate import (
    BipartiteHamiltonian,
    BipartiteState,
    ClassicalState,
    LocalBasisPair,
    local_unitary,
    make_rng,
    product_of_marginals,
    random_classical,
    random_local_spectra,
    random_pure_state,
    random_state,
    random_unitary,
)


def product_state(rng, d_a=2, d_b=2):
    return BipartiteState(np.kron(random_state(d_a, 1, None, rng).rho, random_state(d_b, 1, None, rng).rho), d_a, d_b)


def test_delta_total_examples(rng):
    h = local_h()
    assert delta_total(product_state(rng), h) == pytest.approx(0.0, abs=1e-10)
    assert delta_total(bell_state(), h) == pytest.approx(ergotropy(bell_state().rho, h), abs=1e-12)


def test_delta_total_interacting_rejected():
    h = BipartiteHamiltonian.general(np.diag([0.0, 1.0, 1.0, 2.0]), 2, 2)
    with pytest.raises(InteractingHamiltonian):
        delta_total(bell_state(), h)


def test_delta_total_nonnegative_for_qubits(rng):
    for _ in range(200):
        assert delta_total(random_state(2, 2, None, rng), random_local_h(2, 2, rng)) >= -1e-12


def test_delta_total_spectral_oracle(rng):
    # non-interacting H: delta_T = E(P_pi) - E(P_rho), both from spectra
    s, h = random_state(2, 3, None, rng), random_local_h(2, 3, rng)
    levels = np.linalg.eigvalsh(h.total)
    expected = oracles.passive_energy_sorted(np.linalg.eigvalsh(product_of_marginals(s).rho), levels) - (
        oracles.passive_energy_sorted(np.linalg.eigvalsh(s.rho), levels)
    )
    assert delta_total(s, h) == pytest.approx(expected, abs=1e-12)


def test_delta_total_bounds(rng):
    prod, h = product_state(rng), local_h()
    lo, hi = delta_total_bounds(prod, h)
    assert lo <= 0.0 <= hi
    for _ in range(10):
        s, h = random_state(2, 2, None, rng), random_local_h(2, 2, rng)
        scale = 1 / default_beta(h)
        for beta in (0.5 / scale, 1 / scale, 2 / scale):
            assert delta_total_bounds(s, h, beta).contains(delta_total(s, h), 1e-7)


def test_delta_total_thermal_lower_bound():
    # P_rho thermal at beta: S(P_rho || rho_beta) = 0 and delta_T >= T / beta
    h = local_h(1.0, 1.3)
    beta = 0.9
    g = gibbs_state(h, beta).state
    u = random_unitary(4, make_rng(1))
    s = BipartiteState(u @ g @ u.conj().T, 2, 2)
    assert passive_gibbs_divergence(np.linalg.eigvalsh(s.rho), np.linalg.eigvalsh(h.total), beta) < 1e-12
    assert mutual_information(s) > 1e-3
    assert delta_total(s, h) >= mutual_information(s) / beta - 1e-9


@pytest.mark.parametrize("mu", [0.1, 0.3, 0.5])
@pytest.mark.parametrize("R", [0.5, 1.0, 2.0])
def test_delta_example_closed_form(mu, R):
    d = delta_discord(example_state(mu), example_hamiltonian(R, 0.7))
    assert d == pytest.approx(example_delta_low(mu, R, 0.7), abs=1e-5)


def test_delta_classical_input(rng):
    chi = random_classical(2, 3, rng)
    assert delta_discord(chi.as_state(), random_local_h(2, 3, rng), starts=8, closest_starts=8) == pytest.approx(
        0.0, abs=1e-9
    )


def test_delta_pure_examples(rng):
    h = local_h()
    prod = BipartiteState.from_ket(np.kron(random_state(2, 1, 1, rng).rho[:, 0], [1, 0]), 2, 2)
    assert delta_discord_pure(prod, h) == pytest.approx(0.0, abs=1e-12)
    assert delta_discord_pure(bell_state(), h) == pytest.approx(0.5, abs=1e-12)
    s = BipartiteState.from_ket([math.sqrt(0.8), 0, 0, math.sqrt(0.2)], 2, 2)
    assert delta_discord_pure(s, h) == pytest.approx(0.2, abs=1e-12)
    with pytest.raises(NotPure):
        delta_discord_pure(BipartiteState(np.eye(4) / 4, 2, 2), h)


def test_delta_pure_matches_optimizer(rng):
    for dims in ((2, 2), (2, 3)):
        for _ in range(3):
            s, h = random_pure_state(*dims, rng), random_local_h(*dims, rng)
            _, res = closest_for(s, h, starts=8, closest_starts=4)
            assert delta_discord(s, h, res.eta) == pytest.approx(delta_discord_pure(s, h), abs=1e-4)
            assert np.linalg.norm(res.eta.matrix - schmidt_dephasing(s).matrix) < 1e-6


def test_delta_classical_matches_ergotropies(rng):
    for dims in ((2, 2), (2, 3), (3, 3)):
        u_a, u_b = random_unitary(dims[0], rng), random_unitary(dims[1], rng)
        chi = ClassicalState(random_classical(*dims, rng).p, LocalBasisPair(u_a, u_b))
        h = random_local_h(*dims, rng)
        pi = product_of_marginals(chi.as_state())
        expected = ergotropy(chi.matrix, h) - ergotropy(pi.rho, h)
        assert delta_classical(chi, h) == pytest.approx(expected, abs=1e-10)


def test_delta_classical_sorted_table_vanishes():
    chi = ClassicalState(np.array([[0.4, 0.3], [0.2, 0.1]]), LocalBasisPair.computational(2, 2))
    assert delta_classical(chi, local_h(0.3, 0.8)) == pytest.approx(0.0, abs=1e-15)


def test_delta_classical_batch_matches_scalar(rng):
    p = np.stack([random_classical(2, 3, rng).p for _ in range(50)])
    ea = np.stack([random_local_spectra(2, rng) for _ in range(50)])
    eb = np.stack([random_local_spectra(3, rng) for _ in range(50)])
    batch = delta_classical_batch(p, ea, eb)
    for k in range(50):
        chi = ClassicalState(p[k], LocalBasisPair.computational(2, 3))
        h = BipartiteHamiltonian.non_interacting(np.diag(ea[k]), np.diag(eb[k]))
        assert batch[k] == pytest.approx(delta_classical(chi, h), abs=1e-14)


def test_two_qubit_partial_sums():
    rng = make_rng(2024)
    n = 10**4
    p = rng.standard_exponential((n, 4))
    p /= p.sum(axis=1, keepdims=True)
    table = p.reshape(n, 2, 2)
    r = -np.sort(-p, axis=1)
    q = -np.sort(-(table.sum(axis=2)[:, :, None] * table.sum(axis=1)[:, None, :]).reshape(n, 4), axis=1)
    assert np.min(r[:, 0] - r[:, 3] - q[:, 0] + q[:, 3]) >= -1e-10
    assert np.min(r[:, 0] + r[:, 1] - q[:, 0] - q[:, 1]) >= -1e-10


def test_counterexample():
    x = counterexample_x()
    np.testing.assert_allclose(x[[0, 2, 4]], [-0.0162, 0.014, 0.0022], atol=1e-10)
    np.testing.assert_allclose(x[[1, 3]], [0.0, 0.0], atol=1e-12)
    assert x[2] + x[4] >= 0
    assert abs(x[0] + x[2] + x[4]) <= 1e-12
    value = counterexample_delta_c(eps_a=(0.0, 0.6), eps_b=(0.0, 0.6, 1.0))
    assert value < 0
    # x-form with total levels (0, 0.6, 0.6, 1.0, 1.2, 1.6)
    assert value == pytest.approx(0.6 * x[0] + 0.4 * x[2] + 0.4 * x[4], abs=1e-14)


def test_abel_form_is_energy_difference(rng):
    for d in (4, 6, 9):
        r = np.sort(rng.standard_exponential(d))[::-1]
        q = np.sort(rng.standard_exponential(d))[::-1]
        r, q = r / r.sum(), q / q.sum()
        levels = np.sort(rng.uniform(0, 1, d))
        direct = float(np.dot(levels, q - r))
        assert abel_energy_difference(r, q, levels) == pytest.approx(direct, abs=1e-14)
        plus_sign = float(np.dot(levels[1:] + levels[:-1], x_coefficients(r, q)))
        assert abs(plus_sign - direct) > 1e-6


def test_delta_L_examples(rng):
    h = random_local_h(2, 2, rng)
    chi = random_classical(2, 2, rng)
    assert delta_L(chi.as_state(), h, chi) == pytest.approx(0.0, abs=1e-12)
    s = random_pure_state(2, 3, rng)
    assert delta_L(s, random_local_h(2, 3, rng), schmidt_dephasing(s)) == pytest.approx(0.0, abs=1e-10)
    s = example_state(0.7)
    _, res = closest_for(s, example_hamiltonian(1.0))
    assert delta_L(s, example_hamiltonian(1.0), res.eta) >= -1e-9


def test_delta_entanglement():
    h = local_h(1.3, 1.3)
    assert delta_entanglement(HorodeckiFamily(0.5), h) == pytest.approx(-0.0625 * 1.3, abs=1e-10)
    assert delta_entanglement(HorodeckiFamily(0.0), h) == pytest.approx(0.0, abs=1e-12)
    fam = HorodeckiFamily(1.0, "-")
    assert delta_entanglement(fam, h) == pytest.approx(delta_discord_pure(fam.state(), h), abs=1e-12)
    assert delta_entanglement(fam, h) == pytest.approx(0.65, abs=1e-12)
    assert delta_discord(fam.state(), h) == pytest.approx(delta_entanglement(fam, h), abs=1e-5)
    with pytest.raises(OutOfScopeFamily):
        delta_entanglement(BipartiteState(np.eye(4) / 4, 2, 2), h)


def test_delta_prime_examples(rng):
    chi = random_classical(2, 3, rng)
    h = random_local_h(2, 3, rng)
    assert delta_prime(chi.as_state(), h) == pytest.approx(0.0, abs=1e-10)
    assert delta_prime(product_state(rng, 2, 3), h) == pytest.approx(0.0, abs=1e-10)
    for _ in range(10):
        s, h = random_state(2, 2, None, rng), random_local_h(2, 2, rng)
        scale = 1 / default_beta(h)
        for beta in (0.5 / scale, 1 / scale, 2 / scale):
            assert delta_prime_bounds(s, h, beta).contains(delta_prime(s, h), 1e-7)


def test_tilde_contributions(rng):
    s, h = random_state(2, 2, None, rng), random_local_h(2, 2, rng)
    t = tilde_contributions(s, h, starts=8)
    assert t.tilde_T == pytest.approx(delta_total(s, h), abs=1e-8)
    assert t.tilde_D >= -1e-9 and t.tilde_E is None
    hh = local_h()
    assert tilde_contributions(HorodeckiFamily(0.5).state(), hh).tilde_E == pytest.approx(-0.0625, abs=1e-10)
    chi = random_classical(2, 2, rng)
    assert tilde_contributions(chi.as_state(), h, starts=8).tilde_D == pytest.approx(0.0, abs=1e-9)


def test_tilde_interacting(rng):
    h = BipartiteHamiltonian.general(random_state(4, 1, None, rng).rho * 3, 2, 2)
    t = tilde_contributions(random_state(2, 2, None, rng), h, starts=8)
    assert t.tilde_D >= -1e-9


def test_free_energy_gap(rng):
    h = local_h()
    assert free_energy_gap(product_state(rng), h, 1.0) == pytest.approx(0.0, abs=1e-10)
    assert free_energy_gap(bell_state(), h, 0.7) > 0.1
    for _ in range(100):
        s, h = random_state(2, 3, None, rng), random_local_h(2, 3, rng)
        assert free_energy_gap(s, h, default_beta(h)) >= -1e-9


def test_free_energy_gap_is_mutual_information(rng):
    # Gibbs state of a non-interacting H is a product, so the gap is T / beta
    s, h = random_state(2, 2, None, rng), random_local_h(2, 2, rng)
    assert free_energy_gap(s, h, 1.7) == pytest.approx(mutual_information(s) / 1.7, abs=1e-10)


def test_report_contract(rng):
    for dims in ((2, 2), (2, 3)):
        s, h = random_state(*dims, None, rng), random_local_h(*dims, rng)
        r = contribution_report(s, h, starts=8, closest_starts=8)
        assert r.delta >= -1e-9 and r.delta_L >= -1e-9 and r.delta_prime >= -1e-9
        assert r.ergotropy >= r.delta - 1e-9
        assert r.gap_EG - r.delta_T >= -1e-9
        assert r.decomposition_residual <= 1e-5
        assert r.prime_residual <= 1e-8
        assert r.delta_L_identity_residual <= 1e-6
        for name in ("delta_T", "delta", "delta_prime"):
            assert r.bounds[name].contains(getattr(r, name), 1e-7)
        assert r.delta_E is None
        assert set(r.scalars()) >= {"delta", "delta_T_lower", "measure_discord"}


def test_report_horodecki_has_delta_e():
    r = contribution_report(HorodeckiFamily(0.5).state(), local_h())
    assert r.delta_E == pytest.approx(-0.0625, abs=1e-10)


def test_local_unitary_invariance_fixed_h(rng):
    for _ in range(3):
        s, h = random_state(2, 3, None, rng), random_local_h(2, 3, rng)
        s2 = local_unitary(s, random_unitary(2, rng), random_unitary(3, rng))
        assert delta_total(s2, h) == pytest.approx(delta_total(s, h), abs=1e-10)
        assert delta_prime(s2, h) == pytest.approx(delta_prime(s, h), abs=1e-10)
        chi = random_classical(2, 3, rng)
        rotated = ClassicalState(chi.p, LocalBasisPair(random_unitary(2, rng), random_unitary(3, rng)))
        assert delta_classical(rotated, h) == pytest.approx(delta_classical(chi, h), abs=1e-14)


def test_covariance_under_joint_rotation(rng):
    s, h = random_state(2, 2, None, rng), random_local_h(2, 2, rng)
    u_a, u_b = random_unitary(2, rng), random_unitary(2, rng)
    s2 = local_unitary(s, u_a, u_b)
    h2 = BipartiteHamiltonian.non_interacting(u_a @ h.h_a @ u_a.conj().T, u_b @ h.h_b @ u_b.conj().T)
    a = contribution_report(s, h)
    b = contribution_report(s2, h2)
    for name in ("delta", "delta_T", "delta_C", "delta_L", "delta_prime"):
        assert getattr(b, name) == pytest.approx(getattr(a, name), abs=1e-5)


def test_discord_contribution_depends_on_rotation_at_fixed_h():
    # eta = Delta(rho) has a dephased B marginal; rotating it does not keep E(eta') = E(rho')
    s, h = example_state(0.3), example_hamiltonian(1.0)
    s2 = local_unitary(s, random_unitary(2, make_rng(7)), random_unitary(2, make_rng(8)))
    assert delta_discord(s, h) == pytest.approx(0.0, abs=1e-9)
    assert delta_discord(s2, h) > 1e-4


def test_zero_delta_means_classical_nondegenerate(rng):
    for _ in range(3):
        chi = random_classical(2, 2, rng)
        h = BipartiteHamiltonian.non_interacting(np.diag([0.0, 0.37]), np.diag([0.0, 1.0]))
        s = chi.as_state()
        _, res = closest_for(s, h, starts=8, closest_starts=8)
        d = delta_discord(s, h, res.eta)
        assert d <= 1e-9
        assert res.entropy - von_neumann_entropy(s.rho) <= 1e-6


def test_constrained_entropy_not_below_unconstrained(rng):
    s, h = random_state(2, 2, None, rng), random_local_h(2, 2, rng)
    chi, res = closest_for(s, h)
    assert res.entropy >= von_neumann_entropy(chi.matrix) - 1e-6
    assert res.entropy <= constrained_closest_classical(s, h, method="free").entropy + 1e-12
