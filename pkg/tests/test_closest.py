import numpy as np
import pytest

from conftest import bell_state, local_h, random_local_h
from ergocorr.closest import (
    ConstrainedClassicalResult,
    HorodeckiFamily,
    check_horodecki_energy,
    classical_energy,
    constrained_closest_classical,
    constraint_curve_f,
    curve_roots,
    detect_horodecki,
    flag_discontinuities,
    horodecki_closest_separable,
    marginal_eigenbasis_dephasing,
)
from ergocorr.entropy import classical_entropy, discord_and_closest_classical
from ergocorr.errors import DimensionTooLarge, InfeasibleConstraint, OutOfScopeFamily, ValidationError
from ergocorr.ergotropy import energy
from ergocorr.experiments import example_hamiltonian, example_state
from ergocorr.qstate import (
    BipartiteHamiltonian,
    BipartiteState,
    ClassicalState,
    LocalBasisPair,
    dephase_by_product_basis,
    partial_trace,
    product_of_marginals,
    random_classical,
    random_pure_state,
    random_state,
    schmidt_decompose,
)


def computational_dephasing(s):
    return dephase_by_product_basis(s, LocalBasisPair.computational(s.d_a, s.d_b))


def test_curve_f_examples():
    assert constraint_curve_f(0.0, 0.0, 0.8, 1.3) == 0.0
    assert constraint_curve_f(0.5, 0.5, 0.75, 1.0) == pytest.approx(0.125, abs=1e-15)


def test_curve_f_is_energy_residual():
    # independent check: build the bases by hand and compare (E(eta) - E(rho)) / eps
    mu, R, eps = 0.7, 1.4, 0.9
    s, h = example_state(mu), example_hamiltonian(R, eps)
    for a, b in ((0.2, 0.3), (0.9, 0.05), (0.5, 0.77)):
        va = np.array([[np.sqrt(a), np.sqrt(1 - a)], [np.sqrt(1 - a), -np.sqrt(a)]])
        vb = np.array([[np.sqrt(b), np.sqrt(1 - b)], [np.sqrt(1 - b), -np.sqrt(b)]])
        eta = dephase_by_product_basis(s, LocalBasisPair(va, vb))
        resid = (classical_energy(eta, h) - energy(s, h)) / eps
        assert resid == pytest.approx(float(constraint_curve_f(a, b, mu, R)), abs=1e-12)


def test_curve_roots_nonempty():
    roots = curve_roots(0.7, 1.0, n_b=201, n_a=201)
    assert roots
    for a, b in roots[:: max(1, len(roots) // 20)]:
        assert abs(constraint_curve_f(a, b, 0.7, 1.0)) < 1e-10


def test_classical_input_returns_itself(rng):
    chi = ClassicalState(np.array([[0.5, 0.2], [0.2, 0.1]]), LocalBasisPair.computational(2, 2))
    res = constrained_closest_classical(chi.as_state(), local_h(1.0, 1.7))
    np.testing.assert_allclose(res.eta.matrix, chi.matrix, atol=1e-12)
    assert res.entropy == pytest.approx(classical_entropy(chi), abs=1e-12)


def test_pure_input_gives_schmidt_dephasing(rng):
    for dims in ((2, 2), (2, 3)):
        s = random_pure_state(*dims, rng)
        h = random_local_h(*dims, rng)
        res = constrained_closest_classical(s, h, starts=4)
        _, pair = schmidt_decompose(s)
        expected = dephase_by_product_basis(s, pair)
        assert np.linalg.norm(res.eta.matrix - expected.matrix) < 1e-6


def test_example_below_threshold_is_computational_dephasing():
    s = example_state(0.4)
    res = constrained_closest_classical(s, example_hamiltonian(2.0))
    np.testing.assert_allclose(res.eta.matrix, computational_dephasing(s).matrix, atol=1e-9)


def test_example_above_threshold_leaves_computational_basis():
    s = example_state(0.7)
    res = constrained_closest_classical(s, example_hamiltonian(1.0))
    assert np.linalg.norm(res.eta.matrix - computational_dephasing(s).matrix) > 0.1
    assert res.entropy < classical_entropy(computational_dephasing(s)) - 1e-3
    assert abs(res.energy_residual) <= 1e-8


@pytest.mark.parametrize("mu", [0.58, 0.7, 0.85])
def test_curve_and_penalty_agree(mu):
    s, h = example_state(mu), example_hamiltonian(1.0)
    curve = constrained_closest_classical(s, h, method="curve")
    penalty = constrained_closest_classical(s, h, method="penalty", starts=16)
    assert "curve" in curve.candidates
    assert curve.entropy == pytest.approx(penalty.entropy, abs=1e-5)


def test_invariants_on_random_states(rng):
    for dims in ((2, 2), (2, 3)):
        for _ in range(3):
            s = random_state(*dims, None, rng)
            h = random_local_h(*dims, rng)
            _, chi = discord_and_closest_classical(s, starts=8)
            res = constrained_closest_classical(s, h, starts=8, extra=[chi])
            assert isinstance(res, ConstrainedClassicalResult)
            assert abs(classical_energy(res.eta, h) - energy(s, h)) <= 1e-8
            assert res.entropy >= classical_entropy(chi) - 1e-6
            assert res.entropy <= classical_entropy(marginal_eigenbasis_dephasing(s)) + 1e-9


def test_more_starts_never_worse(rng):
    s = random_state(2, 3, None, rng)
    h = random_local_h(2, 3, rng)
    few = constrained_closest_classical(s, h, starts=4, seed=1)
    many = constrained_closest_classical(s, h, starts=16, seed=1)
    assert many.entropy <= few.entropy + 1e-12


def test_interacting_infeasible_raises():
    # an entangled ground state sits below every product-state energy, hence below every dephasing
    coupling = -0.5 * np.kron([[0, 1], [1, 0]], [[0, 1], [1, 0]])
    h = BipartiteHamiltonian.general(np.diag([0.0, 1.0, 1.0, 2.0]) + coupling, 2, 2)
    ground = np.linalg.eigh(h.total)[1][:, 0]
    with pytest.raises(InfeasibleConstraint):
        constrained_closest_classical(BipartiteState.from_ket(ground, 2, 2), h, starts=4)


def test_scope_errors(rng):
    s = BipartiteState(np.eye(10) / 10, 2, 5)
    h = BipartiteHamiltonian.non_interacting(np.diag([0.0, 1.0]), np.diag(np.arange(5.0)))
    with pytest.raises(DimensionTooLarge):
        constrained_closest_classical(s, h)
    with pytest.raises(ValidationError):
        constrained_closest_classical(random_state(2, 3, None, rng), random_local_h(2, 3, rng), method="curve")


def test_flag_discontinuities():
    s = example_state(0.3)
    near = computational_dephasing(s)
    far = computational_dephasing(example_state(0.9))
    mk = lambda c: ConstrainedClassicalResult(c, classical_entropy(c), 0.0, 0)
    flags = [r.discontinuity_flag for r in flag_discontinuities([mk(near), mk(near), mk(far), mk(far)])]
    assert flags == [False, False, True, False]


def test_marginal_dephasing_examples(rng):
    h = random_local_h(2, 3, rng)
    s = random_state(2, 3, None, rng)
    chi_p = marginal_eigenbasis_dephasing(s)
    assert classical_energy(chi_p, h) == pytest.approx(energy(s, h), abs=1e-10)
    np.testing.assert_allclose(product_of_marginals(chi_p.as_state()).rho, product_of_marginals(s).rho, atol=1e-10)
    bell = marginal_eigenbasis_dephasing(bell_state())
    np.testing.assert_allclose(np.sort(bell.p.ravel()), [0, 0, 0.5, 0.5], atol=1e-12)
    chi = random_classical(2, 2, rng)
    np.testing.assert_allclose(marginal_eigenbasis_dephasing(chi.as_state()).matrix, chi.matrix, atol=1e-10)


def test_marginal_dephasing_example_state():
    s = example_state(0.3)
    chi_p = marginal_eigenbasis_dephasing(s)
    vb = np.linalg.eigh(partial_trace(s, "B"))[1]
    expected = dephase_by_product_basis(s, LocalBasisPair(np.eye(2), vb))
    np.testing.assert_allclose(chi_p.matrix, expected.matrix, atol=1e-10)


def test_horodecki_family():
    fam = HorodeckiFamily(0.5)
    assert np.trace(fam.state().rho).real == pytest.approx(1.0)
    np.testing.assert_allclose(horodecki_closest_separable(HorodeckiFamily(0.0)).rho, np.diag([1.0, 0, 0, 0]))
    sigma = horodecki_closest_separable(fam).rho
    psi = fam.psi
    assert np.real(psi.conj() @ sigma @ psi) == pytest.approx(6 / 16, abs=1e-15)
    assert sigma[0, 0].real == pytest.approx(9 / 16) and sigma[3, 3].real == pytest.approx(1 / 16)
    h = local_h()
    assert energy(fam.state(), h) == pytest.approx(0.5, abs=1e-15)
    assert energy(sigma, h) == pytest.approx(0.5, abs=1e-15)
    with pytest.raises(ValidationError):
        HorodeckiFamily(1.5)


@pytest.mark.parametrize("sign", ["+", "-"])
def test_horodecki_energy_on_grid(sign):
    h = local_h(0.8, 0.8)
    for p in np.arange(0.0, 1.0001, 0.05):
        fam = HorodeckiFamily(float(p), sign)
        sigma = check_horodecki_energy(fam, h)
        assert abs(energy(sigma, h) - energy(fam.state(), h)) <= 1e-12
        assert np.linalg.eigvalsh(sigma.rho).min() >= -1e-15


def test_horodecki_detection():
    fam = detect_horodecki(HorodeckiFamily(0.3, "-").state())
    assert fam.sign == "-" and fam.p == pytest.approx(0.3, abs=1e-14)
    assert detect_horodecki(BipartiteState(np.eye(4) / 4, 2, 2)) is None


def test_horodecki_energy_any_local_hamiltonian():
    fam = HorodeckiFamily(0.5)
    h = local_h(1.0, 2.0)
    assert energy(check_horodecki_energy(fam, h), h) == pytest.approx(energy(fam.state(), h), abs=1e-12)


def test_horodecki_energy_mismatch_under_coupling():
    flip = np.zeros((4, 4))
    flip[1, 2] = flip[2, 1] = 0.3
    h = BipartiteHamiltonian.general(local_h().total + flip, 2, 2)
    with pytest.raises(OutOfScopeFamily):
        check_horodecki_energy(HorodeckiFamily(0.5), h)
