import sys

import numpy as np
import pytest

from ergocorr.qstate import BipartiteHamiltonian, BipartiteState, make_rng, random_local_spectra


@pytest.fixture
def rng():
    return make_rng(12345)


def bell_state(sign=1.0):
    return BipartiteState.from_ket([0.0, 1.0, sign, 0.0], 2, 2)


def qubit_h(eps=1.0):
    return np.diag([0.0, eps])


def local_h(eps_a=1.0, eps_b=1.0):
    return BipartiteHamiltonian.non_interacting(qubit_h(eps_a), qubit_h(eps_b))


def random_local_h(d_a, d_b, rng):
    return BipartiteHamiltonian.non_interacting(
        np.diag(random_local_spectra(d_a, rng)), np.diag(random_local_spectra(d_b, rng))
    )


def random_hermitian(n, rng, scale=1.0):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return scale * (a + a.conj().T) / 2


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
