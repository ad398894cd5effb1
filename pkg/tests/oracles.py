"""Reference implementations that share no code with the package.

numpy/scipy dense routines stand in for the Jacobi solver, matrix
logarithms for the spectral shortcuts, permutations and random unitaries for
the passive-state construction, and a dense angle grid for the discord search.
"""

import itertools

import numpy as np
from scipy.linalg import logm
from scipy.stats import unitary_group


def eigh(m):
    return np.linalg.eigh(m)


def entropy(m):
    w = np.linalg.eigvalsh(m)
    w = w[w > 1e-15]
    return float(-np.sum(w * np.log(w)))


def relative_entropy_logm(rho, eta):
    """Full-rank eta only."""
    return float(np.real(np.trace(rho @ (logm(rho + 1e-300 * np.eye(len(rho))) - logm(eta)))))


def passive_energy_permutations(rho, h):
    """min over permutations of sum_k eps_k r_sigma(k)."""
    r = np.linalg.eigvalsh(rho)
    eps = np.linalg.eigvalsh(h)
    return min(float(np.dot(eps, r[list(p)])) for p in itertools.permutations(range(len(r))))


def min_energy_random_unitaries(rho, h, count, seed):
    us = unitary_group.rvs(len(rho), size=count, random_state=seed)
    return float(np.min(np.real(np.einsum("kij,jl,klm,mi->k", us, rho, us.conj().transpose(0, 2, 1), h))))


def gibbs(h, beta):
    w, v = np.linalg.eigh(h)
    p = np.exp(-beta * (w - w.min()))
    p /= p.sum()
    return (v * p) @ v.conj().T


def partial_trace_b(rho, d_a, d_b):
    return np.trace(rho.reshape(d_a, d_b, d_a, d_b), axis1=1, axis2=3)


def partial_trace_a(rho, d_a, d_b):
    return np.trace(rho.reshape(d_a, d_b, d_a, d_b), axis1=0, axis2=2)


def qubit_vector(theta, phi):
    return np.array([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)])


def qubit_pair_basis(theta, phi):
    v = qubit_vector(theta, phi)
    w = np.array([-np.conj(v[1]), np.conj(v[0])])
    return np.column_stack([v, w])


def grid_dephased_entropy_min(rho, points=13):
    """Two-qubit brute force: lowest dephased entropy over a tensor grid of local bases."""
    thetas = np.linspace(0, np.pi, points)
    phis = np.linspace(0, 2 * np.pi, points, endpoint=False)
    bases = np.array([qubit_pair_basis(t, f) for t in thetas for f in phis])
    w = np.einsum("aij,bkl->abikjl", bases, bases).reshape(len(bases), len(bases), 4, 4)
    p = np.real(np.einsum("abik,ij,abjk->abk", w.conj(), rho, w))
    p = np.clip(p, 1e-300, None)
    return float(np.min(-np.sum(p * np.log(p), axis=-1)))


def passive_energy_sorted(spectrum, levels):
    return float(np.dot(np.sort(levels), np.sort(spectrum)[::-1]))
