"""Dense Fock-space reference for the Gaussian-state formulas.

Only meant for a handful of modes; used to pin conventions and in tests.
"""

from __future__ import annotations

from functools import reduce

import numpy as np
from scipy.linalg import expm

_Z = np.diag([1.0, -1.0])
_LOWER = np.array([[0.0, 1.0], [0.0, 0.0]])  # |0><1| with |0> empty


def annihilators(N: int) -> list[np.ndarray]:
    """Jordan-Wigner annihilation operators on ``2^N`` dimensions."""
    out = []
    for j in range(N):
        ops = [_Z] * j + [_LOWER] + [np.eye(2)] * (N - j - 1)
        out.append(reduce(np.kron, ops))
    return out


def mode_vector(N: int) -> list[np.ndarray]:
    """``(a_0..a_{N-1}, a_0^dag..a_{N-1}^dag)``."""
    a = annihilators(N)
    return a + [x.T.conj() for x in a]


def quadratic_form(W: np.ndarray) -> np.ndarray:
    """``(1/2) alpha^dag W alpha`` as a dense operator."""
    alpha = mode_vector(len(W) // 2)
    dag = [x.T.conj() for x in alpha]
    n = len(alpha)
    return 0.5 * sum(W[m, k] * dag[m] @ alpha[k] for m in range(n) for k in range(n))


def gaussian_state(W: np.ndarray) -> np.ndarray:
    """Normalized ``exp((1/2) alpha^dag W alpha)``."""
    rho = expm(quadratic_form(W))
    return rho / np.trace(rho)


def correlation(rho: np.ndarray) -> np.ndarray:
    """``Gamma_{mu nu} = 2 Tr(rho alpha_mu^dag alpha_nu) - delta`` (normalized rho)."""
    alpha = mode_vector(int(np.log2(len(rho))))
    n = len(alpha)
    rho = rho / np.trace(rho)
    G = np.empty((n, n), dtype=complex)
    for m in range(n):
        dm = alpha[m].T.conj()
        for k in range(n):
            G[m, k] = 2 * np.trace(rho @ dm @ alpha[k])
    G -= np.eye(n)
    return G.real if np.allclose(G.imag, 0, atol=1e-13) else G


def random_generator(N: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    """Random real particle-hole symmetric Hermitian ``W = [[A, B], [-B, -A]]``."""
    A = rng.normal(scale=scale, size=(N, N))
    A = 0.5 * (A + A.T)
    B = rng.normal(scale=scale, size=(N, N))
    B = 0.5 * (B - B.T)
    return np.block([[A, B], [-B, -A]])
