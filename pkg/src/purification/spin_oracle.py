"""Dense reference evaluation of the effective two-replica spin chain.

Configurations are bit strings; bit ``i`` equal to 0 is the identity
permutation state ``|I>`` (spin up) on site ``i`` and 1 is the swap ``|S>``.
Everything here is exact diagonalization and is meant as an oracle for the
fast paths, so sizes are capped.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce

import numpy as np
from scipy import sparse
from scipy.special import logsumexp

from .errors import SizeError
from .replica_algebra import (
    SX,
    SZ,
    hermitian_pair_generator,
    measurement_operator,
    pair_generator,
    weingarten_s2,
    _spd_power,
)

MAX_DENSE_N = 14


@dataclass(frozen=True)
class ChainSpec:
    """Effective chain parameters.

    Parameters
    ----------
    N : int
        Number of sites, even and at least 2.
    g : float
        Dimensionless transverse field ``2 f / gamma``.
    gamma : float
        Overall rate; times are measured in units of ``1/gamma`` when 1.
    boundary : {"pbc", "obc"}
    d : int or None
        Local dimension for the Gram-weighted finite-``d`` chain, or None for
        the orthonormal ``d -> infinity`` limit.
    """

    N: int
    g: float
    gamma: float = 1.0
    boundary: str = "pbc"
    d: int | None = None

    def __post_init__(self):
        if self.N < 2 or self.N % 2:
            raise ValueError("N must be even and at least 2")
        if self.g < 0:
            raise ValueError("g must be non-negative")
        b = self.boundary.lower()
        if b not in ("pbc", "obc"):
            raise ValueError("boundary must be 'pbc' or 'obc'")
        object.__setattr__(self, "boundary", b)
        if self.d is not None and self.d < 2:
            raise ValueError("d must be at least 2")

    @property
    def periodic(self) -> bool:
        return self.boundary == "pbc"

    @property
    def f(self) -> float:
        return 0.5 * self.g * self.gamma


@dataclass(frozen=True)
class RegionSpec:
    """Subsets of input and output sites (0-based) forming region A."""

    A_in: frozenset = field(default_factory=frozenset)
    A_out: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "A_in", frozenset(self.A_in))
        object.__setattr__(self, "A_out", frozenset(self.A_out))


def _bonds(spec: ChainSpec):
    N = spec.N
    bonds = [(i, i + 1) for i in range(N - 1)]
    if spec.periodic and N > 2:
        bonds.append((N - 1, 0))
    return bonds


def _site(op, i, N):
    ops = [sparse.csr_matrix(op) if j == i else sparse.identity(len(op), format="csr")
           for j in range(N)]
    return reduce(lambda a, b: sparse.kron(a, b, format="csr"), ops)


def _two_site(op4, i, j, N):
    """Embed a 4x4 two-site operator acting on sites ``i, j``."""
    op = np.asarray(op4).reshape(2, 2, 2, 2)
    out = sparse.csr_matrix((2**N, 2**N))
    for a, b, c, e in zip(*np.nonzero(op)):
        Pi = np.zeros((2, 2))
        Pi[a, c] = 1
        Pj = np.zeros((2, 2))
        Pj[b, e] = 1
        out = out + op[a, b, c, e] * (_site(Pi, i, N) @ _site(Pj, j, N))
    return out


def build_effective_hamiltonian(spec: ChainSpec, hermitian: bool = False) -> np.ndarray:
    """Dense generator of the averaged dynamics on ``2^N`` configurations.

    For ``d = None`` this is the transverse-field Ising chain
    ``-(gamma/2)(sum sz sz + g sum sx)``. For finite ``d`` it is
    ``sum_bonds H_ij - f sum_i (M_i - 1)`` acting on coefficient vectors in
    the permutation basis; with ``hermitian=True`` the symmetric similarity
    transform is returned instead.
    """
    N = spec.N
    if N > MAX_DENSE_N:
        raise SizeError(f"dense construction limited to N <= {MAX_DENSE_N}")
    dim = 2**N
    H = sparse.csr_matrix((dim, dim))
    if spec.d is None:
        for i, j in _bonds(spec):
            H = H - 0.5 * spec.gamma * _site(SZ, i, N) @ _site(SZ, j, N)
        for i in range(N):
            H = H - 0.5 * spec.gamma * spec.g * _site(SX, i, N)
        return H.toarray()
    d = spec.d
    if hermitian:
        h2 = hermitian_pair_generator(spec.gamma, d)
    else:
        h2 = pair_generator(0.5 * spec.gamma * (d * d - 1) ** 2, d)
    M = measurement_operator(d)
    for i, j in _bonds(spec):
        H = H + _two_site(h2, i, j, N)
    for i in range(N):
        H = H - spec.f * (_site(M, i, N) - sparse.identity(dim))
    return H.toarray()


def _sector_hamiltonian(spec: ChainSpec, parity: int) -> np.ndarray:
    """TFIM restricted to the spin-flip sector ``C = parity``.

    Basis: ``(|s> + parity |~s>)/sqrt 2`` for ``s < 2^(N-1)``, with ``~s``
    the global flip of ``s``. Representative 0 is the aligned state.
    """
    N = spec.N
    half = 2 ** (N - 1)
    full = 2**N - 1
    s = np.arange(half)
    bits = (s[:, None] >> np.arange(N)) & 1
    spins = 1 - 2 * bits
    diag = np.zeros(half)
    for i, j in _bonds(spec):
        diag -= 0.5 * spec.gamma * spins[:, i] * spins[:, j]
    H = np.diag(diag)
    hx = -0.5 * spec.gamma * spec.g
    for i in range(N):
        r = s ^ (1 << i)
        flipped = r >= half
        sign = np.where(flipped, parity, 1)
        r = np.where(flipped, r ^ full, r)
        np.add.at(H, (r, s), hx * sign)
    return H


def _log_return_weight(spec: ChainSpec, parity: int, t) -> np.ndarray:
    """``log <a|exp(-t H)|a>`` for the aligned state ``a`` of one sector."""
    w, V = np.linalg.eigh(_sector_hamiltonian(spec, parity))
    p = V[0] ** 2
    t = np.atleast_1d(np.asarray(t, dtype=float))
    return logsumexp(-t[:, None] * w[None, :], b=p[None, :], axis=1)


def log_theta_dense(spec: ChainSpec, t) -> np.ndarray:
    """``log Theta`` by exact diagonalization of the two spin-flip sectors.

    ``Theta`` is the return weight of ``(|I..I> - |S..S>)/sqrt 2`` divided by
    that of ``(|I..I> + |S..S>)/sqrt 2``. With this orientation
    ``0 < Theta <= 1``.
    """
    if spec.d is not None:
        raise ValueError("theta_dense is defined for the d -> infinity chain")
    if spec.N > MAX_DENSE_N:
        raise SizeError(f"dense evaluation limited to N <= {MAX_DENSE_N}")
    out = _log_return_weight(spec, -1, t) - _log_return_weight(spec, +1, t)
    return out if np.ndim(t) else float(out[0])


def theta_dense(spec: ChainSpec, t):
    """``Theta`` from :func:`log_theta_dense`."""
    return np.exp(log_theta_dense(spec, t))


def _product_vector(sites, N, vI, vS):
    return reduce(np.kron, [vS if i in sites else vI for i in range(N)])


def entropy_matrix_element(spec: ChainSpec, t: float, region: RegionSpec) -> float:
    """Second Renyi entropy of region A from transfer-matrix elements.

    Evaluates ``-log |<Psi_out| T |Psi_in> / <I^N| T |Psi_in>|`` where
    ``Psi_in`` (``Psi_out``) has swap states on the input (output) sites of
    A and identity states elsewhere. For finite ``d`` bra and ket
    coefficient vectors are paired through the Gram matrix
    ``[[d^2, d], [d, d^2]]`` on every site.
    """
    N = spec.N
    if N > 12:
        raise SizeError("entropy_matrix_element limited to N <= 12")
    if not region.A_in and not region.A_out:
        return 0.0
    if t == 0:
        # plain overlaps, site by site
        G = np.eye(2) if spec.d is None else np.array(
            [[spec.d**2, spec.d], [spec.d, spec.d**2]], dtype=float)
        num = den = 0.0
        for i in range(N):
            col = 1 if i in region.A_in else 0
            num += np.log(G[1 if i in region.A_out else 0, col])
            den += np.log(G[0, col])
        return float(-(num - den))
    if spec.d is None:
        H = build_effective_hamiltonian(spec)
        vI, vS = np.array([1.0, 0.0]), np.array([0.0, 1.0])
    else:
        # <a| G T |b> = (W^-1/2 a)^T exp(-t Htilde) (W^-1/2 b), G = Wg^-1
        H = build_effective_hamiltonian(spec, hermitian=True)
        Wm = _spd_power(weingarten_s2(spec.d), -0.5)
        vI, vS = Wm[:, 0], Wm[:, 1]
    w, V = np.linalg.eigh(H)
    ket = V.T @ _product_vector(region.A_in, N, vI, vS)
    out = V.T @ _product_vector(region.A_out, N, vI, vS)
    ref = V.T @ _product_vector(frozenset(), N, vI, vS)
    ln_num, s_num = logsumexp(-t * w, b=out * ket, return_sign=True)
    ln_den, _ = logsumexp(-t * w, b=ref * ket, return_sign=True)
    if s_num == 0:
        return float("inf")
    return float(-(ln_num - ln_den))
