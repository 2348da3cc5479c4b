"""Permutation-state algebra of the replicated, Haar-averaged circuit.

Permutations of ``k`` objects are stored as tuples in one-line notation,
``p[i]`` being the image of ``i``. Bases of ``V(S_k)`` are ordered
lexicographically, so the identity always has index 0 (for ``k = 2`` the
basis is ``(I, S)``).
"""

from __future__ import annotations

from functools import lru_cache
from itertools import permutations
from string import ascii_letters

import numpy as np
from scipy.linalg import expm

from .errors import SizeError

SX = np.array([[0.0, 1.0], [1.0, 0.0]])
SZ = np.diag([1.0, -1.0])
I2 = np.eye(2)


# ---------------------------------------------------------------------------
# permutation helpers


@lru_cache(maxsize=None)
def symmetric_group(k: int) -> tuple[tuple[int, ...], ...]:
    """All permutations of ``range(k)`` in lexicographic order."""
    return tuple(permutations(range(k)))


def compose(a, b) -> tuple[int, ...]:
    """``(a o b)[i] = a[b[i]]``."""
    return tuple(a[i] for i in b)


def inverse(a) -> tuple[int, ...]:
    out = [0] * len(a)
    for i, ai in enumerate(a):
        out[ai] = i
    return tuple(out)


def n_cycles(a) -> int:
    seen = [False] * len(a)
    count = 0
    for i in range(len(a)):
        if not seen[i]:
            count += 1
            j = i
            while not seen[j]:
                seen[j] = True
                j = a[j]
    return count


def hamming(a, b) -> int:
    """Number of points where ``a`` and ``b`` differ (non-fixed points of b^-1 a)."""
    return sum(x != y for x, y in zip(a, b))


def overlap(a, b, d: int) -> float:
    """``<a|b> = d^(#cycles(a b^-1))``."""
    return float(d) ** n_cycles(compose(a, inverse(b)))


def gram_matrix(k: int, d: int) -> np.ndarray:
    G = symmetric_group(k)
    return np.array([[overlap(a, b, d) for b in G] for a in G])


def weingarten(k: int, d: int) -> np.ndarray:
    """Weingarten matrix, the inverse of the Gram matrix (requires d >= k)."""
    if d < k:
        raise ValueError("Gram matrix is singular for d < k")
    return np.linalg.inv(gram_matrix(k, d))


def weingarten_s2(d: int) -> np.ndarray:
    """Two-replica Weingarten matrix ``[[d, -1], [-1, d]] / (d (d^2 - 1))``."""
    if d < 2:
        raise ValueError("d must be at least 2")
    return np.array([[d, -1.0], [-1.0, d]]) / (d * (d * d - 1.0))


def permutation_state(sigma, d: int) -> np.ndarray:
    """Vector ``|sigma>`` on ``k`` kets and ``k`` bras of one qudit.

    Legs are ordered (ket_1, bra_1, ..., ket_k, bra_k); ket ``r`` is
    contracted with bra ``sigma(r)``.
    """
    k = len(sigma)
    v = np.zeros((d,) * (2 * k))
    for idx in np.ndindex(*(d,) * k):
        legs = []
        for r in range(k):
            legs += [idx[r], idx[sigma[r]]]
        v[tuple(legs)] = 1.0
    return v.ravel()


def _spd_power(A: np.ndarray, p: float) -> np.ndarray:
    w, V = np.linalg.eigh(A)
    if np.any(w <= 0):
        raise ArithmeticError("Weingarten matrix is not positive definite")
    return (V * w**p) @ V.T


# ---------------------------------------------------------------------------
# two-replica generator


def pair_generator(omega: float, d: int) -> np.ndarray:
    """Averaged two-site generator ``omega (Wg (x) Wg)(1 - sz (x) sz)``.

    Basis order is (II, IS, SI, SS). The matrix is not symmetric; it acts on
    coefficient vectors in the non-orthogonal permutation basis.
    """
    Wg = weingarten_s2(d)
    return omega * np.kron(Wg, Wg) @ (np.eye(4) - np.kron(SZ, SZ))


def hermitize_generator(gen: np.ndarray, d: int) -> np.ndarray:
    """Similarity transform ``(Wg^-1/2)^(x)2 gen (Wg^1/2)^(x)2``."""
    Wg = weingarten_s2(d)
    Wp = _spd_power(Wg, 0.5)
    Wm = _spd_power(Wg, -0.5)
    out = np.kron(Wm, Wm) @ gen @ np.kron(Wp, Wp)
    return 0.5 * (out + out.T)


def hermitian_pair_generator(gamma: float, d: int) -> np.ndarray:
    """Closed form of the hermitized generator.

    ``(gamma/2)[1 - (d^2-1)/d^2 sz sz + sx sx / d^2 - (sx_1 + sx_2)/d]``.
    """
    return 0.5 * gamma * (
        np.eye(4)
        - (d * d - 1.0) / d**2 * np.kron(SZ, SZ)
        + np.kron(SX, SX) / d**2
        - (np.kron(SX, I2) + np.kron(I2, SX)) / d
    )


def measurement_operator(d: int) -> np.ndarray:
    """Projected single-site measurement map ``d/(d+1) (1 + sx)``."""
    return d / (d + 1.0) * (I2 + SX)


# ---------------------------------------------------------------------------
# measurement-extended space, per-site basis (I, S, X)


def x_state_energy(gamma: float, tumbling: float, d: int) -> np.ndarray:
    """2x2 energy matrix of a site next to an X-state neighbour."""
    c = tumbling * (d + 1) * (d * d - 1) / d**3 + gamma * (1 - (d + 1) / d**3)
    return c * I2 + gamma / d**2 * SX


def xx_energy(gamma: float, tumbling: float, d: int) -> float:
    """Energy of two neighbouring X states."""
    return gamma / d**2 * (1 - 2.0 / (d * (d * d - 1))) + 2 * tumbling / d**2 * (
        1 + (1 + d * d) / (d * (d * d - 1))
    )


def _embed3(A: np.ndarray) -> np.ndarray:
    out = np.zeros((3, 3))
    out[:2, :2] = A
    return out


def extended_pair_generator(gamma: float, tumbling: float, d: int) -> np.ndarray:
    """9x9 two-site generator on the (I, S, X) basis of each site.

    The X-free block is the averaged two-replica generator; configurations
    with one X carry the neighbour energy matrix, and XX costs a constant.
    """
    omega = 0.5 * gamma * (d * d - 1) ** 2
    P = np.zeros((3, 3))
    P[2, 2] = 1.0
    HX = _embed3(x_state_energy(gamma, tumbling, d))
    Hq = np.zeros((9, 9))
    gen = pair_generator(omega, d)
    idx = [0, 1, 3, 4]
    Hq[np.ix_(idx, idx)] = gen
    return (
        Hq
        + np.kron(P, HX)
        + np.kron(HX, P)
        + xx_energy(gamma, tumbling, d) * np.kron(P, P)
    )


def extended_measurement(d: int) -> np.ndarray:
    """Measurement map on (I, S, X): ``M|I> = M|S> = |O>``, ``M|O> = |O>``.

    Here ``|O> = |X> + d/(d+1)(|I> + |S>)``.
    """
    c = d / (d + 1.0)
    O = np.array([c, c, 1.0])
    return np.column_stack([O, O, (1 - d) / (d + 1.0) * O])


def o_frame(d: int) -> np.ndarray:
    """Columns express (I, S, O) in the (I, S, X) frame."""
    c = d / (d + 1.0)
    return np.array([[1.0, 0.0, c], [0.0, 1.0, c], [0.0, 0.0, 1.0]])


def _site_op(op, i, N, dim):
    mats = [np.eye(dim)] * N
    mats[i] = op
    out = mats[0]
    for m in mats[1:]:
        out = np.kron(out, m)
    return out


def _bond_op(op, i, N, dim):
    left = np.eye(dim**i)
    right = np.eye(dim ** (N - i - 2))
    return np.kron(np.kron(left, op), right)


def extended_chain_generator(N, gamma, f, d, tumbling) -> np.ndarray:
    """Open chain on ``3^N`` states: extended bonds plus ``-f sum (M_i - 1)``."""
    if 3**N > 3**6:
        raise SizeError("extended chain limited to N <= 6")
    h2 = extended_pair_generator(gamma, tumbling, d)
    M = extended_measurement(d)
    H = np.zeros((3**N, 3**N))
    for i in range(N - 1):
        H += _bond_op(h2, i, N, 3)
    for i in range(N):
        H -= f * (_site_op(M, i, N, 3) - np.eye(3**N))
    return H


def gamma_projection_deviation(N, gamma, f, d, t, tumbling_values) -> np.ndarray:
    """Distance between the full and the X-free-projected evolution.

    For each ``tumbling`` the operator 2-norm of
    ``P exp(-t H) P - exp(-t P H P)`` restricted to the X-free sector is
    returned. ``numpy.inf`` selects the projected dynamics itself and
    yields exactly zero.
    """
    if N > 6:
        raise SizeError("dense 3^N construction limited to N <= 6")
    keep = [
        i
        for i in range(3**N)
        if all((i // 3**s) % 3 != 2 for s in range(N))
    ]
    out = []
    for G in tumbling_values:
        if not np.isfinite(G) or t == 0:
            out.append(0.0)
            continue
        H = extended_chain_generator(N, gamma, f, d, G)
        full = expm(-t * H)[np.ix_(keep, keep)]
        proj = expm(-t * H[np.ix_(keep, keep)])
        out.append(float(np.linalg.norm(full - proj, 2)))
    return np.array(out)


# ---------------------------------------------------------------------------
# k-replica contraction and chain correction


def contraction_oracle(H, dt, k, kappa, eps, sigma, tau) -> complex:
    """``<kappa| <eps| (U (x) U*)^(x)k |sigma> |tau>`` with ``U = exp(-i H dt)``.

    ``H`` is a ``d^2 x d^2`` two-qudit matrix; ``kappa, sigma`` live on the
    first qudit and ``eps, tau`` on the second.
    """
    H = np.asarray(H, dtype=complex)
    d = int(round(np.sqrt(H.shape[0])))
    if d ** (4 * k) > 2e7:
        raise SizeError("contraction too large")
    U = expm(-1j * dt * H).reshape(d, d, d, d)
    Ub = U.conj()
    letters = iter(ascii_letters)
    a = [next(letters) for _ in range(k)]
    b = [next(letters) for _ in range(k)]
    i = [next(letters) for _ in range(k)]
    j = [next(letters) for _ in range(k)]
    terms, ops = [], []
    for r in range(k):
        terms.append(a[r] + b[r] + i[r] + j[r])
        ops.append(U)
    for r in range(k):
        terms.append(a[kappa[r]] + b[eps[r]] + i[sigma[r]] + j[tau[r]])
        ops.append(Ub)
    expr = ",".join(terms) + "->"
    return complex(np.einsum(expr, *ops, optimize="greedy"))


def dt2_coefficient(fun, dts=(1e-2, 5e-3, 2.5e-3), value0=None):
    """Richardson estimate of the ``dt^2`` coefficient of an even function.

    Parameters
    ----------
    fun : callable
        ``fun(dt)`` returning a scalar.
    dts : sequence of float
        Step sizes, each half the previous one.
    value0 : scalar, optional
        Exact value at ``dt = 0``; evaluated if not given.

    Returns
    -------
    c2 : complex
        Extrapolated ``dt^2`` coefficient.
    odd : float
        Largest odd-part magnitude ``|fun(dt) - fun(-dt)| / (2 dt^2)`` seen,
        a direct probe of odd powers relative to the ``dt^2`` scale.
    """
    f0 = fun(0.0) if value0 is None else value0
    c, odd = [], 0.0
    for h in dts:
        fp, fm = fun(h), fun(-h)
        c.append(((fp + fm) / 2 - f0) / h**2)
        odd = max(odd, float(np.max(np.abs(fp - fm))) / (2 * h**2))
    r1 = [(4 * c[n + 1] - c[n]) / 3 for n in range(len(c) - 1)]
    if len(r1) == 1:
        return r1[0], odd
    r2 = (16 * r1[1] - r1[0]) / 15
    return r2, odd


def chain_partition(sigma, kappa) -> list[int]:
    """Chain label of each box.

    Boxes ``0..k-1`` form B and ``k..2k-1`` form B-bar. Box ``i`` is joined
    to bar box ``sigma(i)`` at the bottom and to bar box ``kappa(i)`` at the
    top; chains are the connected components.
    """
    k = len(sigma)
    parent = list(range(2 * k))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i in range(k):
        for j in (sigma[i], kappa[i]):
            ri, rj = find(i), find(k + j)
            if ri != rj:
                parent[ri] = rj
    roots, labels = {}, []
    for x in range(2 * k):
        labels.append(roots.setdefault(find(x), len(roots)))
    return labels


def chain_count_matrices(kappa, eps, sigma, tau):
    """Shared-box counts ``M`` (B boxes) and ``Mbar`` (B-bar boxes)."""
    k = len(sigma)
    left = chain_partition(sigma, kappa)
    right = chain_partition(tau, eps)
    shape = (max(left) + 1, max(right) + 1)
    M = np.zeros(shape, dtype=int)
    Mb = np.zeros(shape, dtype=int)
    for x in range(k):
        M[left[x], right[x]] += 1
        Mb[left[k + x], right[k + x]] += 1
    return M, Mb


def replica_correction(k, kappa, eps, sigma, tau, d=2, omega=1.0):
    """Order-``dt^2`` correction of the averaged ``k``-replica transfer element.

    Returns
    -------
    norm2 : int
        ``||M - Mbar||_F^2``.
    coeff : float
        ``-(1/(2 d^4)) omega <kappa|sigma><eps|tau> ||M - Mbar||^2``.
    """
    assert len(kappa) == len(eps) == len(sigma) == len(tau) == k
    M, Mb = chain_count_matrices(kappa, eps, sigma, tau)
    norm2 = int(np.sum((M - Mb) ** 2))
    coeff = (
        -0.5 / d**4 * omega * overlap(kappa, sigma, d) * overlap(eps, tau, d) * norm2
    )
    return norm2, coeff


def transfer_from_contractions(H, dt, d=None) -> np.ndarray:
    """Two-replica transfer matrix on coefficients, ``(Wg (x) Wg) T*``.

    ``T*`` collects the 16 contraction values over (II, IS, SI, SS).
    """
    H = np.asarray(H)
    if d is None:
        d = int(round(np.sqrt(H.shape[0])))
    G = symmetric_group(2)
    pairs = [(x, y) for x in G for y in G]
    Ts = np.array(
        [[contraction_oracle(H, dt, 2, ke[0], ke[1], st[0], st[1]) for st in pairs]
         for ke in pairs]
    )
    Wg = weingarten_s2(d)
    return np.kron(Wg, Wg) @ Ts


# ---------------------------------------------------------------------------
# n-replica effective Hamiltonian


def replica_hamiltonian(n, N, gamma, f) -> np.ndarray:
    """Open-chain ``n``-replica Hamiltonian on ``(n!)^N`` states.

    ``(gamma/2) sum_i D(sigma_i, sigma_{i+1}) - f sum_i M_i`` with ``D`` the
    Hamming distance and ``M |tau> = sum_sigma |sigma>`` on each site.
    """
    G = symmetric_group(n)
    q = len(G)
    if q**N > 10**4:
        raise SizeError("replica Hamiltonian too large for dense construction")
    Dm = np.array([[hamming(a, b) for b in G] for a in G], dtype=float)
    pair = np.diag(Dm.ravel())
    M = np.ones((q, q))
    H = np.zeros((q**N, q**N))
    for i in range(N - 1):
        H += 0.5 * gamma * _bond_op(pair, i, N, q)
    for i in range(N):
        H -= f * _site_op(M, i, N, q)
    return H


def group_action(n, N, pi, side="left") -> np.ndarray:
    """Representation of global left or right multiplication by ``pi``."""
    G = symmetric_group(n)
    index = {p: i for i, p in enumerate(G)}
    q = len(G)
    R = np.zeros((q, q))
    for s in G:
        img = compose(pi, s) if side == "left" else compose(s, pi)
        R[index[img], index[s]] = 1.0
    out = R
    for _ in range(N - 1):
        out = np.kron(out, R)
    return out
