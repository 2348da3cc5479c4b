"""Free-fermion evaluation of the two-replica chain.

Modes are ordered ``a = (a_0..a_{N-1}, a_0^dag..a_{N-1}^dag)``. A quadratic
generator is ``(1/2) a^dag D a`` and a Gaussian state ``rho[W]`` is
proportional to ``exp((1/2) a^dag W a)``. Its correlation matrix is
``Gamma_{mu nu} = 2 Tr(rho (a_mu)^dag a_nu) - delta_{mu nu} = tanh(W/2)``.

The mode ``a_i`` (``i >= 1``) measures the domain wall between sites ``i``
and ``i+1``; ``a_0`` pairs the two outermost Majorana operators of the chain.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .spin_oracle import ChainSpec

SATURATION = 40.0
RANK2_LIMIT = 1e-2


# ---------------------------------------------------------------------------
# entropy from Theta


def theta_to_entropy(theta):
    """``log((1 + Theta)/(1 - Theta))`` for ``0 <= Theta < 1``.

    For ``Theta`` very close to 1 use :func:`entropy_from_log_theta` or
    :func:`entropy_from_lnl`, which keep full relative precision.
    """
    theta = np.asarray(theta, dtype=float)
    if np.any(theta >= 1) or np.any(theta < 0):
        raise ValueError("Theta must lie in [0, 1)")
    out = np.log1p(theta) - np.log1p(-theta)
    return out if out.ndim else float(out)


def entropy_from_log_theta(log_theta):
    """Entropy from ``log Theta <= 0``; infinite at ``log Theta = 0``."""
    lt = np.asarray(log_theta, dtype=float)
    if np.any(lt > 0):
        raise ValueError("log Theta must be non-positive")
    z = -lt
    with np.errstate(divide="ignore"):
        out = np.log1p(np.exp(-z)) - np.log(-np.expm1(-z))
    return out if out.ndim else float(out)


def entropy_from_lnl(lnl):
    """Entropy from ``lnl = log(-log Theta)``.

    This form resolves ``Theta`` arbitrarily close to 1, where
    ``S ~ log 2 - lnl``.
    """
    lnl = np.asarray(lnl, dtype=float)
    small = lnl < -600
    z = np.exp(np.where(small, -600.0, lnl))
    with np.errstate(divide="ignore", over="ignore"):
        direct = np.log1p(np.exp(-z)) - np.log(-np.expm1(-z))
    out = np.where(small, np.log(2.0) - lnl, direct)
    return out if out.ndim else float(out)


def log_tanh(y):
    """``log tanh(y)`` for ``y > 0`` without loss at small or large ``y``."""
    y = np.asarray(y, dtype=float)
    u = np.exp(-2 * y)
    with np.errstate(divide="ignore", invalid="ignore"):
        # log(1 - u) loses relative accuracy for small u unless taken via log1p
        head = np.where(u < 0.5, np.log1p(-np.minimum(u, 0.5)), np.log(-np.expm1(-2 * y)))
    return head - np.log1p(u)


def lnl_tanh(y):
    """``log(-log tanh(y))`` for ``y > 0``, using ``-log tanh y = 2 artanh(e^-2y)``."""
    y = np.asarray(y, dtype=float)
    u = np.exp(-2 * y)
    big = u < 0.5
    us = np.where(big & (u > 0), u, 0.25)
    ratio = np.where(u > 0, np.arctanh(us) / us, 1.0)
    far = -2 * y + np.log(ratio)
    with np.errstate(divide="ignore", invalid="ignore"):
        near = np.log(np.log1p(u) - np.log(-np.expm1(-2 * np.where(big, 1.0, y)))) - np.log(2.0)
    return np.log(2.0) + np.where(big, far, near)


# ---------------------------------------------------------------------------
# generator


def _eta(N):
    eye = np.eye(N)
    zero = np.zeros((N, N))
    return np.block([[zero, eye], [eye, zero]])


def majorana_coupling(spec: ChainSpec, parity: int = 1) -> np.ndarray:
    """Coupling ``B`` of ``H = (i/2) sum_jk B_jk c_j d_k`` in site Majoranas.

    ``c_j`` and ``d_j`` are the two Majorana operators of site ``j`` with
    ``X_j = -i c_j d_j`` and ``Z_j Z_{j+1} = i c_j d_{j+1}``. The closing bond
    of a ring carries the spin-flip eigenvalue ``parity``.
    """
    N = spec.N
    s = spec.gamma  # (i/2) B c d = (B/2)(i c d): entries are twice the spin couplings
    B = np.zeros((N, N))
    B[np.arange(N), np.arange(N)] = s * spec.g
    B[np.arange(N - 1), np.arange(1, N)] = -s
    if spec.periodic:
        B[N - 1, 0] += s * parity
    return B


def _mode_maps(N):
    # a_0 = (c_{N-1} - i d_0)/2, a_i = (c_{i-1} - i d_i)/2
    p = np.concatenate([[N - 1], np.arange(N - 1)])
    q = np.arange(N)
    return p, q


@dataclass(frozen=True)
class GrandDynamicalMatrix:
    """``H = (1/2) a^dag D a + const`` in the ordering ``(a, a^dag)``."""

    N: int
    matrix: np.ndarray
    coupling: np.ndarray  # site-Majorana coupling B
    boundary: str
    parity: int

    def particle_hole_residual(self) -> float:
        eta = _eta(self.N)
        return float(np.max(np.abs(eta @ self.matrix.T @ eta + self.matrix)))


def grand_dynamical_matrix(spec: ChainSpec, parity: int = 1) -> GrandDynamicalMatrix:
    """Single-particle matrix of the effective chain.

    Mode ``a_i`` with ``i >= 1`` pairs the Majoranas across the bond
    ``(i-1, i)``, so its occupation ``(1 - Z_{i-1} Z_i)/2`` marks a domain
    wall there; ``a_0`` pairs the two chain ends and is empty in the
    spin-flip odd combination of the aligned states. For a ring ``parity`` selects the spin-flip sector
    (antiperiodic fermions for ``+1``, periodic for ``-1``); it is ignored
    for open chains.
    """
    if spec.d is not None:
        raise ValueError("the free-fermion form holds for d -> infinity only")
    B = majorana_coupling(spec, parity)
    p, q = _mode_maps(spec.N)
    Bm = -B[np.ix_(p, q)]
    S = 0.5 * (Bm + Bm.T)
    A = 0.5 * (Bm - Bm.T)
    D = np.block([[S, -A], [A, -S]])
    return GrandDynamicalMatrix(spec.N, D, B, spec.boundary, parity if spec.periodic else 0)


@dataclass(frozen=True)
class Spectrum:
    """``D = O diag(lam, -lam) O^T`` with ``O`` orthogonal and ``lam >= 0``."""

    lam: np.ndarray
    O: np.ndarray


def _refine_smallest(B, U, lam, Vt, iters: int = 3):
    """Inverse iteration for the smallest singular triplet of an upper
    bidiagonal ``B``, in place.

    Triangular solves with a bidiagonal matrix are componentwise backward
    stable, so the result keeps full relative accuracy even when the
    singular value is far below ``eps * ||B||`` (the open-chain edge mode).
    """
    j = int(np.argmin(lam))
    if np.any(np.diag(B) == 0):
        return  # exactly singular, the SVD already has the zero
    u = U[:, j].copy()
    for _ in range(iters):
        z = solve_triangular(B, u)
        v = z / np.linalg.norm(z)
        w = solve_triangular(B, v, trans="T")
        nw = np.linalg.norm(w)
        u = w / nw
    U[:, j] = u
    Vt[j] = v
    lam[j] = 1.0 / nw


def spectral_decomposition(D: GrandDynamicalMatrix) -> Spectrum:
    """Diagonalize ``D`` through the singular values of the Majorana coupling.

    Working with ``B = U diag(lam) V^T`` keeps the ``+-lam`` partners
    separated even when ``lam`` is far below machine precision, which a
    direct eigensolver of ``D`` would mix.
    """
    N = D.N
    U, lam, Vt = np.linalg.svd(D.coupling)
    if D.boundary == "obc":
        _refine_smallest(D.coupling, U, lam, Vt)
    p, q = _mode_maps(N)
    Up = U[p]
    Vp = Vt.T[q]
    top = 0.5 * np.vstack([Up - Vp, Up + Vp])
    O = np.hstack([top, _eta(N) @ top])
    resid = np.max(np.abs(O.T @ O - np.eye(2 * N)))
    if resid > 1e-10:
        raise np.linalg.LinAlgError(f"eigenbasis not orthogonal (residual {resid:.2e})")
    return Spectrum(lam, O)


# ---------------------------------------------------------------------------
# Gaussian states


def correlation_matrix(D, t: float, spectrum: Spectrum | None = None) -> np.ndarray:
    """``Gamma = tanh(-t D / 2)`` of the state ``exp(-t H)``.

    Modes with ``t lam > SATURATION`` are set to ``-+1`` exactly.
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    sp = spectrum if spectrum is not None else spectral_decomposition(D)
    x = -0.5 * t * sp.lam
    th = np.where(t * sp.lam > SATURATION, -1.0, np.tanh(x))
    diag = np.concatenate([th, -th])
    return (sp.O * diag) @ sp.O.T


def reference_correlation(N: int, flip_ends: bool = False) -> np.ndarray:
    """Correlation matrix of the mode vacuum, optionally with ``a_0`` filled.

    The vacuum is ``(|I..I> - |S..S>)/sqrt 2``; filling ``a_0`` gives
    ``(|I..I> + |S..S>)/sqrt 2``.
    """
    diag = np.concatenate([-np.ones(N), np.ones(N)])
    if flip_ends:
        diag[0] = 1.0
        diag[N] = -1.0
    return np.diag(diag)


def gaussian_overlap(G1: np.ndarray, G2: np.ndarray) -> float:
    """``log |Tr(rho rho')| = (1/2) log |det((1 + Gamma Gamma')/2)|``.

    Returns ``-inf`` when the matrix is singular to working precision.
    """
    G1 = np.asarray(G1, dtype=complex if np.iscomplexobj(G1) else float)
    if G1.shape != np.shape(G2):
        raise ValueError("correlation matrices must have matching size")
    M = 0.5 * (np.eye(len(G1)) + G1 @ G2)
    sign, logdet = np.linalg.slogdet(M)
    if sign == 0 or not np.isfinite(logdet) or logdet < np.log(1e-14) * len(M):
        return -np.inf
    return float(0.5 * logdet)


def gaussian_product(G1: np.ndarray, G2: np.ndarray) -> np.ndarray:
    """Correlation matrix of the normalized product ``rho rho'``.

    ``1 - (1 - Gamma)(1 + Gamma' Gamma)^-1 (1 - Gamma')``. With the
    convention ``Gamma = 2 Tr(rho a^dag a) - 1`` this ordering belongs to
    ``rho rho'``; swapping the arguments gives ``rho' rho``.
    """
    n = len(G1)
    eye = np.eye(n)
    M = eye + G2 @ G1
    cond = np.linalg.cond(M)
    if not np.isfinite(cond) or cond > 1e14:
        raise np.linalg.LinAlgError(f"1 + Gamma' Gamma is singular (condition {cond:.2e})")
    return eye - (eye - G1) @ np.linalg.solve(M, eye - G2)


def log_return_weight(spectrum: Spectrum, flip_ends: bool, t: float) -> float:
    """``log <psi| exp(-t H) |psi>``; see :func:`_relative_return_weight`."""
    return 0.5 * t * float(spectrum.lam.sum()) + _relative_return_weight(spectrum, flip_ends, t)


def _relative_return_weight(spectrum: Spectrum, flip_ends: bool, t: float) -> float:
    """``log <psi| exp(-t H) |psi> - t sum(lam)/2`` for a reference ``psi``.

    ``psi`` is the mode vacuum (``flip_ends=False``) or the vacuum with
    ``a_0`` filled. It is written as a Thouless state
    ``exp((1/2) b^dag Z b^dag)|0_b>`` over the Bogoliubov vacuum of matching
    parity, so the weight is ``|det(1 + A)| / |det(1 + Z)|`` with
    ``A = E Z E``, ``E = exp(-t lam / 2)`` and ``Z`` antisymmetric. The
    symmetric parts of ``1 + A`` and ``1 + Z`` are the identity, so nothing
    cancels even when the weight is exponentially small.
    """
    lam = spectrum.lam
    N = len(lam)
    R = np.eye(2 * N)
    if flip_ends:
        R[[0, N]] = R[[N, 0]]
    best = None
    for m in (None, int(np.argmin(lam))):
        O = spectrum.O.copy()
        lp = lam.copy()
        if m is not None:
            # particle-hole flip of the softest mode changes the vacuum parity
            O[:, [m, N + m]] = O[:, [N + m, m]]
            lp[m] = -lp[m]
        T = O.T @ R
        X, Y = T[:N, :N], T[:N, N:]
        sv = np.linalg.svd(X, compute_uv=False)
        if best is None or sv.min() > best[0]:
            best = (sv.min(), X, Y, lp, m)
    _, X, Y, lp, m = best
    Z = -np.linalg.solve(X.T, Y.T)
    x = -0.5 * t * lp
    # vacuum energy relative to the Bogoliubov ground state, kept apart
    # from -sum(lam)/2 so large t does not cost absolute accuracy
    e_vac = lam[m] if m is not None else 0.0
    # det(1 + A^T A)^(1/2) = |det(1 + A)| for antisymmetric A
    lz = np.linalg.slogdet(np.eye(N) + Z)[1]
    if m is None:
        ex = np.exp(x)
        la = np.linalg.slogdet(np.eye(N) + ex[:, None] * Z * ex[None, :])[1]
    else:
        # the flipped mode carries the only growing factor e^(x_m);
        # eliminate it by a Schur complement
        keep = np.arange(N) != m
        ex = np.exp(x[keep])
        Ap = ex[:, None] * Z[np.ix_(keep, keep)] * ex[None, :]
        v = Z[m, keep] * ex
        Mp = np.eye(N - 1) + Ap
        q = v @ np.linalg.solve(Mp, v)
        la = np.linalg.slogdet(Mp)[1] + np.logaddexp(0.0, 2 * x[m] + np.log(q) if q > 0 else -np.inf)
    return float(-t * e_vac + la - lz)


def _log_theta_rank2(D, sp, t, N):
    G = correlation_matrix(D, t, sp)
    M = np.eye(2 * N) + G @ reference_correlation(N)
    idx = [0, N]
    try:
        cols = np.linalg.solve(M, np.eye(2 * N)[:, idx])
    except np.linalg.LinAlgError:
        return np.inf  # exactly singular M: let the return weights take over
    X = 2 * cols[idx] - np.eye(2)
    det = X[0, 0] * X[1, 1] - X[0, 1] * X[1, 0]
    return -0.5 * np.log(abs(det)) if det != 0 else np.inf


def log_theta_correlation(spec: ChainSpec, t, spectrum: Spectrum | None = None):
    """``log Theta`` for the open chain from Gaussian overlaps.

    ``Theta = |Tr(rho(t) rho_odd)| / |Tr(rho(t) rho_even)|`` with the
    references the aligned states of the two spin-flip sectors; the odd one
    is the mode vacuum. Near ``Theta = 1`` the ratio is evaluated as
    ``-(1/2) log |det(2 [M^-1]_PP - 1)|`` with ``M = 1 + Gamma Gamma_vac``
    and ``P`` the two entries of the end mode, which keeps absolute accuracy
    near machine precision. Further out, where ``M`` becomes ill
    conditioned, the two return weights are evaluated separately with
    :func:`log_return_weight`.
    """
    if spec.periodic:
        raise ValueError("theta_correlation is for open chains; use pbc_analytics")
    D = grand_dynamical_matrix(spec)
    sp = spectrum if spectrum is not None else spectral_decomposition(D)
    N = spec.N
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.empty(ts.shape)
    for i, tv in enumerate(ts):
        if tv < 0:
            raise ValueError("t must be non-negative")
        if tv == 0:
            out[i] = 0.0
            continue
        val = _log_theta_rank2(D, sp, tv, N)
        if not abs(val) < RANK2_LIMIT:
            val = _relative_return_weight(sp, False, tv) - _relative_return_weight(sp, True, tv)
        out[i] = min(val, 0.0)
    return out if np.ndim(t) else float(out[0])


def theta_correlation(spec: ChainSpec, t):
    """``Theta`` from :func:`log_theta_correlation`."""
    return np.exp(log_theta_correlation(spec, t))
