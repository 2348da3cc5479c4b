"""Open-chain spectrum and the closed forms for Theta.

The bulk modes of the open chain are standing waves with wavevectors
``k_l`` solving ``tan(N k) = g sin k / (1 - g cos k)``; for ``g < 1`` one
more solution ``k_0 = iK`` is a Majorana edge mode with energy
``lam_0 ~ (1 - g^2) e^(-N K)``. Once the bulk modes have saturated, Theta
has an exact product form over the ``k_l``.

The constant part of that product is an alternating sum of O(1) terms that
cancels down to ``e^(-N K)``, so :func:`theta_exact_obc` evaluates it in
extended precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import mpmath
import numpy as np

from ._roots import bisect
from .errors import RootError, ValidationError
from .gaussian_fermions import entropy_from_log_theta
from .pbc_analytics import Asymptote

RESIDUAL_TOL = 1e-12


def quantization_residual(N: int, g: float, k):
    """``sin(N k)(1 - g cos k) - g sin k cos(N k)``, zero at the bulk wavevectors."""
    k = np.asarray(k, dtype=float)
    return np.sin(N * k) * (1 - g * np.cos(k)) - g * np.sin(k) * np.cos(N * k)


@dataclass(frozen=True)
class BulkRoots:
    k: np.ndarray
    residual: np.ndarray
    count: int


def bulk_wavevectors(N: int, g: float) -> BulkRoots:
    """Real solutions of ``tan(N k) = g sin k/(1 - g cos k)`` in ``(0, pi)``.

    For ``g < 1`` there is exactly one root between consecutive asymptotes
    ``pi (l -+ 1/2)/N``, ``l = 1..N-1``. For ``g >= 1`` the edge solution
    becomes real and the roots are located by a sign scan instead; the
    number found is reported in ``count``.
    """
    if N < 2 or N % 2:
        raise ValueError("N must be even and at least 2")
    if g < 0:
        raise ValueError("g must be non-negative")
    if g < 1:
        l = np.arange(1, N)
        lo = (l - 0.5) * np.pi / N
        hi = (l + 0.5) * np.pi / N
    else:
        grid = np.linspace(0, np.pi, 64 * N + 1)[1:-1]
        grid = np.concatenate([np.geomspace(1e-12, grid[0], 40)[:-1], grid])
        vals = quantization_residual(N, g, grid)
        idx = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]
        lo, hi = grid[idx], grid[idx + 1]
    k = bisect(lambda x: quantization_residual(N, g, x), lo, hi)
    res = np.abs(quantization_residual(N, g, k))
    if np.any(res > RESIDUAL_TOL):
        raise RootError(f"wavevector residual {res.max():.2e} above tolerance")
    return BulkRoots(np.asarray(k), res, int(np.size(k)))


@dataclass(frozen=True)
class EdgeMode:
    K: float
    delta: float  # -log g - K, exponentially small
    lam0: float
    asymptote: float  # (1 - g^2) e^(N log g)
    residual: float


def _edge_delta(N, g, dps=None):
    """Solve ``1 - e^(-delta) = 2 (1 - g cosh K) / (e^(2 N K) + 1)``,
    ``K = -log g - delta`` by fixed-point iteration."""
    if dps is None:
        K0 = -np.log(g)
        delta = 0.0
        for _ in range(100):
            K = K0 - delta
            new = -np.log1p(-2 * (1 - g * np.cosh(K)) / (np.exp(2 * N * K) + 1))
            if new == delta:
                break
            delta = new
        return K0, delta
    with mpmath.workdps(dps):
        gm = mpmath.mpf(g)
        K0 = -mpmath.log(gm)
        delta = mpmath.mpf(0)
        for _ in range(200):
            K = K0 - delta
            new = -mpmath.log1p(-2 * (1 - gm * mpmath.cosh(K)) / (mpmath.exp(2 * N * K) + 1))
            if abs(new - delta) <= abs(new) * mpmath.mpf(10) ** (-dps + 3):
                delta = new
                break
            delta = new
        return K0, delta


def edge_mode(N: int, g: float) -> EdgeMode:
    """Decay rate ``K`` and energy ``lam_0`` of the Majorana edge mode.

    ``k = iK`` turns the quantization condition into
    ``tanh(N K) = g sinh K / (1 - g cosh K)``, solved here for the small
    offset ``delta = -log g - K``. Then
    ``lam_0 = sqrt(1 + g^2 - 2 g cosh K) = sqrt(4 g sinh(K + delta/2) sinh(delta/2))``.
    """
    if not 0 < g < 1:
        raise ValueError("no edge mode for g >= 1")
    K0, delta = _edge_delta(N, g)
    K = K0 - delta
    lam0 = np.sqrt(4 * g * np.sinh(K0 - delta / 2) * np.sinh(delta / 2))
    resid = abs(np.tanh(N * K) - g * np.sinh(K) / (1 - g * np.cosh(K)))
    if resid > 1e-10:
        raise RootError(f"edge mode residual {resid:.2e}")
    return EdgeMode(float(K), float(delta), float(lam0), float((1 - g * g) * g**N), float(resid))


@dataclass(frozen=True)
class ObcSpectrum:
    N: int
    g: float
    k: np.ndarray
    lam: np.ndarray
    K: float | None
    lam0: float | None


def obc_spectrum(N: int, g: float) -> ObcSpectrum:
    """Bulk wavevectors and energies, plus the edge mode when ``g < 1``."""
    roots = bulk_wavevectors(N, g)
    lam = np.sqrt((1 - g) ** 2 + 4 * g * np.sin(roots.k / 2) ** 2)
    if g < 1 and g > 0:
        e = edge_mode(N, g)
        return ObcSpectrum(N, g, roots.k, lam, e.K, e.lam0)
    return ObcSpectrum(N, g, roots.k, lam, None, None)


def obc_eigenvectors(N: int, g: float) -> np.ndarray:
    """Orthogonal ``O = [[u, v], [v, u]]`` built from standing waves.

    With ``y = i - N/2`` the bulk column ``j`` has
    ``u_ij = cos(k_j y)/cos(k_j N/2)``, ``v_ij = sin(k_j y)/sin(k_j N/2)`` for
    odd ``j`` (sin/cos swapped for even ``j``), the end-mode row carries 2 in
    ``u`` (odd) or ``v`` (even), and column 0 is the edge mode ``k_0 = iK``.
    Columns are normalized numerically. For ``g >= 1`` the lowest real root
    plays the part of ``k_0``.
    """
    sp = obc_spectrum(N, g)
    m = N // 2
    y = np.arange(1, N) - m
    if sp.K is not None:
        ks = np.concatenate([[1j * sp.K], sp.k])
    else:
        if sp.k.size != N:
            raise RootError(f"expected {N} real roots for g >= 1, found {sp.k.size}")
        ks = sp.k.astype(complex)
    U = np.zeros((N, N))
    V = np.zeros((N, N))
    for j, k in enumerate(ks):
        c = np.real(np.cos(k * y) / np.cos(k * m))
        s = np.real(np.sin(k * y) / np.sin(k * m))
        if j == 0:
            V[1:, 0], U[1:, 0], V[0, 0] = c, s, 2.0
        elif j % 2:
            U[1:, j], V[1:, j], U[0, j] = c, s, 2.0
        else:
            U[1:, j], V[1:, j], V[0, j] = s, c, 2.0
    O = np.block([[U, V], [V, U]])
    O /= np.linalg.norm(O, axis=0)
    resid = np.max(np.abs(O.T @ O - np.eye(2 * N)))
    if resid > 1e-8:
        raise ValidationError("normalization", resid, "standing-wave columns are not orthonormal")
    return O


# ---------------------------------------------------------------------------
# exact product


@lru_cache(maxsize=256)
def _product_constant(N: int, g: float, digits: int = 25):
    """``(log_theta_at_t0, lam0, K)`` of the saturated product, as mpf at
    enough working precision to resolve the ``e^(-N K)`` cancellation."""
    roots = bulk_wavevectors(N, g)
    dps = digits + 10 + int(-N * math.log10(g))
    with mpmath.workdps(dps):
        gm = mpmath.mpf(g)

        def h(k):
            return mpmath.sin(N * k) * (1 - gm * mpmath.cos(k)) - gm * mpmath.sin(k) * mpmath.cos(N * k)

        ks = [mpmath.findroot(h, mpmath.mpf(float(k)), tol=mpmath.mpf(10) ** (-dps + 5)) for k in roots.k]
        K0, delta = _edge_delta(N, g, dps)
        K = K0 - delta
        lam0 = mpmath.sqrt(4 * gm * mpmath.sinh(K0 - delta / 2) * mpmath.sinh(delta / 2))
        ch = mpmath.cosh(K)
        total = mpmath.log(mpmath.tanh(N * K / 2)) - mpmath.log(mpmath.sinh(K))
        for l, k in enumerate(ks, start=1):
            term = mpmath.log(ch - mpmath.cos(k))
            total += term if l % 2 else -term
        return total, lam0, K, dps


def plateau_window(N: int, g: float) -> tuple[float, float]:
    """``(3/(1-g), 0.1/lam_0)``: bulk modes saturated, edge mode not yet."""
    return 3 / (1 - g), 0.1 / edge_mode(N, g).lam0


def theta_exact_obc(N: int, g: float, t) -> Asymptote:
    """Saturated-bulk product for the open chain.

    ``log Theta = -t lam_0 + log tanh(N K/2) - log sinh K
    + sum_{l odd} log(cosh K - cos k_l) - sum_{l even} log(cosh K - cos k_l)``.

    Exact once the bulk modes have saturated; ``valid`` marks ``t`` inside
    :func:`plateau_window`. The entropy is NaN where the formula gives
    ``log Theta > 0``, which happens before saturation.
    """
    if not 0 < g < 1:
        raise ValueError("the product form needs an edge mode, 0 < g < 1")
    c0, lam0, _, dps = _product_constant(N, g)
    with mpmath.workdps(dps):
        lt = float(c0 - mpmath.mpf(t) * lam0)
    lo, hi = plateau_window(N, g)
    S = entropy_from_log_theta(lt) if lt <= 0 else float("nan")
    return Asymptote(lt, float(S), bool(lo <= t <= hi))


def entropy_exact_obc(N: int, g: float, t: float) -> float:
    """Entropy from the saturated product with full relative precision."""
    c0, lam0, _, dps = _product_constant(N, g)
    with mpmath.workdps(dps):
        lt = c0 - mpmath.mpf(t) * lam0
        if lt >= 0:
            return float("nan")
        th = mpmath.exp(lt)
        return float(mpmath.log((1 + th) / (1 - th)))


def theta_vandermonde(N: int, g: float) -> float:
    """Saturated ``log Theta`` at ``t = 0`` from cosine/sine determinants.

    ``Theta = |tan(m k_0) det Cbar det S / (det Sbar det C)|`` with
    ``m = N/2``, ``k_0 = iK``, ``Cbar_{rj} = cos(r k_j)`` (``r = 0..m``, ``j``
    in ``{0} + odd``), ``C`` the same without ``k_0`` and ``r < m``,
    ``S_{rj} = sin(r k_j)`` (``r = 1..m-1``, ``j`` even) and ``Sbar`` with
    ``k_0`` added and ``r = 1..m``. Intended for small ``N``; the matrices
    become ill conditioned quickly.
    """
    sp = obc_spectrum(N, g)
    m = N // 2
    k0 = 1j * sp.K
    odd = sp.k[0::2]  # l = 1, 3, ...
    even = sp.k[1::2]  # l = 2, 4, ...
    kb = np.concatenate([[k0], odd])
    ks = np.concatenate([[k0], even])

    def ld(M):
        return np.linalg.slogdet(M)[1]

    r = np.arange(m + 1)[:, None]
    logdet = (
        ld(np.cos(r * kb[None, :]))
        + ld(np.sin(np.arange(1, m)[:, None] * even[None, :]))
        - ld(np.sin(np.arange(1, m + 1)[:, None] * ks[None, :]))
        - ld(np.cos(np.arange(m)[:, None] * odd[None, :]))
    )
    return float(logdet + np.log(np.abs(np.tan(m * k0))))


def theta_eigenvector_ratio(N: int, g: float) -> float:
    """Saturated ``log Theta`` at ``t = 0`` as a ratio of two minors of ``O``.

    ``Theta = det[[v_00, u_0j], [v_i0, u_ij]] / det[[v_00, v_0j], [u_i0, u_ij]]``
    with ``O`` from :func:`obc_eigenvectors`.
    """
    O = obc_eigenvectors(N, g)
    U, V = O[:N, :N], O[N:, :N]
    num = np.column_stack([V[:, 0], U[:, 1:]])
    den = np.vstack([V[0], np.column_stack([U[1:, 0], U[1:, 1:]])])
    return float(np.linalg.slogdet(num)[1] - np.linalg.slogdet(den)[1])


# ---------------------------------------------------------------------------
# asymptotics

PREFACTOR_VARIANTS = {"single": 1.0, "double": 2.0}


def t_c(N: int, g: float) -> float:
    """``2 sqrt(N / ((1 - g^2) pi))``, the onset of the asymptotic form."""
    return float(2 * np.sqrt(N / ((1 - g * g) * np.pi)))


@dataclass(frozen=True)
class ObcAsymptote:
    log_theta: float
    entropy: float  # closed form, no sqrt(N) constant
    entropy_from_theta: float  # entropy of the log Theta above
    t_c: float
    valid: bool


def mixed_asymptote_obc(N: int, g: float, t: float, variant: str = "single") -> ObcAsymptote:
    """Large-``N`` form for the open chain, ``g < 1``.

    ``log Theta = 2 e^(-N K)(c sqrt(N/pi) sqrt(1-g^2) - 1 - (1-g^2) t/2)``
    with ``c = 1`` (``variant="single"``) or ``c = 2`` (``"double"``), and
    ``S = N K - log t + log(2/(1-g^2))``, which keeps only the ``t``-linear
    part. ``entropy_from_theta`` is the entropy of the full ``log Theta`` and
    retains the ``sqrt(N)`` constant. ``valid`` marks ``t_c <= t <= e^(N K)``.
    """
    if not 0 < g < 1:
        raise ValueError("mixed phase requires 0 < g < 1")
    if variant not in PREFACTOR_VARIANTS:
        raise ValueError(f"variant must be one of {sorted(PREFACTOR_VARIANTS)}")
    c = PREFACTOR_VARIANTS[variant]
    K = -np.log(g)
    a = 1 - g * g
    lt = 2 * np.exp(-N * K) * (c * np.sqrt(N / np.pi) * np.sqrt(a) - 1 - a * t / 2)
    S = N * K - np.log(t) + np.log(2 / a)
    tc = t_c(N, g)
    S_theta = entropy_from_log_theta(lt) if lt < 0 else float("nan")
    return ObcAsymptote(float(lt), float(S), float(S_theta), tc, bool(tc <= t <= np.exp(N * K)))


def select_prefactor_variant(N: int, g: float, ts) -> str:
    """Prefactor variant whose ``log Theta`` is closer to the exact product."""
    err = {}
    for v in PREFACTOR_VARIANTS:
        err[v] = max(
            abs(mixed_asymptote_obc(N, g, t, v).log_theta - theta_exact_obc(N, g, t).log_theta)
            / abs(theta_exact_obc(N, g, t).log_theta)
            for t in ts
        )
    return min(err, key=err.get)


def late_time_obc(N: int, g: float, t: float) -> float:
    """``2 exp(-(1 - g^2) t e^(-N K))`` for ``t >~ e^(N K)``."""
    return float(2 * np.exp(-(1 - g * g) * t * g**N))
