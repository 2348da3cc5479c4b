"""Closed-chain evaluation of Theta and the purification entropy.

Two exact routes are provided: the product over momentum sectors and the
infinite product over the positive zeros ``x_q`` of the analytically
continued sector factor. The second keeps full relative precision when
``Theta`` is exponentially close to 1, which the momentum product cannot.
Asymptotic forms for the mixed phase (``g < 1``), the purifying phase
(``g > 1``) and the critical point (``g = 1``) are included.

Times are in units of ``1/gamma``; pass ``gamma * t`` for other units.
"""

from __future__ import annotations

from dataclasses import dataclass

import mpmath
import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import logsumexp

from ._roots import bisect
from .errors import RootError
from .gaussian_fermions import entropy_from_lnl, lnl_tanh

MAX_ROOTS = 200_000


def dispersion(g, k):
    """Single-particle energy ``sqrt(1 + g^2 - 2 g cos k)``."""
    g = np.asarray(g, dtype=float)
    k = np.asarray(k, dtype=float)
    # (1 - g)^2 + 4 g sin^2(k/2) avoids cancellation near g = 1, k = 0
    return np.sqrt((1 - g) ** 2 + 4 * g * np.sin(k / 2) ** 2)


def theta_factor(g, k, t):
    """``log theta(k, t)`` of a single momentum pair.

    ``theta = cosh(lam t) [1 + tanh(lam t) (1 - g cos k) / lam]``, evaluated as
    ``lam t + log((1 + A)/2 + exp(-2 lam t)(1 - A)/2)`` with
    ``A = (1 - g cos k)/lam``. At ``lam = 0`` the limit
    ``log(1 + t (1 - g cos k))`` is used.
    """
    g, k, t = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (g, k, t)))
    lam = dispersion(g, k)
    c = 1 - g * np.cos(k)
    small = lam * t < 1e-8
    lam_s = np.where(small, 1.0, lam)
    A = np.clip(c / lam_s, -1.0, 1.0)
    e = np.exp(-2 * lam_s * t)
    with np.errstate(divide="ignore"):
        regular = lam_s * t + np.log((1 + A) / 2 + e * (1 - A) / 2)
    with np.errstate(invalid="ignore"):
        limit = np.log1p(t * c)
    out = np.where(small, limit, regular)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class MomentumGrid:
    """Momenta of one spin-flip sector of the closed chain.

    The even sector (``C = +1``) has antiperiodic fermions with
    ``k = l pi / N`` for odd ``l``; the odd sector has even ``l`` plus the
    special modes ``k = 0, pi``.
    """

    N: int
    parity: int

    @property
    def k(self) -> np.ndarray:
        N = self.N
        if self.parity > 0:
            return np.arange(1, N, 2) * np.pi / N
        return np.arange(2, N - 1, 2) * np.pi / N


def theta_product(N: int, g: float, t: float) -> float:
    """``log Theta`` from the momentum-sector product.

    ``log Theta = t + sum_{l even} log theta(k_l) - sum_{l odd} log theta(k_l)``
    with ``k_l = l pi / N``; the ``+t`` comes from the ``k = 0, pi`` modes of
    the odd sector.
    """
    if N % 2:
        raise ValueError("N must be even")
    if t == 0 or g == 0:
        return 0.0
    odd = theta_factor(g, MomentumGrid(N, -1).k, t)
    even = theta_factor(g, MomentumGrid(N, +1).k, t)
    terms = np.concatenate([[t], np.atleast_1d(odd), -np.atleast_1d(even)])
    # sum large terms pairwise to limit cancellation
    return float(np.sum(np.sort(terms)))


# ---------------------------------------------------------------------------
# zeros of the continued sector factor


def _parts(g, x):
    """``eps^2 = 2 g cosh x - 1 - g^2`` and ``g cosh x - 1``, cancellation free."""
    xb = abs(np.log(g))
    eps2 = 4 * g * np.sinh((x + xb) / 2) * np.sinh((x - xb) / 2)
    c = 2 * g * np.sinh(x / 2) ** 2 + (g - 1)
    return eps2, c


def phase_function(g, t, x):
    """``t eps(x) + phi(x)`` with ``tan phi = (g cosh x - 1)/eps``.

    Defined above the branch point ``|log g|`` where ``eps`` is real; the
    phase uses the two-argument arctangent so it is continuous there.
    """
    eps2, c = _parts(g, x)
    eps = np.sqrt(np.maximum(eps2, 0.0))
    return t * eps + np.arctan2(c, eps)


def _inner_function(g, t, x):
    """Zero condition below the branch point for ``g > 1``.

    Below ``log g`` the energy is imaginary, ``eps = i kappa``, and zeros solve
    ``tanh(t kappa)(g cosh x - 1) = kappa``. Rewritten as
    ``log(g^2 sinh^2 x) - log(c + kappa) - log(2c) + log(1 + e^(2 t kappa))``
    to stay well conditioned when the root approaches 0.
    """
    eps2, c = _parts(g, x)
    kappa = np.sqrt(np.maximum(-eps2, 0.0))
    return (
        2 * np.log(g * np.sinh(x))
        - np.log(c + kappa)
        - np.log(2 * c)
        + np.logaddexp(0.0, 2 * t * kappa)
    )


@dataclass(frozen=True)
class RootSet:
    """Positive zeros ``x_q`` of the continued sector factor."""

    g: float
    t: float
    x: np.ndarray
    residual: np.ndarray
    inner: bool = False  # True when x_0 lies below the branch point (g > 1)


def _inner_root(g, t):
    """Root in ``(0, log g)`` for ``g > 1``, or None."""
    xb = np.log(g)
    # sign change search on a grid that resolves roots near 0
    grid = np.concatenate([np.geomspace(1e-300, 1e-3 * xb, 300), np.linspace(1e-3 * xb, xb, 400)[1:-1]])
    vals = _inner_function(g, t, grid)
    idx = np.nonzero((vals[:-1] < 0) & (vals[1:] > 0))[0]
    if idx.size == 0:
        return None
    i = idx[0]
    root = bisect(lambda x: _inner_function(g, t, x), grid[i], grid[i + 1], log_space=True)
    return float(root)


def _upper_brackets(g, t, xb, targets):
    hi = np.full(targets.shape, xb + 1.0)
    for _ in range(200):
        low = phase_function(g, t, hi) <= targets
        if not np.any(low):
            return hi
        hi = np.where(low, xb + 2 * (hi - xb), hi)
    raise RootError("could not bracket quantization roots")


def quantization_roots(g: float, t: float, q_max: int) -> RootSet:
    """Zeros ``x_0 < x_1 < ...`` of the continued sector factor, ``q <= q_max``.

    Above the branch point ``x_b = |log g|`` they solve
    ``t sqrt(2 g cosh x - 1 - g^2) + phi(x) = pi (q + 1/2)``. For ``g > 1`` and
    ``t > 2/(g^2 - 1)`` the lowest zero lies below ``x_b`` instead.

    Parameters
    ----------
    g : float
        Field, positive.
    t : float
        Time, non-negative.
    q_max : int
        Largest index returned.
    """
    if g <= 0:
        raise ValueError("g must be positive")
    if t == 0:
        return RootSet(g, t, np.empty(0), np.empty(0))
    xb = abs(np.log(g))
    q = np.arange(q_max + 1)
    targets = np.pi * (q + 0.5)
    lo = np.full(targets.shape, xb)
    inner = None
    if g > 1:
        # F(x_b) = pi/2; it first dips below pi/2 when t < 2/(g^2 - 1)
        inner = _inner_root(g, t)
        if inner is None:
            hi0 = _upper_brackets(g, t, xb, targets[:1])[0]
            res = minimize_scalar(
                lambda x: phase_function(g, t, x), bounds=(xb, hi0), method="bounded",
                options={"xatol": 1e-14},
            )
            lo[0] = res.x
        else:
            targets = targets[:-1] + np.pi  # q >= 1 above the branch point
            lo = lo[:-1]
    hi = _upper_brackets(g, t, xb, targets)
    x = bisect(lambda y: phase_function(g, t, y) - targets, lo, hi)
    resid = np.abs(phase_function(g, t, x) - targets)
    if inner is not None:
        x = np.concatenate([[inner], x])
        resid = np.concatenate([[abs(_inner_function(g, t, inner))], resid])
    return RootSet(g, t, x, resid, inner is not None)


def roots_needed(N: int, g: float, t: float) -> float:
    """Rough count of zeros whose ``tanh`` factor matters at double precision."""
    xb = abs(np.log(g))
    # terms fall like e^(-N x); relative 1e-17 needs N (x - x_b) of about 40
    eps2, _ = _parts(g, xb + 40.0 / N + 2.0)
    return float(t * np.sqrt(eps2) / np.pi + 64)


def root_lnl(N: int, g: float, t: float) -> float:
    """``log(-log Theta)`` from the zero product ``Theta = prod tanh(N x_q / 2)``.

    Raises RootError when more than ``MAX_ROOTS`` zeros would be needed; see
    :func:`product_lnl_mp` for that regime.
    """
    if t == 0 or g == 0:
        return -np.inf
    if roots_needed(N, g, t) > MAX_ROOTS:
        raise RootError("too many zeros needed at this t; use the extended precision product")
    total = -np.inf
    q_max = 63
    done = 0
    while True:
        roots = quantization_roots(g, t, q_max).x
        terms = lnl_tanh(N * roots[done:] / 2)
        total = np.logaddexp(total, logsumexp(terms))
        done = roots.size
        # terms decrease; stop once the newest is negligible
        if terms[-1] < total + np.log(1e-17):
            return float(total)
        if done > MAX_ROOTS:
            raise RootError("zero product did not converge")
        q_max = 2 * q_max + 1


def theta_root_product(N: int, g: float, t: float) -> float:
    """``log Theta = sum_q log tanh(N x_q / 2)``."""
    return -float(np.exp(root_lnl(N, g, t)))


def product_lnl_mp(N: int, g: float, t: float, digits: int = 30) -> float:
    """``log(-log Theta)`` from the momentum product in extended precision.

    The sector factors are of size ``lam t`` while their alternating sum can
    be smaller by many orders of magnitude, so the working precision is
    raised until the sum is resolved to ``digits`` significant digits.
    """
    if N % 2:
        raise ValueError("N must be even")
    if t == 0 or g == 0:
        return -np.inf
    dps = int(np.log10(t * N * (1 + g) + 10)) + digits + 10
    if g < 1:
        dps += int(-N * np.log10(g))
    while True:
        with mpmath.workdps(dps):
            gm, tm = mpmath.mpf(g), mpmath.mpf(t)
            total = tm
            for l in range(1, N):
                k = mpmath.pi * l / N
                lam = mpmath.sqrt((1 - gm) ** 2 + 4 * gm * mpmath.sin(k / 2) ** 2)
                A = (1 - gm * mpmath.cos(k)) / lam
                term = lam * tm + mpmath.log((1 + A) / 2 + mpmath.exp(-2 * lam * tm) * (1 - A) / 2)
                total += term if l % 2 == 0 else -term
            scale = tm * N * (1 + gm)
            # resolved when the sum sits well above the rounding level
            if total < 0 and -total > scale * mpmath.mpf(10) ** (digits - dps):
                return float(mpmath.log(-total))
        if dps > 20000:
            raise RootError("extended precision product did not resolve Theta")
        dps *= 2


def exact_lnl(N: int, g: float, t: float) -> float:
    """``log(-log Theta)`` by the zero product, or the extended product when
    the zero product would need too many terms."""
    if roots_needed(N, g, t) > MAX_ROOTS:
        return product_lnl_mp(N, g, t)
    return root_lnl(N, g, t)


def entropy_exact(N: int, g: float, t: float) -> float:
    """Exact closed-chain entropy."""
    return float(entropy_from_lnl(exact_lnl(N, g, t)))


# ---------------------------------------------------------------------------
# asymptotics


@dataclass(frozen=True)
class Asymptote:
    log_theta: float
    entropy: float
    valid: bool


def mixed_asymptote_pbc(N: int, g: float, t: float) -> Asymptote:
    """Mixed phase, ``g < 1``.

    ``log Theta = -sqrt((1-g^2)/(pi N)) e^(-N K) (t + 2/(1-g^2))`` and
    ``S = N K - log(t / sqrt N) + (1/2) log(4 pi / (1 - g^2))``, ``K = -log g``.
    Valid for ``2/(1-g^2) <= t <= e^(N K)``.
    """
    if not 0 < g < 1:
        raise ValueError("mixed phase requires 0 < g < 1")
    K = -np.log(g)
    a = 1 - g * g
    log_theta = -np.sqrt(a / (np.pi * N)) * np.exp(-N * K) * (t + 2 / a)
    S = N * K - np.log(t / np.sqrt(N)) + 0.5 * np.log(4 * np.pi / a)
    valid = 2 / a <= t <= np.exp(N * K)
    return Asymptote(float(log_theta), float(S), bool(valid))


def late_time_pbc(N: int, g: float, t: float, gamma: float = 1.0) -> float:
    """Late-time mixed-phase entropy ``2 exp(-gamma t sqrt((1-g^2)/(pi N)) e^(-N K))``."""
    K = -np.log(g)
    return float(2 * np.exp(-gamma * t * np.sqrt((1 - g * g) / (np.pi * N)) * np.exp(-N * K)))


@dataclass(frozen=True)
class PurifyingResult:
    entropy: float
    x0: float | None
    large_t: float
    fallback: bool


def purifying_entropy(N: int, g: float, t: float) -> PurifyingResult:
    """Purifying phase, ``g > 1``: entropy ``N x_0``.

    ``x_0`` in ``(0, log g)`` solves
    ``tanh(t sqrt(1+g^2-2g cosh x)) = sqrt(1+g^2-2g cosh x)/(g cosh x - 1)``
    and approaches ``(2(g-1)/g) e^(-t(g-1))`` at large ``t``. When no such
    root exists the exact zero product is returned with ``fallback=True``.
    """
    if g <= 1:
        raise ValueError("purifying phase requires g > 1")
    large = N * 2 * (g - 1) / g * np.exp(-t * (g - 1))
    x0 = _inner_root(g, t) if t > 0 else None
    if x0 is None:
        return PurifyingResult(entropy_exact(N, g, t), None, float(large), True)
    return PurifyingResult(float(N * x0), x0, float(large), False)


@dataclass(frozen=True)
class CriticalResult:
    exact: float
    early: float
    intermediate: float
    late: float
    regime: str


def critical_forms(N: int, t: float) -> tuple[float, float, float, str]:
    """Closed forms of the entropy at ``g = 1``.

    Returns ``(early, intermediate, late, regime)`` with
    ``early = -N log(t/2)`` for ``t << 1``, ``intermediate = N pi / (2t + 1)``
    for ``1 << t << N`` and ``late = 2 sqrt 2 exp(-pi t / (4N))`` for
    ``t >> N``. ``regime`` names the form appropriate at ``t``.
    """
    early = -N * np.log(t / 2)
    inter = N * np.pi / (2 * t + 1)
    late = 2 * np.sqrt(2) * np.exp(-np.pi * t / (4 * N))
    if t < 0.1:
        regime = "early"
    elif t < N:
        regime = "intermediate"
    else:
        regime = "late"
    return float(early), float(inter), float(late), regime


def critical_entropy(N: int, t: float) -> CriticalResult:
    """Exact entropy at ``g = 1`` together with :func:`critical_forms`."""
    exact = entropy_exact(N, 1.0, t)
    return CriticalResult(exact, *critical_forms(N, t))
