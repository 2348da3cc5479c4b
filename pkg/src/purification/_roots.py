"""Vectorized bracketed bisection."""

from __future__ import annotations

import numpy as np

from .errors import RootError


def bisect(fun, lo, hi, max_iter: int = 200, log_space: bool = False):
    """Solve ``fun(x) = 0`` elementwise on brackets ``[lo, hi]``.

    ``fun(lo)`` and ``fun(hi)`` must have opposite signs. Iteration runs until
    the midpoint no longer moves in floating point, which for a well-posed
    bracket gives the root to the last bit.

    Parameters
    ----------
    fun : callable
        Vectorized function of an array.
    lo, hi : array_like
        Bracket ends, broadcast together.
    log_space : bool
        Bisect in ``log x`` (brackets must be positive); use for roots that
        may be many orders of magnitude smaller than the bracket.
    """
    lo, hi = np.broadcast_arrays(np.asarray(lo, float), np.asarray(hi, float))
    lo, hi = lo.copy(), hi.copy()
    flo = fun(lo)
    fhi = fun(hi)
    bad = (np.sign(flo) * np.sign(fhi)) > 0
    if np.any(bad):
        raise RootError(f"{int(bad.sum())} brackets without a sign change")
    neg_lo = flo < 0
    for _ in range(max_iter):
        if log_space:
            mid = np.sqrt(lo * hi)
        else:
            mid = lo + 0.5 * (hi - lo)
        done = (mid == lo) | (mid == hi)
        if np.all(done):
            break
        fm = fun(mid)
        go_right = (fm < 0) == neg_lo
        exact = fm == 0
        lo = np.where(go_right & ~done, mid, lo)
        hi = np.where(~go_right & ~done, mid, hi)
        lo = np.where(exact, mid, lo)
        hi = np.where(exact, mid, hi)
    fl, fh = np.abs(fun(lo)), np.abs(fun(hi))
    return np.where(fl <= fh, lo, hi)
