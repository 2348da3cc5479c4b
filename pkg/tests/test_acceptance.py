"""Acceptance suite: one pass/fail line per criterion.

Run with ``pytest tests/test_acceptance.py`` (the lines are printed in the
terminal summary) or directly with ``python tests/test_acceptance.py``.
Criteria that are known not to hold are marked ``xfail(strict=True)``: the
computation still runs and its measured value is printed as FAIL.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass

import numpy as np
import pytest

from purification import fock, micro_rates, obc_analytics as oa, pbc_analytics as pa
from purification import replica_algebra as ra
from purification.gaussian_fermions import (
    gaussian_overlap,
    gaussian_product,
    log_theta_correlation,
)
from purification.spin_oracle import ChainSpec, log_theta_dense

GRID_N = (4, 6, 8, 10)
GRID_G = (0.3, 0.5, 1.0, 1.5, 2.0)
GRID_T = (0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0)
I2, S2 = (0, 1), (1, 0)


@dataclass
class Result:
    number: int
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} criterion {self.number:2d} {self.name}: {self.detail}"


RESULTS: dict[int, Result] = {}


def _record(res: Result) -> Result:
    RESULTS[res.number] = res
    return res


def _slope(x, y):
    return float(np.polyfit(x, y, 1)[0])


# --- criteria -----------------------------------------------------------------


def criterion_1():
    t0 = time.perf_counter()
    err = 0.0
    for N, g in itertools.product(GRID_N, GRID_G):
        ref = log_theta_dense(ChainSpec(N, g, boundary="pbc"), np.array(GRID_T))
        got = np.array([pa.theta_product(N, g, t) for t in GRID_T])
        err = max(err, float(np.max(np.abs(got - ref))))
    dt = time.perf_counter() - t0
    return Result(1, "periodic product vs dense", err < 1e-8 and dt < 60,
                  f"max |diff| = {err:.2e} (< 1e-8), runtime {dt:.1f} s (< 60 s)")


def criterion_2():
    t0 = time.perf_counter()
    err = 0.0
    for N, g in itertools.product(GRID_N, GRID_G):
        spec = ChainSpec(N, g, boundary="obc")
        ref = log_theta_dense(spec, np.array(GRID_T))
        got = log_theta_correlation(spec, np.array(GRID_T))
        err = max(err, float(np.max(np.abs(got - ref))))
    dt = time.perf_counter() - t0
    return Result(2, "open correlation vs dense", err < 1e-8 and dt < 60,
                  f"max |diff| = {err:.2e} (< 1e-8), runtime {dt:.1f} s (< 60 s)")


def criterion_3():
    err = 0.0
    for N in range(4, 41, 4):
        for g in (0.3, 0.5, 0.8, 1.0):
            for t in (0.5, 2.0, 10.0, 50.0):
                err = max(err, abs(pa.theta_root_product(N, g, t) - pa.theta_product(N, g, t)))
    return Result(3, "root product vs momentum product", err < 1e-8,
                  f"max |diff| = {err:.2e} over N = 4..40 (< 1e-8)")


def _plateau_errors(N, g, ts):
    spec = ChainSpec(N, g, boundary="obc")
    ref = log_theta_correlation(spec, ts)
    got = np.array([oa.theta_exact_obc(N, g, t).log_theta for t in ts])
    return np.abs(got - ref) / np.abs(got)


def criterion_4():
    g = 0.5
    worst, onset = 0.0, 0.0
    for N in (20, 28, 36):
        lo, hi = oa.plateau_window(N, g)
        ts = np.geomspace(lo, hi, 40)
        err = _plateau_errors(N, g, ts)
        worst = max(worst, float(err.max()))
        bad = ts[err >= 1e-4]
        if bad.size:
            onset = max(onset, float(bad.max() / lo))
    ok = worst < 1e-4
    detail = f"max relative diff {worst:.2e} (< 1e-4) on [3/(1-g), 0.1/lam0]"
    if not ok:
        detail += f"; holds from {onset:.1f}x the lower edge on"
    return Result(4, "open saturated product vs correlation", ok, detail)


def criterion_5():
    g, ts = 0.5, np.geomspace(50, 500, 12)
    Ns = (40, 50, 60, 70, 80)

    def pbc_gap(N):
        return max(abs(pa.entropy_exact(N, g, t) - pa.mixed_asymptote_pbc(N, g, t).entropy) for t in ts)

    win = np.geomspace(3 * oa.t_c(60, g), np.exp(60 * -np.log(g)) / 10, 12)
    variant = oa.select_prefactor_variant(60, g, win)

    def obc_gap(N):
        return max(abs(oa.entropy_exact_obc(N, g, t) - oa.mixed_asymptote_obc(N, g, t, variant).entropy_from_theta)
                   for t in ts)

    pg = [pbc_gap(N) for N in Ns]
    og = [obc_gap(N) for N in Ns]
    p_ok = pg[Ns.index(60)] < 0.1 and all(np.diff(pg) < 0)
    o_ok = og[Ns.index(60)] < 0.1 and all(np.diff(og) < 0)
    detail = (f"periodic gap at N=60 {pg[2]:.3f}, N=40..80 {'shrinking' if all(np.diff(pg) < 0) else 'growing'} "
              f"({pg[0]:.3f} -> {pg[-1]:.3f}); open ({variant} prefactor) gap at N=60 {og[2]:.2e}, "
              f"{'shrinking' if all(np.diff(og) < 0) else 'not shrinking'}")
    return Result(5, "mixed-phase asymptotes", p_ok and o_ok, detail), p_ok, o_ok


def criterion_6():
    g, N = 0.5, 60
    NK = -N * np.log(g)
    t_p = np.geomspace(20 / (1 - g * g), np.exp(NK) / 10, 30)
    s_p = _slope(np.log(t_p), [pa.entropy_exact(N, g, t) for t in t_p])
    t_o = np.geomspace(3 * oa.t_c(N, g), np.exp(NK) / 10, 30)
    s_o = _slope(np.log(t_o), [oa.entropy_exact_obc(N, g, t) for t in t_o])
    ok = abs(s_p + 1) <= 0.02 and abs(s_o + 1) <= 0.02
    return Result(6, "logarithmic decay", ok, f"dS/dlog t periodic {s_p:.4f}, open {s_o:.4f} (-1 +- 0.02)")


def criterion_7():
    g, t = 0.5, 300.0
    Ns = np.arange(20, 81, 4)
    diff = [pa.entropy_exact(N, g, t) - oa.entropy_exact_obc(N, g, t) for N in Ns]
    a = _slope(np.log(Ns), diff)
    return Result(7, "boundary contrast", 0.4 <= a <= 0.6, f"log N coefficient {a:.4f} in [0.4, 0.6] at t = {t:g}")


def criterion_8():
    N, g = 40, 2.0
    t = np.linspace(5, 15, 21)
    rate = -_slope(t, np.log([pa.entropy_exact(N, g, x) for x in t]))
    return Result(8, "purifying decay rate", abs(rate / (g - 1) - 1) <= 0.02,
                  f"rate {rate:.5f} vs g - 1 = {g - 1:g} (2%)")


def criterion_9():
    t = np.linspace(10, 40, 13)
    r = [pa.entropy_exact(400, 1.0, x) * (2 * x + 1) / (400 * np.pi) for x in t]
    S = pa.entropy_exact(200, 1.0, 0.01)
    early = abs(S + 200 * np.log(0.005)) / S
    late = pa.critical_entropy(16, 200.0)
    late_err = abs(late.late / late.exact - 1)
    ok = 0.95 <= min(r) and max(r) <= 1.05 and early < 0.01 and late_err <= 0.05
    return Result(9, "critical point", ok,
                  f"intermediate ratio in [{min(r):.4f}, {max(r):.4f}], early {early:.2e} (< 1%), "
                  f"late {late_err:.2e} (< 5%)")


def criterion_10():
    worst = 0.0
    for d in (2, 3, 4):
        rng = np.random.default_rng(1000 + d)
        c = d**4 / (d * d - 1) ** 2
        for _ in range(100):
            H = micro_rates.random_hamiltonian(d, rng)
            r = micro_rates.coupling_rates(H)
            loc, inter = micro_rates.split_local_interaction(micro_rates.pauli_decompose(H))
            hl = loc.h.copy()
            hl[0, 0, 0, 0] = 0
            wg, wt = 2 * c * np.sum(np.abs(inter.h) ** 2), c * np.sum(np.abs(hl) ** 2)
            worst = max(worst, abs(r.gamma - wg) / wg, abs(r.tumbling - wt) / wt)
    return Result(10, "rate identities", worst < 1e-10, f"max relative error {worst:.2e} (< 1e-10)")


def criterion_11():
    worst, cross = 0.0, 0.0
    for d in (2, 3):
        rng = np.random.default_rng(2000 + d)
        for _ in range(20):
            H = micro_rates.random_hamiltonian(d, rng).matrix
            om = micro_rates.entangling_power(H)
            c2, _ = ra.dt2_coefficient(lambda dt: ra.contraction_oracle(H, dt, 2, S2, I2, S2, I2))
            worst = max(worst, abs(c2.real + 2 * om) / (2 * om))
            c2b, _ = ra.dt2_coefficient(lambda dt: ra.contraction_oracle(H, dt, 2, S2, I2, I2, S2))
            cross = max(cross, abs(c2b) / d**4)
    ok = worst < 1e-4 and cross < 1e-8
    return Result(11, "two-replica contraction", ok,
                  f"-2 Omega relative error {worst:.2e} (< 1e-4), cross element {cross:.2e} d^4 (< 1e-8 d^4)")


def criterion_12():
    exact = True
    om = 1.7
    for q, want in (((S2, I2, S2, I2), -2 * om), ((I2, S2, I2, S2), -2 * om),
                    ((S2, I2, I2, S2), 0.0), ((I2, S2, S2, I2), 0.0)):
        for d in (2, 3, 5):
            got = ra.replica_correction(2, *q, d=d, omega=om)[1]
            # exact up to the rounding of d^-4 d^4
            exact &= abs(got - want) <= 4 * np.finfo(float).eps * abs(want)
    rng = np.random.default_rng(3000)
    G = ra.symmetric_group(3)
    H = micro_rates.random_hamiltonian(2, rng).matrix
    om = micro_rates.entangling_power(H)
    worst, n = 0.0, 0
    while n < 10:
        q = [G[i] for i in rng.integers(0, 6, size=4)]
        coeff = ra.replica_correction(3, *q, d=2, omega=om)[1]
        if coeff == 0:
            continue
        c2, _ = ra.dt2_coefficient(lambda dt: ra.contraction_oracle(H, dt, 3, *q))
        worst = max(worst, abs(c2.real - coeff) / abs(coeff))
        n += 1
    ok = exact and worst < 1e-4
    return Result(12, "replica chain formula", ok,
                  f"k=2 exact: {exact}; k=3 relative error {worst:.2e} on 10 quadruples (< 1e-4)")


def criterion_13():
    dev = ra.gamma_projection_deviation(4, 1.0, 0.5, 2, 1.0, [10.0, 100.0, 1000.0])
    ratio = dev[2] / dev[0]
    ok = dev[2] < dev[1] < dev[0] and ratio < 1e-2
    return Result(13, "large tumbling projection", ok,
                  f"deviations {dev[0]:.3e}, {dev[1]:.3e}, {dev[2]:.3e}; ratio {ratio:.4f} (< 0.01)")


def criterion_14():
    worst = 0.0
    rng = np.random.default_rng(4000)
    for N in (1, 2, 3):
        for _ in range(50):
            r1 = fock.gaussian_state(fock.random_generator(N, rng, 0.7))
            r2 = fock.gaussian_state(fock.random_generator(N, rng, 0.7))
            G1, G2 = fock.correlation(r1), fock.correlation(r2)
            worst = max(worst, abs(gaussian_overlap(G1, G2) - np.log(abs(np.trace(r1 @ r2)))),
                        float(np.max(np.abs(gaussian_product(G1, G2) - fock.correlation(r1 @ r2)))))
    return Result(14, "Gaussian algebra vs Fock space", worst < 1e-10, f"max |diff| = {worst:.2e} (< 1e-10)")


def run_all():
    out = []
    for k in range(1, 15):
        res = globals()[f"criterion_{k}"]()
        if isinstance(res, tuple):
            res = res[0]
        out.append(_record(res))
    return out


# --- pytest wrappers ------------------------------------------------------------


@pytest.mark.parametrize("k", [1, 2, 3, 6, 7, 8, 9, 10, 11, 12, 14])
def test_criterion(k):
    res = _record(globals()[f"criterion_{k}"]())
    assert res.passed, res.line()


@pytest.mark.xfail(strict=True, reason="bulk transient at the lower window edge; see notes")
def test_criterion_4():
    res = _record(criterion_4())
    assert res.passed, res.line()


def test_criterion_4_after_transient():
    # the product agrees with the correlation route once the bulk modes saturate
    g = 0.5
    for N in (20, 28, 36):
        lo, hi = oa.plateau_window(N, g)
        assert np.all(_plateau_errors(N, g, np.geomspace(6 * lo, hi, 20)) < 1e-4)


@pytest.mark.xfail(strict=True, reason="periodic asymptote misses a sqrt(N) offset; see notes")
def test_criterion_5():
    res, p_ok, o_ok = criterion_5()
    _record(res)
    assert o_ok, res.line()
    assert p_ok, res.line()


def test_criterion_5_open_part():
    res, _, o_ok = criterion_5()
    assert o_ok, res.line()


@pytest.mark.xfail(strict=True, reason="deviation ratio 0.012 at tumbling 10 -> 1000; see notes")
def test_criterion_13():
    res = _record(criterion_13())
    assert res.passed, res.line()


def test_criterion_13_ordering():
    dev = ra.gamma_projection_deviation(4, 1.0, 0.5, 2, 1.0, [10.0, 100.0, 1000.0])
    assert dev[2] < dev[1] < dev[0]


if __name__ == "__main__":
    for r in run_all():
        print(r.line())
