import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from purification import fock
from purification.gaussian_fermions import (
    correlation_matrix,
    entropy_from_lnl,
    entropy_from_log_theta,
    gaussian_overlap,
    gaussian_product,
    grand_dynamical_matrix,
    log_return_weight,
    log_tanh,
    lnl_tanh,
    log_theta_correlation,
    reference_correlation,
    spectral_decomposition,
    theta_correlation,
    theta_to_entropy,
)
from purification.obc_analytics import bulk_wavevectors
from purification.pbc_analytics import dispersion
from purification.spin_oracle import ChainSpec, _log_return_weight, log_theta_dense

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def _pair(N, seed, scale=0.7):
    rng = np.random.default_rng(seed)
    W1 = fock.random_generator(N, rng, scale)
    W2 = fock.random_generator(N, rng, scale)
    return fock.gaussian_state(W1), fock.gaussian_state(W2)


# --- entropy conversions ----------------------------------------------------


def test_theta_to_entropy_basic():
    assert theta_to_entropy(0.0) == 0.0
    x = np.array([1e-3, 0.2, 1.0, 4.0])
    np.testing.assert_allclose(theta_to_entropy(np.tanh(x)), 2 * x, rtol=1e-13)
    with pytest.raises(ValueError):
        theta_to_entropy(1.0)


def test_entropy_near_theta_one():
    lt = -1e-12
    with mpmath.workdps(50):
        th = mpmath.exp(mpmath.mpf(lt))
        ref = float(mpmath.log((1 + th) / (1 - th)))
    assert entropy_from_log_theta(lt) == pytest.approx(ref, rel=1e-9)
    assert entropy_from_lnl(np.log(1e-12)) == pytest.approx(ref, rel=1e-9)
    # far below double precision the lnl route still works: S ~ log 2 - lnl
    assert entropy_from_lnl(-1000.0) == pytest.approx(np.log(2) + 1000.0, rel=1e-15)


@settings(max_examples=60, deadline=None)
@given(x=st.floats(1e-6, 15.0))
def test_entropy_routes_agree(x):
    lt = float(log_tanh(x))
    assert entropy_from_log_theta(lt) == pytest.approx(2 * x, rel=1e-9)
    assert entropy_from_lnl(float(lnl_tanh(x))) == pytest.approx(2 * x, rel=1e-9)
    with mpmath.workdps(40):
        ref = mpmath.log(mpmath.tanh(mpmath.mpf(x)))
        ref_lnl = mpmath.log(-ref)
    assert lt == pytest.approx(float(ref), rel=1e-13)
    assert float(lnl_tanh(x)) == pytest.approx(float(ref_lnl), rel=1e-13, abs=1e-13)


# --- Gaussian algebra against the Fock oracle -------------------------------


def test_fock_correlation_is_tanh():
    rng = np.random.default_rng(0)
    W = fock.random_generator(2, rng)
    G = fock.correlation(fock.gaussian_state(W))
    w, V = np.linalg.eigh(W)
    np.testing.assert_allclose(G, (V * np.tanh(w / 2)) @ V.T, atol=1e-12)


def test_overlap_maximally_mixed():
    for N in (1, 2, 3):
        Z = np.zeros((2 * N, 2 * N))
        assert gaussian_overlap(Z, Z) == pytest.approx(-N * np.log(2), rel=1e-14)


def test_overlap_pure_state_is_one():
    G = reference_correlation(3)
    assert gaussian_overlap(G, G) == pytest.approx(0.0, abs=1e-14)


@pytest.mark.parametrize("N", [1, 2, 3])
def test_overlap_and_product_vs_fock(N):
    for seed in range(5):
        r1, r2 = _pair(N, 1000 * N + seed)
        G1, G2 = fock.correlation(r1), fock.correlation(r2)
        assert gaussian_overlap(G1, G2) == pytest.approx(np.log(abs(np.trace(r1 @ r2))), abs=1e-10)
        np.testing.assert_allclose(gaussian_product(G1, G2), fock.correlation(r1 @ r2), atol=1e-10)


def test_product_identity_element():
    r1, _ = _pair(3, 5)
    G = fock.correlation(r1)
    np.testing.assert_allclose(gaussian_product(G, np.zeros_like(G)), G, atol=1e-14)
    np.testing.assert_allclose(gaussian_product(np.zeros_like(G), G), G, atol=1e-14)


@settings(max_examples=15, deadline=None)
@given(seed=seeds)
def test_product_associative_and_overlap_consistent(seed):
    rng = np.random.default_rng(seed)
    Gs = [fock.correlation(fock.gaussian_state(fock.random_generator(3, rng, 0.5))) for _ in range(3)]
    a = gaussian_product(gaussian_product(Gs[0], Gs[1]), Gs[2])
    b = gaussian_product(Gs[0], gaussian_product(Gs[1], Gs[2]))
    np.testing.assert_allclose(a, b, atol=1e-10)
    assert gaussian_overlap(Gs[0], Gs[1]) == pytest.approx(gaussian_overlap(Gs[1], Gs[0]), abs=1e-12)
    # Tr(r0 r1 r2) two ways
    G01 = gaussian_product(Gs[0], Gs[1])
    lhs = gaussian_overlap(G01, Gs[2]) + gaussian_overlap(Gs[0], Gs[1])
    G12 = gaussian_product(Gs[1], Gs[2])
    rhs = gaussian_overlap(Gs[0], G12) + gaussian_overlap(Gs[1], Gs[2])
    assert lhs == pytest.approx(rhs, abs=1e-10)


# --- grand dynamical matrix and spectrum ------------------------------------


def test_particle_hole_symmetry():
    for b in ("obc", "pbc"):
        D = grand_dynamical_matrix(ChainSpec(10, 0.7, boundary=b))
        assert D.particle_hole_residual() < 1e-12


def test_spectrum_matches_dense_single_particle():
    for b, par in (("obc", 1), ("pbc", 1), ("pbc", -1)):
        D = grand_dynamical_matrix(ChainSpec(8, 0.6, boundary=b), parity=par)
        sp = spectral_decomposition(D)
        np.testing.assert_allclose(sp.O.T @ D.matrix @ sp.O,
                                   np.diag(np.concatenate([sp.lam, -sp.lam])), atol=1e-12)
        w = np.sort(np.linalg.eigvalsh(D.matrix))
        np.testing.assert_allclose(w, np.sort(np.concatenate([sp.lam, -sp.lam])), atol=1e-12)


def test_pbc_spectrum_is_dispersion():
    N, g = 8, 0.6
    sp = spectral_decomposition(grand_dynamical_matrix(ChainSpec(N, g), parity=1))
    k = np.arange(1, 2 * N, 2) * np.pi / N
    np.testing.assert_allclose(np.sort(sp.lam), np.sort(dispersion(g, k)), atol=1e-12)


def test_obc_spectrum_at_bulk_wavevectors():
    N, g = 10, 0.7
    sp = spectral_decomposition(grand_dynamical_matrix(ChainSpec(N, g, boundary="obc")))
    lam = np.sort(sp.lam)
    k = bulk_wavevectors(N, g).k
    np.testing.assert_allclose(lam[1:], np.sort(dispersion(g, k)), atol=1e-10)


def test_g0_open_chain():
    sp = spectral_decomposition(grand_dynamical_matrix(ChainSpec(8, 0.0, boundary="obc")))
    lam = np.sort(sp.lam)
    assert lam[0] == pytest.approx(0.0, abs=1e-14)
    np.testing.assert_allclose(lam[1:], 1.0, atol=1e-14)


def test_eta_pairing():
    D = grand_dynamical_matrix(ChainSpec(8, 0.4, boundary="obc"))
    sp = spectral_decomposition(D)
    N = 8
    eta = np.block([[np.zeros((N, N)), np.eye(N)], [np.eye(N), np.zeros((N, N))]])
    np.testing.assert_allclose(sp.O[:, N:], eta @ sp.O[:, :N], atol=1e-14)


def test_edge_mode_full_relative_precision():
    # the edge singular value is ~ 0.75 * 2^-40 at N = 40; compare with mpmath
    N, g = 40, 0.5
    D = grand_dynamical_matrix(ChainSpec(N, g, boundary="obc"))
    lam0 = np.min(spectral_decomposition(D).lam)
    with mpmath.workdps(60):
        B = mpmath.matrix(D.coupling.tolist())
        s = mpmath.svd_r(B, compute_uv=False)
        ref = min(s)
    assert lam0 == pytest.approx(float(ref), rel=1e-10)


# --- correlation matrices and Theta -----------------------------------------


def test_correlation_zero_time():
    D = grand_dynamical_matrix(ChainSpec(6, 0.5, boundary="obc"))
    assert np.all(correlation_matrix(D, 0.0) == 0)


def test_correlation_bounds():
    D = grand_dynamical_matrix(ChainSpec(20, 0.5, boundary="obc"))
    w = np.linalg.eigvalsh(correlation_matrix(D, 100.0))
    assert np.all(np.abs(w) <= 1.0 + 1e-12)
    # every mode except the edge one is saturated
    assert np.sum(np.abs(np.abs(w) - 1) > 1e-12) == 2


def test_saturated_form():
    N, g, t = 16, 0.5, 200.0
    D = grand_dynamical_matrix(ChainSpec(N, g, boundary="obc"))
    sp = spectral_decomposition(D)
    m = np.argmin(sp.lam)
    th = -np.ones(N)
    th[m] = np.tanh(-t * sp.lam[m] / 2)
    G = (sp.O * np.concatenate([th, -th])) @ sp.O.T
    np.testing.assert_allclose(correlation_matrix(D, t, sp), G, atol=1e-6)


def test_return_weight_matches_sector_diagonalization():
    spec = ChainSpec(8, 0.8, boundary="obc")
    sp = spectral_decomposition(grand_dynamical_matrix(spec))
    for t in (0.5, 3.0, 20.0):
        # the fermion Hamiltonian carries no constant; compare differences
        a = log_return_weight(sp, False, t) - log_return_weight(sp, True, t)
        b = _log_return_weight(spec, -1, t)[0] - _log_return_weight(spec, +1, t)[0]
        assert a == pytest.approx(b, abs=1e-10)


def test_theta_correlation_matches_dense():
    spec = ChainSpec(8, 0.5, boundary="obc")
    t = np.array([0.5, 1.0, 2.0, 5.0])
    np.testing.assert_allclose(log_theta_correlation(spec, t), log_theta_dense(spec, t), atol=1e-8)
    assert theta_correlation(spec, 0.0) == 1.0


@settings(max_examples=20, deadline=None)
@given(g=st.floats(0.1, 2.5), N=st.sampled_from([4, 8, 12, 20]))
def test_theta_correlation_monotone(g, N):
    lt = log_theta_correlation(ChainSpec(N, g, boundary="obc"), np.linspace(0, 30, 31))
    assert np.all(lt <= 0)
    assert np.all(np.diff(lt) <= 1e-12)


def test_rejects_periodic_and_finite_d():
    with pytest.raises(ValueError):
        log_theta_correlation(ChainSpec(4, 0.5, boundary="pbc"), 1.0)
    with pytest.raises(ValueError):
        grand_dynamical_matrix(ChainSpec(4, 0.5, d=3))
