"""Generalized Pauli decomposition of a two-qudit gate Hamiltonian and the
effective rates it induces in the averaged two-replica dynamics.

For a swap-symmetric Hermitian ``H`` acting on two qudits of dimension ``d``
the module reports

* ``omega``: the entangling power ``d^2 tr(H^2) - 2 d tr(tr_1(H)^2) + tr(H)^2``,
* ``gamma``: the information transfer rate ``2 omega / (d^2 - 1)^2``,
* ``tumbling``: the relaxation rate of the measurement states,
  ``2 d tr(tr_1(H)^2) / (d^2 - 1)^2`` (identity part removed),
* ``g``: the dimensionless field ``2 f / gamma`` for a measurement rate ``f``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

HERMITIAN_TOL = 1e-12
OMEGA_CLAMP = 1e-10


def clock_shift(d: int) -> tuple[np.ndarray, np.ndarray]:
    """Return the shift ``X|j> = |j+1>`` and clock ``Z|j> = w^j |j>`` matrices."""
    X = np.roll(np.eye(d), 1, axis=0)
    Z = np.diag(np.exp(2j * np.pi * np.arange(d) / d))
    return X, Z


def pauli_operator(d: int, a: int, b: int) -> np.ndarray:
    """Single-qudit generalized Pauli operator ``X^a Z^b``."""
    X, Z = clock_shift(d)
    return np.linalg.matrix_power(X, a % d) @ np.linalg.matrix_power(Z, b % d)


def swap_operator(d: int) -> np.ndarray:
    """SWAP on two qudits, ``|ij> -> |ji>``."""
    P = np.zeros((d * d, d * d))
    for i in range(d):
        for j in range(d):
            P[j * d + i, i * d + j] = 1.0
    return P


def partial_trace_first(M: np.ndarray, d: int) -> np.ndarray:
    """Trace out the first qudit of a ``d^2 x d^2`` operator."""
    return np.einsum("ijik->jk", M.reshape(d, d, d, d))


@dataclass(frozen=True)
class QuditHamiltonian:
    """Two-qudit Hamiltonian with the symmetry checks applied on construction.

    Parameters
    ----------
    d : int
        Local dimension, at least 2.
    matrix : array_like
        ``d^2 x d^2`` Hermitian and swap-symmetric matrix.
    real_only : bool
        If True, complex entries are rejected (the averaged theory assumes a
        real gate Hamiltonian).
    """

    d: int
    matrix: np.ndarray = field(repr=False)
    real_only: bool = False

    def __post_init__(self):
        d = int(self.d)
        if d < 2:
            raise ValidationError("dimension", float(d), "d must be at least 2")
        M = np.asarray(self.matrix, dtype=complex)
        if M.shape != (d * d, d * d):
            raise ValidationError(
                "shape", float("nan"), f"expected {(d * d, d * d)}, got {M.shape}"
            )
        scale = max(np.linalg.norm(M), 1.0)
        herm = np.linalg.norm(M - M.conj().T) / scale
        if herm > HERMITIAN_TOL:
            raise ValidationError("hermiticity", herm)
        S = swap_operator(d)
        sym = np.linalg.norm(S @ M @ S - M) / scale
        if sym > HERMITIAN_TOL:
            raise ValidationError("swap-symmetry", sym)
        if self.real_only:
            imag = np.linalg.norm(M.imag) / scale
            if imag > HERMITIAN_TOL:
                raise ValidationError("real-entries", imag)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "matrix", M)


@dataclass(frozen=True)
class PauliCoefficients:
    """Coefficients ``h[a, b, s, t]`` of ``H = sum h X^aZ^b (x) X^sZ^t``."""

    d: int
    h: np.ndarray = field(repr=False)

    def reconstruct(self) -> np.ndarray:
        d = self.d
        P = [[pauli_operator(d, a, b) for b in range(d)] for a in range(d)]
        out = np.zeros((d * d, d * d), dtype=complex)
        for a, b, s, t in zip(*np.nonzero(self.h)):
            out += self.h[a, b, s, t] * np.kron(P[a][b], P[s][t])
        return out


@dataclass(frozen=True)
class CouplingRates:
    """Effective rates of the averaged two-replica dynamics."""

    d: int
    omega: float
    gamma: float
    tumbling: float
    f: float | None = None

    @property
    def g(self) -> float:
        if self.f is None:
            raise ValueError("no measurement rate supplied")
        if self.gamma <= 0:
            raise ValidationError(
                "entangling", self.gamma, "non-entangling Hamiltonian, g = 2f/gamma undefined"
            )
        return 2.0 * self.f / self.gamma


def _as_hamiltonian(H, d: int | None = None) -> QuditHamiltonian:
    if isinstance(H, QuditHamiltonian):
        return H
    M = np.asarray(H)
    if d is None:
        d = int(round(np.sqrt(M.shape[0])))
    return QuditHamiltonian(d, M)


def pauli_decompose(H) -> PauliCoefficients:
    """Expand ``H`` in the two-qudit generalized Pauli basis.

    The coefficient of ``X^aZ^b (x) X^sZ^t`` is
    ``tr((X^aZ^b (x) X^sZ^t)^dagger H) / d^2``.

    Parameters
    ----------
    H : QuditHamiltonian or array_like

    Returns
    -------
    PauliCoefficients
    """
    H = _as_hamiltonian(H)
    d = H.d
    P = [[pauli_operator(d, a, b) for b in range(d)] for a in range(d)]
    h = np.zeros((d, d, d, d), dtype=complex)
    for a in range(d):
        for b in range(d):
            for s in range(d):
                for t in range(d):
                    B = np.kron(P[a][b], P[s][t])
                    h[a, b, s, t] = np.vdot(B, H.matrix) / d**2
    return PauliCoefficients(d, h)


def split_local_interaction(c: PauliCoefficients):
    """Split coefficients into the local and the interacting sector.

    The local part keeps entries with ``(a, b) = (0, 0)`` or
    ``(s, t) = (0, 0)``; the interacting part keeps everything else.
    """
    mask = np.zeros(c.h.shape, dtype=bool)
    mask[0, 0, :, :] = True
    mask[:, :, 0, 0] = True
    h_loc = np.where(mask, c.h, 0)
    h_int = np.where(mask, 0, c.h)
    return PauliCoefficients(c.d, h_loc), PauliCoefficients(c.d, h_int)


def entangling_power(H) -> float:
    """Entangling power ``d^2 tr(H^2) - 2 d tr(tr_1(H)^2) + tr(H)^2``.

    Invariant under adding multiples of the identity and under local basis
    changes. Small negative values from roundoff are clamped to zero.
    """
    H = _as_hamiltonian(H)
    d, M = H.d, H.matrix
    h1 = partial_trace_first(M, d)
    val = (
        d**2 * np.trace(M @ M) - 2 * d * np.trace(h1 @ h1) + np.trace(M) ** 2
    ).real
    scale = max(d**2 * np.trace(M @ M).real, 1.0)
    if val < 0:
        if val < -OMEGA_CLAMP * scale:
            raise ArithmeticError(f"entangling power negative beyond roundoff: {val}")
        val = 0.0
    return float(val)


def coupling_rates(H, f: float | None = None) -> CouplingRates:
    """Rates ``(omega, gamma, tumbling)`` of a gate Hamiltonian.

    Parameters
    ----------
    H : QuditHamiltonian or array_like
    f : float, optional
        Measurement rate; enables ``CouplingRates.g``.

    Notes
    -----
    The identity component of ``H`` is removed before evaluating the
    tumbling rate, since a global energy shift cannot relax anything.
    """
    H = _as_hamiltonian(H)
    if f is not None and f < 0:
        raise ValueError("measurement rate must be non-negative")
    d, M = H.d, H.matrix
    omega = entangling_power(H)
    M0 = M - np.trace(M) / d**2 * np.eye(d * d)
    h1 = partial_trace_first(M0, d)
    tumb = max(float((2 * d * np.trace(h1 @ h1)).real / (d * d - 1) ** 2), 0.0)
    gamma = 2.0 * omega / (d * d - 1) ** 2
    return CouplingRates(d, omega, gamma, tumb, f)


def random_hamiltonian(d: int, rng: np.random.Generator, real: bool = False) -> QuditHamiltonian:
    """Gaussian random Hermitian, swap-symmetric two-qudit Hamiltonian."""
    n = d * d
    A = rng.normal(size=(n, n))
    if not real:
        A = A + 1j * rng.normal(size=(n, n))
    H = A + A.conj().T
    S = swap_operator(d)
    return QuditHamiltonian(d, 0.25 * (H + S @ H @ S))
