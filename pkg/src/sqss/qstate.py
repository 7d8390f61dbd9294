"""Exact complex-amplitude state math for one qubit and qubit-plus-probe systems.

Amplitudes are double-precision complex numbers.  Tolerances below are fixed
constants: every protocol state is exactly representable, so they only absorb
floating-point rounding.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

NORM_ATOL = 1e-12
UNITARY_ATOL = 1e-10
DENSITY_ATOL = 1e-10
MIN_BRANCH_PROB = 1e-15
BRANCH_COND_ATOL = 1e-12

_INV_SQRT2 = 1.0 / np.sqrt(2.0)


class Basis(Enum):
    Z = "Z"
    X = "X"


class PrepState(Enum):
    ZERO = "0"
    ONE = "1"
    PLUS = "+"
    MINUS = "-"


def basis_of(s: PrepState) -> Basis:
    """Preparation basis of one of the four protocol states."""
    return Basis.Z if s in (PrepState.ZERO, PrepState.ONE) else Basis.X


def expected_outcome(s: PrepState) -> int:
    """Measurement outcome bit an undisturbed state yields in its own basis.

    X-basis outcomes use the global convention 0 = plus, 1 = minus.
    """
    return 0 if s in (PrepState.ZERO, PrepState.PLUS) else 1


@dataclass(frozen=True)
class PureState:
    """Single-qubit state (amp0, amp1) in the computational basis."""

    amp0: complex
    amp1: complex

    def __post_init__(self):
        norm_sq = abs(self.amp0) ** 2 + abs(self.amp1) ** 2
        if abs(norm_sq - 1.0) > 1e-9:
            raise ValueError(f"state not normalized: |amp|^2 = {norm_sq!r}")

    def vector(self) -> np.ndarray:
        return np.array([self.amp0, self.amp1], dtype=complex)


_PREP_AMPS = {
    PrepState.ZERO: (1.0 + 0j, 0.0 + 0j),
    PrepState.ONE: (0.0 + 0j, 1.0 + 0j),
    PrepState.PLUS: (_INV_SQRT2 + 0j, _INV_SQRT2 + 0j),
    PrepState.MINUS: (_INV_SQRT2 + 0j, -_INV_SQRT2 + 0j),
}


def prepare(s: PrepState) -> PureState:
    """Canonical amplitude vector for one of the four protocol states."""
    a0, a1 = _PREP_AMPS[s]
    return PureState(a0, a1)


def zstate(bit: int) -> PureState:
    return prepare(PrepState.ONE if bit else PrepState.ZERO)


def xstate(bit: int) -> PureState:
    return prepare(PrepState.MINUS if bit else PrepState.PLUS)


def basis_state(basis: Basis, bit: int) -> PureState:
    return zstate(bit) if basis is Basis.Z else xstate(bit)


def _draw(p0: float, rng: np.random.Generator) -> int:
    """Draw a bit with P(0) = p0, never selecting a branch below MIN_BRANCH_PROB."""
    if p0 < MIN_BRANCH_PROB:
        return 1
    if 1.0 - p0 < MIN_BRANCH_PROB:
        return 0
    return 0 if rng.random() < p0 else 1


def measure(state: PureState, basis: Basis, rng: np.random.Generator) -> tuple[int, PureState]:
    """Born-rule measurement with collapse onto the outcome's basis state."""
    v = state.vector()
    if basis is Basis.Z:
        p0 = abs(v[0]) ** 2
    else:
        p0 = abs((v[0] + v[1]) * _INV_SQRT2) ** 2
    outcome = _draw(p0, rng)
    return outcome, basis_state(basis, outcome)


@dataclass(frozen=True)
class CompositeState:
    """Joint state of the traveling qubit and a d-dimensional probe.

    Amplitudes are indexed (qubit_bit, probe_index): entry ``bit * d + j``.
    """

    amps: np.ndarray
    dim_probe: int

    def __post_init__(self):
        amps = np.asarray(self.amps, dtype=complex)
        if amps.shape != (2 * self.dim_probe,):
            raise ValueError(f"expected {2 * self.dim_probe} amplitudes, got {amps.shape}")
        norm_sq = float(np.sum(np.abs(amps) ** 2))
        if abs(norm_sq - 1.0) > 1e-9:
            raise ValueError(f"composite state not normalized: |amp|^2 = {norm_sq!r}")
        amps = amps.copy()
        amps.setflags(write=False)
        object.__setattr__(self, "amps", amps)

    def qubit_block(self, bit: int) -> np.ndarray:
        d = self.dim_probe
        return self.amps[bit * d:(bit + 1) * d]


def lift(state: PureState, dim_probe: int, probe_index: int = 0) -> CompositeState:
    """Tensor a bare qubit with a probe basis state |e_probe_index>."""
    amps = np.zeros(2 * dim_probe, dtype=complex)
    amps[0 * dim_probe + probe_index] = state.amp0
    amps[1 * dim_probe + probe_index] = state.amp1
    return CompositeState(amps, dim_probe)


def check_unitary(u: np.ndarray) -> None:
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise ValueError(f"unitary must be square, got shape {u.shape}")
    resid = np.linalg.norm(u.conj().T @ u - np.eye(u.shape[0]))
    if resid > UNITARY_ATOL:
        raise ValueError(f"matrix is not unitary: ||u^H u - I|| = {resid:.3e}")


def apply_unitary(state: CompositeState, u: np.ndarray) -> CompositeState:
    """Left-multiply the amplitude vector by a unitary on qubit (x) probe."""
    u = np.asarray(u, dtype=complex)
    if u.shape != (2 * state.dim_probe, 2 * state.dim_probe):
        raise ValueError(
            f"unitary shape {u.shape} does not match state dimension {2 * state.dim_probe}")
    check_unitary(u)
    return CompositeState(u @ state.amps, state.dim_probe)


def _x_branch(state: CompositeState, bit: int) -> np.ndarray:
    """Unnormalized probe vector of the |+> (bit 0) or |-> (bit 1) qubit branch."""
    sign = -1.0 if bit else 1.0
    return (state.qubit_block(0) + sign * state.qubit_block(1)) * _INV_SQRT2


def branch_probability(state: CompositeState, basis: Basis, bit: int) -> float:
    if basis is Basis.Z:
        return float(np.sum(np.abs(state.qubit_block(bit)) ** 2))
    return float(np.sum(np.abs(_x_branch(state, bit)) ** 2))


def _collapse(state: CompositeState, basis: Basis, bit: int) -> CompositeState:
    d = state.dim_probe
    amps = np.zeros(2 * d, dtype=complex)
    if basis is Basis.Z:
        probe = state.qubit_block(bit)
        norm = np.linalg.norm(probe)
        amps[bit * d:(bit + 1) * d] = probe / norm
    else:
        probe = _x_branch(state, bit)
        probe = probe / np.linalg.norm(probe)
        qubit = xstate(bit).vector()
        amps[0:d] = qubit[0] * probe
        amps[d:2 * d] = qubit[1] * probe
    return CompositeState(amps, d)


def measure_qubit(state: CompositeState, basis: Basis,
                  rng: np.random.Generator) -> tuple[int, CompositeState]:
    """Measure the qubit factor, projecting and renormalizing the joint state."""
    p0 = branch_probability(state, basis, 0)
    outcome = _draw(p0, rng)
    return outcome, _collapse(state, basis, outcome)


@dataclass(frozen=True)
class DensityMatrix:
    """Validated density matrix (Hermitian, unit trace, positive semidefinite)."""

    entries: np.ndarray
    dim: int = field(init=False)

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"density matrix must be square, got {m.shape}")
        if np.linalg.norm(m - m.conj().T) > DENSITY_ATOL:
            raise ValueError("density matrix is not Hermitian")
        tr = np.trace(m)
        if abs(tr - 1.0) > DENSITY_ATOL:
            raise ValueError(f"density matrix trace is {tr!r}, expected 1")
        eigs = np.linalg.eigvalsh(m)
        if eigs.min() < -DENSITY_ATOL:
            raise ValueError(f"density matrix has negative eigenvalue {eigs.min():.3e}")
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)
        object.__setattr__(self, "dim", m.shape[0])


def probe_density(state: CompositeState,
                  condition: tuple[Basis, int] | None = None) -> DensityMatrix:
    """Reduced probe state, optionally conditioned on a qubit outcome.

    Conditioning projects the qubit onto the given (basis, bit) branch first
    and renormalizes; a branch with probability below BRANCH_COND_ATOL is an
    error rather than a silently garbage state.
    """
    if condition is not None:
        basis, bit = condition
        p = branch_probability(state, basis, bit)
        if p < BRANCH_COND_ATOL:
            raise ValueError(
                f"conditioning on branch ({basis.value}, {bit}) with probability {p:.3e}")
        state = _collapse(state, basis, bit)
    b0 = state.qubit_block(0)
    b1 = state.qubit_block(1)
    rho = np.outer(b0, b0.conj()) + np.outer(b1, b1.conj())
    return DensityMatrix(rho)


def trace_distance(a: DensityMatrix, b: DensityMatrix) -> float:
    """Half the sum of absolute eigenvalues of (a - b)."""
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    eigs = np.linalg.eigvalsh(a.entries - b.entries)
    return float(0.5 * np.sum(np.abs(eigs)))
