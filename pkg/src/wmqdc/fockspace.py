"""Truncated Fock space of a single bosonic mode.

Units are fixed so that hbar = 1 and the zero-point fluctuation sigma = 1:
position is ``c + c^dag`` (so expectations are <q>/sigma) and momentum is
``-i (c - c^dag)`` (so expectations are <p>/(hbar / 2 sigma)).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import expm
from scipy.special import gammainc

from .errors import CutoffMismatchError, DegeneratePostselectionError, TruncationError

TAIL_TOL = 1e-12
NORM_TOL = 1e-10
DEGENERATE_NORM = 1e-14
MIN_CUTOFF = 16
AUTO_TAIL = 1e-14

OPERATOR_LABELS = ("annihilation", "creation", "position", "momentum", "number", "custom")


@dataclass(frozen=True, eq=False)
class FockVector:
    """Complex amplitudes over number states ``0..cutoff``."""

    amplitudes: np.ndarray

    # let numpy scalars defer to __rmul__
    __array_ufunc__ = None

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex)
        if amps.ndim != 1 or amps.size < 2:
            raise ValueError("amplitudes must be a 1-D sequence of length >= 2")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def cutoff(self) -> int:
        return self.amplitudes.size - 1

    @classmethod
    def basis(cls, n: int, cutoff: int) -> FockVector:
        if not 0 <= n <= cutoff:
            raise ValueError(f"number state {n} outside 0..{cutoff}")
        amps = np.zeros(cutoff + 1, dtype=complex)
        amps[n] = 1.0
        return cls(amps)

    @classmethod
    def vacuum(cls, cutoff: int) -> FockVector:
        return cls.basis(0, cutoff)

    def norm_sq(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> FockVector:
        nrm = self.norm()
        if nrm < DEGENERATE_NORM:
            raise DegeneratePostselectionError(f"cannot normalize state with norm {nrm:.3e}")
        return FockVector(self.amplitudes / nrm)

    def tail_weight(self) -> float:
        return float(abs(self.amplitudes[-1]) ** 2)

    def check_tail(self, tol: float = TAIL_TOL) -> FockVector:
        """Return self, or raise if the top Fock level carries weight > ``tol``."""
        if self.tail_weight() > tol * max(self.norm_sq(), 1.0):
            raise TruncationError(
                f"weight {self.tail_weight():.3e} at cutoff {self.cutoff} exceeds {tol:.0e}"
            )
        return self

    def __getitem__(self, n):
        return self.amplitudes[n]

    def __len__(self):
        return self.amplitudes.size

    def _other(self, other: FockVector) -> np.ndarray:
        if not isinstance(other, FockVector):
            return NotImplemented
        _require_same_cutoff(self, other)
        return other.amplitudes

    def __add__(self, other):
        amps = self._other(other)
        if amps is NotImplemented:
            return amps
        return FockVector(self.amplitudes + amps)

    def __sub__(self, other):
        amps = self._other(other)
        if amps is NotImplemented:
            return amps
        return FockVector(self.amplitudes - amps)

    def __mul__(self, scalar):
        if not np.isscalar(scalar):
            return NotImplemented
        return FockVector(self.amplitudes * scalar)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        if not np.isscalar(scalar):
            return NotImplemented
        return FockVector(self.amplitudes / scalar)

    def __neg__(self):
        return FockVector(-self.amplitudes)

    def __repr__(self):
        return f"FockVector(cutoff={self.cutoff}, norm={self.norm():.6g})"


@dataclass(frozen=True, eq=False)
class ModeOperator:
    """Dense operator on the truncated mode space."""

    matrix: np.ndarray
    label: str = "custom"

    def __post_init__(self):
        mat = np.array(self.matrix, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError("operator matrix must be square")
        if self.label not in OPERATOR_LABELS:
            raise ValueError(f"unknown operator label {self.label!r}")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    @property
    def cutoff(self) -> int:
        return self.matrix.shape[0] - 1

    def apply(self, state: FockVector) -> FockVector:
        if state.cutoff != self.cutoff:
            raise CutoffMismatchError(f"operator cutoff {self.cutoff} != state cutoff {state.cutoff}")
        return FockVector(self.matrix @ state.amplitudes)

    def __matmul__(self, state: FockVector) -> FockVector:
        return self.apply(state)


def _require_same_cutoff(a: FockVector, b: FockVector) -> None:
    if a.cutoff != b.cutoff:
        raise CutoffMismatchError(f"cutoff mismatch: {a.cutoff} vs {b.cutoff}")


def _check_cutoff(cutoff: int) -> int:
    if int(cutoff) != cutoff or cutoff < 1:
        raise ValueError(f"cutoff must be a positive integer, got {cutoff!r}")
    return int(cutoff)


@lru_cache(maxsize=64)
def _lowering(cutoff: int) -> np.ndarray:
    mat = np.diag(np.sqrt(np.arange(1, cutoff + 1, dtype=float)), k=1).astype(complex)
    mat.setflags(write=False)
    return mat


def annihilation(cutoff: int) -> ModeOperator:
    return ModeOperator(_lowering(_check_cutoff(cutoff)), "annihilation")


def creation(cutoff: int) -> ModeOperator:
    return ModeOperator(_lowering(_check_cutoff(cutoff)).T, "creation")


def position(cutoff: int) -> ModeOperator:
    """``q / sigma = c + c^dag``."""
    c = _lowering(_check_cutoff(cutoff))
    return ModeOperator(c + c.T, "position")


def momentum(cutoff: int) -> ModeOperator:
    """``p / (hbar / 2 sigma) = -i (c - c^dag)``."""
    c = _lowering(_check_cutoff(cutoff))
    return ModeOperator(-1j * (c - c.T), "momentum")


def number(cutoff: int) -> ModeOperator:
    return ModeOperator(np.diag(np.arange(_check_cutoff(cutoff) + 1, dtype=float)), "number")


def poisson_tail(mean: float, cutoff: int) -> float:
    """Probability that a Poisson variable of the given mean exceeds ``cutoff``."""
    if mean == 0:
        return 0.0
    return float(gammainc(cutoff + 1, mean))


def auto_cutoff(beta_max: float, tail: float = AUTO_TAIL) -> int:
    """Smallest cutoff (at least ``MIN_CUTOFF``) whose coherent tail is below ``tail``."""
    mean = abs(beta_max) ** 2
    n = 1
    while poisson_tail(mean, n) >= tail:
        n += 1
    return max(MIN_CUTOFF, n)


def coherent_state(beta: complex, cutoff: int) -> FockVector:
    """Truncated coherent state ``|beta>``.

    Raises TruncationError when the discarded Poisson tail or the weight on
    the top level exceeds ``TAIL_TOL``.
    """
    cutoff = _check_cutoff(cutoff)
    beta = complex(beta)
    amps = np.empty(cutoff + 1, dtype=complex)
    amps[0] = np.exp(-abs(beta) ** 2 / 2)
    for n in range(1, cutoff + 1):
        amps[n] = amps[n - 1] * beta / np.sqrt(n)
    missing = poisson_tail(abs(beta) ** 2, cutoff)
    if missing > TAIL_TOL:
        raise TruncationError(f"cutoff {cutoff} discards weight {missing:.3e} of |{beta}>")
    return FockVector(amps).check_tail()


def displacement_matrix(eta: complex, cutoff: int) -> np.ndarray:
    """``exp(eta c^dag - eta* c)`` by scaling-and-squaring on the truncated space."""
    c = _lowering(_check_cutoff(cutoff))
    eta = complex(eta)
    return expm(eta * c.T - np.conj(eta) * c)


def displace(state: FockVector, eta: complex) -> FockVector:
    out = FockVector(displacement_matrix(eta, state.cutoff) @ state.amplitudes)
    return out.check_tail()


def inner(a: FockVector, b: FockVector) -> complex:
    """``<a|b>``, conjugate-linear in ``a``."""
    _require_same_cutoff(a, b)
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def expect(state: FockVector, op: ModeOperator) -> complex:
    """``<psi|A|psi>`` without normalization."""
    return inner(state, op.apply(state))


def normalized_expect(state: FockVector, op: ModeOperator) -> complex:
    nrm_sq = state.norm_sq()
    if np.sqrt(nrm_sq) < DEGENERATE_NORM:
        raise DegeneratePostselectionError(f"state norm {np.sqrt(nrm_sq):.3e} is degenerate")
    return expect(state, op) / nrm_sq


def fix_global_phase(state: FockVector) -> FockVector:
    """Rotate so the largest-magnitude amplitude is real and positive."""
    idx = int(np.argmax(np.abs(state.amplitudes)))
    amp = state.amplitudes[idx]
    if amp == 0:
        return state
    return FockVector(state.amplitudes * (abs(amp) / amp))


def fidelity(a: FockVector, b: FockVector) -> float:
    """Overlap ``|<a|b>|^2`` of the normalized states."""
    return abs(inner(a, b)) ** 2 / (a.norm_sq() * b.norm_sq())


@dataclass(frozen=True)
class ConditionalResult:
    """Unnormalized conditional pointer state with its success probability."""

    state: FockVector
    probability: float

    @classmethod
    def from_projection(cls, raw: FockVector, probability: float | None = None) -> ConditionalResult:
        """Fix the global phase and reject degenerate (vanishing) projections."""
        if raw.norm() < DEGENERATE_NORM:
            raise DegeneratePostselectionError(
                f"conditional state norm {raw.norm():.3e} below {DEGENERATE_NORM:.0e}"
            )
        if probability is None:
            probability = raw.norm_sq()
        return cls(fix_global_phase(raw), float(probability))

    @property
    def cutoff(self) -> int:
        return self.state.cutoff

    def normalized(self) -> FockVector:
        return self.state.normalized()

    def expect(self, op: ModeOperator) -> complex:
        return normalized_expect(self.state, op)

    def mean_q(self) -> float:
        return self.expect(position(self.cutoff)).real

    def mean_p(self) -> float:
        return self.expect(momentum(self.cutoff)).real
